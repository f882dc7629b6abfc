//! Near-field spherical-wavefront channels with visibility-region masking.
//!
//! The steering entry for element `n` toward a point `l` is
//! `a_n(l) = lambda / (4 pi r_n) * exp(-j 2 pi r_n / lambda)` with
//! `r_n = |l_n - l|`; both amplitude and phase vary across the aperture.

use std::f64::consts::PI;
use std::ops::{Deref, Range};

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::geometry::ArrayGeometry;

/// Contiguous set of visible elements `start..=end` (1-based, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VisibilityRegion {
    start: usize,
    end: usize,
}

impl VisibilityRegion {
    /// Checks `1 <= start < end <= n`.
    pub fn new(start: usize, end: usize, n: usize) -> Result<Self> {
        if start == 0 || start >= end || end > n {
            return Err(invalid(format!(
                "visibility region ({start}, {end}) must satisfy 1 <= start < end <= {n}"
            )));
        }
        Ok(Self { start, end })
    }

    /// The whole array, `(1, n)`.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(1, n, n)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// Number of visible elements, `end - start + 1`.
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: usize) -> bool {
        (self.start..=self.end).contains(&n)
    }

    /// 0-based slice range of the visible elements.
    pub fn range(&self) -> Range<usize> {
        self.start - 1..self.end
    }

    /// Minimum-size check `end - start >= ceil(eta * n)`.
    pub fn satisfies_min_size(&self, eta: f64, n: usize) -> bool {
        self.end - self.start >= min_span(eta, n)
    }
}

/// `ceil(eta * n)`, tolerant to representation error in `eta * n`.
pub fn min_span(eta: f64, n: usize) -> usize {
    (eta * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Cartesian axis for position derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// One energy receiver: true position, VR, reflection coefficient and
/// energy weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ErState {
    pub position: Vector3<f64>,
    pub vr: VisibilityRegion,
    pub reflection: Complex64,
    pub weight: f64,
}

impl ErState {
    pub fn new(
        position: Vector3<f64>,
        vr: VisibilityRegion,
        reflection: Complex64,
        weight: f64,
    ) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(invalid(format!("energy weight must be non-negative, got {weight}")));
        }
        Ok(Self { position, vr, reflection, weight })
    }
}

/// Complex N-vector channel (true `h_k` or constructed `h_hat_k`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(Vec<Complex64>);

impl ChannelVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// `||h||^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }
}

impl Deref for ChannelVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

/// Steering entry and element distance for one element.
#[inline]
pub(crate) fn steering_entry(
    wavelength: f64,
    element: &Vector3<f64>,
    l: &Vector3<f64>,
) -> (Complex64, f64) {
    let r = (element - l).norm();
    let amp = wavelength / (4.0 * PI * r);
    // Reduce the phase to one cycle before scaling by 2 pi.
    let phase = -2.0 * PI * (r / wavelength).fract();
    (Complex64::from_polar(amp, phase), r)
}

fn check_clear(geom: &ArrayGeometry, l: &Vector3<f64>) -> Result<()> {
    match geom.positions().iter().position(|p| p == l) {
        Some(i) => Err(Error::SingularGeometry { index: i + 1 }),
        None => Ok(()),
    }
}

/// Near-field steering vector `a(l)`.
pub fn steering_vector(geom: &ArrayGeometry, l: &Vector3<f64>) -> Result<Vec<Complex64>> {
    check_clear(geom, l)?;
    let lambda = geom.wavelength();
    Ok(geom.positions().iter().map(|p| steering_entry(lambda, p, l).0).collect())
}

/// VR cover vector `g(vr)`: 1 inside the region, 0 outside.
pub fn vr_cover(vr: &VisibilityRegion, n: usize) -> Result<Vec<f64>> {
    if vr.end() > n {
        return Err(invalid(format!("visibility region end {} exceeds N = {n}", vr.end())));
    }
    Ok((1..=n).map(|i| if vr.contains(i) { 1.0 } else { 0.0 }).collect())
}

/// Non-stationary channel `a(l) ⊙ g(vr)` for a point and region.
pub fn masked_channel(
    geom: &ArrayGeometry,
    l: &Vector3<f64>,
    vr: &VisibilityRegion,
) -> Result<ChannelVector> {
    let a = steering_vector(geom, l)?;
    let g = vr_cover(vr, geom.len())?;
    Ok(ChannelVector(a.into_iter().zip(g).map(|(a, g)| a * g).collect()))
}

/// Non-stationary channel of an energy receiver.
pub fn channel(geom: &ArrayGeometry, er: &ErState) -> Result<ChannelVector> {
    masked_channel(geom, &er.position, &er.vr)
}

/// Unmasked position derivative `d a(l) / d u`.
pub fn steering_derivative(
    geom: &ArrayGeometry,
    l: &Vector3<f64>,
    axis: Axis,
) -> Result<Vec<Complex64>> {
    check_clear(geom, l)?;
    let lambda = geom.wavelength();
    let k = 2.0 * PI / lambda;
    let u = axis.index();
    Ok(geom
        .positions()
        .iter()
        .map(|p| {
            let (a, r) = steering_entry(lambda, p, l);
            let du = p[u] - l[u];
            a * Complex64::new(du / (r * r), k * du / r)
        })
        .collect())
}

/// Masked position derivative `(d a(l) / d u) ⊙ g(vr)`.
pub fn channel_derivative(
    geom: &ArrayGeometry,
    l: &Vector3<f64>,
    vr: &VisibilityRegion,
    axis: Axis,
) -> Result<Vec<Complex64>> {
    let d = steering_derivative(geom, l, axis)?;
    let g = vr_cover(vr, geom.len())?;
    Ok(d.into_iter().zip(g).map(|(d, g)| d * g).collect())
}
