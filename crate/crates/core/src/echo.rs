//! Stage-1 probing and mono-static backscatter echoes.
//!
//! During ER `k`'s slot the AP repeats the uniform probe `x` for `tau`
//! symbols and receives `Y = b h h^T X + Z`. Noise is drawn column by
//! column (symbol-major), each complex entry from two independent
//! zero-mean normals of variance `noise_power / 2`, real part first.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelVector;
use crate::error::{invalid, Result};
use crate::geometry::ArrayGeometry;

/// Received echo matrix for one slot (`N x tau`).
#[derive(Debug, Clone, PartialEq)]
pub struct EchoBatch {
    samples: DMatrix<Complex64>,
    noise_power: f64,
}

impl EchoBatch {
    pub fn samples(&self) -> &DMatrix<Complex64> {
        &self.samples
    }

    pub fn slot_len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }
}

/// Constant probe with every entry `sqrt(p_max / N)`, so `||x||^2 = p_max`.
pub fn uniform_probe(geom: &ArrayGeometry, p_max: f64) -> Result<Vec<Complex64>> {
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(invalid(format!("probe power must be positive, got {p_max}")));
    }
    let n = geom.len();
    Ok(vec![Complex64::new((p_max / n as f64).sqrt(), 0.0); n])
}

/// Simulates one slot of `slot_len` echo symbols.
pub fn simulate_echo<R: Rng + ?Sized>(
    h: &ChannelVector,
    b: Complex64,
    x: &[Complex64],
    slot_len: usize,
    noise_power: f64,
    rng: &mut R,
) -> Result<EchoBatch> {
    if h.len() != x.len() {
        return Err(invalid(format!("channel length {} != probe length {}", h.len(), x.len())));
    }
    if slot_len == 0 {
        return Err(invalid("slot length must be at least one symbol"));
    }
    if !(noise_power >= 0.0 && noise_power.is_finite()) {
        return Err(invalid(format!("noise power must be non-negative, got {noise_power}")));
    }

    let hx: Complex64 = h.iter().zip(x).map(|(h, x)| h * x).sum();
    let gain = b * hx;
    let std = (noise_power / 2.0).sqrt();
    let n = h.len();
    let mut samples = DMatrix::from_element(n, slot_len, Complex64::new(0.0, 0.0));
    for t in 0..slot_len {
        for i in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            samples[(i, t)] = h[i] * gain + Complex64::new(std * re, std * im);
        }
    }
    Ok(EchoBatch { samples, noise_power })
}

/// Column sum `y_bar` of an echo batch.
pub fn aggregate(batch: &EchoBatch) -> Vec<Complex64> {
    let s = batch.samples();
    (0..s.nrows()).map(|i| s.row(i).iter().sum()).collect()
}
