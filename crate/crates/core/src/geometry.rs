//! Uniform planar array (UPA) geometry in the `yoz` plane.
//!
//! Elements are indexed `n = 1..=N` in y-major order:
//! `n = (i_z - 1) * n_y + i_y` with `i_y in 1..=n_y`, `i_z in 1..=n_z`.
//! A contiguous run of linear indices therefore covers whole horizontal
//! rows of the aperture (plus partial rows at either end).

use nalgebra::Vector3;

use crate::error::{invalid, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    n_y: usize,
    n_z: usize,
    carrier_freq: f64,
    wavelength: f64,
    spacing: f64,
    positions: Vec<Vector3<f64>>,
}

impl ArrayGeometry {
    /// Builds an `n_y x n_z` UPA centred on the origin. `spacing` defaults
    /// to half a wavelength.
    pub fn upa(n_y: usize, n_z: usize, carrier_freq: f64, spacing: Option<f64>) -> Result<Self> {
        if n_y == 0 || n_z == 0 {
            return Err(invalid(format!("array dimensions must be positive, got {n_y}x{n_z}")));
        }
        if !(carrier_freq > 0.0 && carrier_freq.is_finite()) {
            return Err(invalid(format!("carrier frequency must be positive, got {carrier_freq}")));
        }
        let wavelength = SPEED_OF_LIGHT / carrier_freq;
        let spacing = spacing.unwrap_or(wavelength / 2.0);
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(format!("element spacing must be positive, got {spacing}")));
        }

        let cy = (n_y as f64 - 1.0) / 2.0;
        let cz = (n_z as f64 - 1.0) / 2.0;
        let mut positions = Vec::with_capacity(n_y * n_z);
        for iz in 0..n_z {
            for iy in 0..n_y {
                positions.push(Vector3::new(
                    0.0,
                    (iy as f64 - cy) * spacing,
                    (iz as f64 - cz) * spacing,
                ));
            }
        }

        Ok(Self { n_y, n_z, carrier_freq, wavelength, spacing, positions })
    }

    /// Total element count `N = n_y * n_z`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// All element positions, ordered by linear index (`positions()[n - 1]`).
    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    /// Position of element `n` (1-based).
    pub fn element_position(&self, n: usize) -> Result<Vector3<f64>> {
        if n == 0 || n > self.len() {
            return Err(invalid(format!("element index {n} outside 1..={}", self.len())));
        }
        Ok(self.positions[n - 1])
    }

    /// Maps `(i_y, i_z)` (both 1-based) to the linear index `n`.
    pub fn linear_index(&self, i_y: usize, i_z: usize) -> Result<usize> {
        if i_y == 0 || i_y > self.n_y || i_z == 0 || i_z > self.n_z {
            return Err(invalid(format!(
                "grid index ({i_y}, {i_z}) outside {}x{}",
                self.n_y, self.n_z
            )));
        }
        Ok((i_z - 1) * self.n_y + i_y)
    }

    /// Inverse of [`linear_index`](Self::linear_index).
    pub fn grid_index(&self, n: usize) -> Result<(usize, usize)> {
        if n == 0 || n > self.len() {
            return Err(invalid(format!("element index {n} outside 1..={}", self.len())));
        }
        Ok(((n - 1) % self.n_y + 1, (n - 1) / self.n_y + 1))
    }
}
