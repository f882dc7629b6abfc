//! Weighted-harvested-power transmit covariance design.
//!
//! Maximising `sum_k beta_k h_k^H R h_k` subject to `tr(R) <= P` over PSD
//! `R` has the rank-one optimum `R = P v v^H`, with `v` the principal
//! eigenvector of `A = sum_k beta_k h_k h_k^H`, and optimal value
//! `P lambda_max(A)`: for any feasible `R`, `tr(A R) <= lambda_max tr(R)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::channel::ChannelVector;
use crate::error::{invalid, Error, Result};

/// Relative Hermitian-asymmetry tolerance for dense inputs.
const HERMITIAN_TOL: f64 = 1e-8;
/// Eigen residual tolerance relative to `||A||_F`.
const RESIDUAL_TOL: f64 = 1e-10;

/// Anything that acts as a transmit covariance for received-power scoring.
pub trait TransmitCovariance {
    /// `h^H R h`.
    fn received_power(&self, h: &[Complex64]) -> Result<f64>;
    fn trace(&self) -> f64;
    fn dim(&self) -> usize;
}

/// Rank-one optimum of the weighted power problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution {
    /// Unit-norm direction; largest-magnitude entry is real positive.
    pub direction: Vec<Complex64>,
    pub power: f64,
    /// `sum_k beta_k h_k^H R h_k` on the design channels.
    pub objective: f64,
    /// `lambda_max(A)`.
    pub certificate: f64,
}

impl BeamformerSolution {
    /// Dense `R = power v v^H`.
    pub fn covariance(&self) -> DMatrix<Complex64> {
        let n = self.direction.len();
        DMatrix::from_fn(n, n, |i, j| self.direction[i] * self.direction[j].conj() * self.power)
    }
}

impl TransmitCovariance for BeamformerSolution {
    fn received_power(&self, h: &[Complex64]) -> Result<f64> {
        if h.len() != self.direction.len() {
            return Err(invalid(format!("channel length {} != beam length {}", h.len(), self.direction.len())));
        }
        let ip: Complex64 = h.iter().zip(&self.direction).map(|(h, v)| h.conj() * v).sum();
        Ok(self.power * ip.norm_sqr())
    }

    fn trace(&self) -> f64 {
        self.power
    }

    fn dim(&self) -> usize {
        self.direction.len()
    }
}

/// `R = (P / N) I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicCovariance {
    pub p_max: f64,
    pub n: usize,
}

impl TransmitCovariance for IsotropicCovariance {
    fn received_power(&self, h: &[Complex64]) -> Result<f64> {
        if h.len() != self.n {
            return Err(invalid(format!("channel length {} != N = {}", h.len(), self.n)));
        }
        Ok(self.p_max / self.n as f64 * h.iter().map(|c| c.norm_sqr()).sum::<f64>())
    }

    fn trace(&self) -> f64 {
        self.p_max
    }

    fn dim(&self) -> usize {
        self.n
    }
}

pub fn isotropic_covariance(p_max: f64, n: usize) -> Result<IsotropicCovariance> {
    if !(p_max > 0.0) || n == 0 {
        return Err(invalid(format!("isotropic covariance needs p_max > 0 and N >= 1 (got {p_max}, {n})")));
    }
    Ok(IsotropicCovariance { p_max, n })
}

fn check_weights(channels: &[ChannelVector], weights: &[f64]) -> Result<usize> {
    if channels.len() != weights.len() {
        return Err(invalid(format!("{} channels but {} weights", channels.len(), weights.len())));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(invalid(format!("energy weights must be non-negative, got {w}")));
    }
    let n = channels.first().map_or(0, |h| h.len());
    if n == 0 || channels.iter().any(|h| h.len() != n) {
        return Err(invalid("channels must be non-empty and of equal length"));
    }
    Ok(n)
}

/// `A = sum_k beta_k h_k h_k^H`.
pub fn weighted_channel_matrix(channels: &[ChannelVector], weights: &[f64]) -> Result<DMatrix<Complex64>> {
    let n = check_weights(channels, weights)?;
    let mut a = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (h, &w) in channels.iter().zip(weights) {
        for j in 0..n {
            let hj = h[j].conj() * w;
            for i in 0..n {
                a[(i, j)] += h[i] * hj;
            }
        }
    }
    Ok(a)
}

fn normalise_phase(v: &mut [Complex64]) {
    let mut best = 0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > v[best].norm() {
            best = i;
        }
    }
    let m = v[best].norm();
    if m > 0.0 {
        let rot = v[best].conj() / m;
        for c in v.iter_mut() {
            *c *= rot;
        }
        v[best] = Complex64::new(v[best].norm(), 0.0);
    }
}

fn zero_solution(n: usize, p_max: f64) -> BeamformerSolution {
    let mut direction = vec![Complex64::new(0.0, 0.0); n];
    direction[0] = Complex64::new(1.0, 0.0);
    BeamformerSolution { direction, power: p_max, objective: 0.0, certificate: 0.0 }
}

fn check_pmax(p_max: f64) -> Result<()> {
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(invalid(format!("transmit power must be positive, got {p_max}")));
    }
    Ok(())
}

/// Solves the weighted power problem for a dense Hermitian `A`.
pub fn solve_p4(a: &DMatrix<Complex64>, p_max: f64) -> Result<BeamformerSolution> {
    check_pmax(p_max)?;
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(invalid("weighted channel matrix must be square and non-empty"));
    }
    let scale = a.norm();
    let asym = (a - a.adjoint()).norm();
    if asym > HERMITIAN_TOL * scale {
        return Err(invalid(format!("matrix is not Hermitian (asymmetry {asym:.3e})")));
    }
    if scale == 0.0 {
        return Ok(zero_solution(n, p_max));
    }

    let eig = SymmetricEigen::new((a + a.adjoint()).unscale(2.0));
    let top = eig.eigenvalues.imax();
    let lambda = eig.eigenvalues[top];
    let mut v: Vec<Complex64> = eig.eigenvectors.column(top).iter().copied().collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
    normalise_phase(&mut v);

    let vv = nalgebra::DVector::from_column_slice(&v);
    let residual = (a * &vv - &vv * Complex64::new(lambda, 0.0)).norm();
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::NotConverged { residual, tolerance: RESIDUAL_TOL * scale });
    }
    let objective = p_max * (vv.adjoint() * a * &vv)[(0, 0)].re;
    Ok(BeamformerSolution { direction: v, power: p_max, objective, certificate: lambda })
}

/// Same optimum computed through the `K x K` Gram matrix of the weighted
/// channels, avoiding the dense `N x N` eigenproblem.
pub fn solve_p4_factored(channels: &[ChannelVector], weights: &[f64], p_max: f64) -> Result<BeamformerSolution> {
    check_pmax(p_max)?;
    let n = check_weights(channels, weights)?;
    let k = channels.len();
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| {
        let ip: Complex64 = channels[i].iter().zip(channels[j].iter()).map(|(a, b)| a.conj() * b).sum();
        ip * (sw[i] * sw[j])
    });
    let scale = gram.norm();
    if scale == 0.0 {
        return Ok(zero_solution(n, p_max));
    }
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.imax();
    let lambda = eig.eigenvalues[top];
    let u = eig.eigenvectors.column(top);

    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for (kk, h) in channels.iter().enumerate() {
        let c = u[kk] * sw[kk];
        for (vi, hi) in v.iter_mut().zip(h.iter()) {
            *vi += hi * c;
        }
    }
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
    normalise_phase(&mut v);

    // residual of A v = lambda v through the factors
    let mut av = vec![Complex64::new(0.0, 0.0); n];
    let mut objective = 0.0;
    for (h, &w) in channels.iter().zip(weights) {
        let ip: Complex64 = h.iter().zip(&v).map(|(h, v)| h.conj() * v).sum();
        objective += w * ip.norm_sqr();
        for (a, hi) in av.iter_mut().zip(h.iter()) {
            *a += hi * ip * w;
        }
    }
    let residual = av.iter().zip(&v).map(|(a, v)| (a - v * lambda).norm_sqr()).sum::<f64>().sqrt();
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::NotConverged { residual, tolerance: RESIDUAL_TOL * scale });
    }
    Ok(BeamformerSolution { direction: v, power: p_max, objective: p_max * objective, certificate: lambda })
}

/// Received RF power `h^H R h`.
pub fn harvested_power(h_true: &ChannelVector, cov: &impl TransmitCovariance) -> Result<f64> {
    cov.received_power(h_true)
}

/// Block-averaged power `((T - K tau) / T) h^H R h`.
pub fn average_harvested_power(
    h_true: &ChannelVector,
    cov: &impl TransmitCovariance,
    tau: u64,
    k: u64,
    block_len: u64,
) -> Result<f64> {
    let sensing = k.saturating_mul(tau);
    if block_len == 0 || sensing >= block_len {
        return Err(Error::InfeasibleBlock { needed: sensing, block_len });
    }
    Ok(duty_factor(tau, k, block_len) * cov.received_power(h_true)?)
}

/// Fraction of the block left for energy transmission.
pub fn duty_factor(tau: u64, k: u64, block_len: u64) -> f64 {
    (block_len - k * tau) as f64 / block_len as f64
}
