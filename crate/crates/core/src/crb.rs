//! Fisher information, position CRB and sensing-duration allocation.
//!
//! Unknowns are `theta = [x, y, z, b_re, b_im]`. For the echo mean
//! `mu = b h(l) h(l)^T x` repeated over `tau` symbols, the FIM is
//! `(2 / sigma^2) Re{ sum_t (d mu / d theta_i)^H (d mu / d theta_j) }`,
//! assembled here from the closed-form blocks `F_uv`, `F_ub`, `F_bb`.
//! The position-position blocks carry `|b|^2`.

use nalgebra::{DMatrix, Matrix5, SymmetricEigen, Vector3};
use num_complex::Complex64;

use crate::channel::{channel, masked_channel, steering_derivative, vr_cover, Axis, ErState, VisibilityRegion};
use crate::error::{invalid, Error, Result};
use crate::geometry::ArrayGeometry;

/// Largest equilibrated condition number accepted by [`crb_position`].
pub const MAX_CONDITION: f64 = 1e12;

/// Unknown parameter vector `[x, y, z, b_re, b_im]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnknownParams {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub b_re: f64,
    pub b_im: f64,
}

impl UnknownParams {
    pub fn from_er(er: &ErState) -> Self {
        Self {
            x: er.position.x,
            y: er.position.y,
            z: er.position.z,
            b_re: er.reflection.re,
            b_im: er.reflection.im,
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.x, self.y, self.z, self.b_re, self.b_im]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherInfo {
    /// Information carried by a single probe symbol.
    pub per_symbol: Matrix5<f64>,
    pub tau: usize,
    pub noise_power: f64,
}

impl FisherInfo {
    /// `F(tau) = tau * F(1)`.
    pub fn matrix(&self) -> Matrix5<f64> {
        self.per_symbol * self.tau as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbReport {
    /// `C[1,1] + C[2,2] + C[3,3]` in m^2.
    pub crb_total: f64,
    pub per_axis: [f64; 3],
    pub tau: usize,
}

/// `S_x = (1/tau) X X^H` for the probe repeated over `tau` symbols.
pub fn sample_covariance(probe: &[Complex64], slot_len: usize) -> Result<DMatrix<Complex64>> {
    if slot_len == 0 {
        return Err(invalid("slot length must be at least one symbol"));
    }
    let n = probe.len();
    let x = DMatrix::from_fn(n, slot_len, |i, _| probe[i]);
    Ok((&x * x.adjoint()).unscale(slot_len as f64))
}

fn check_fim_args(probe: &[Complex64], n: usize, slot_len: usize, noise_power: f64) -> Result<()> {
    if probe.len() != n {
        return Err(invalid(format!("probe length {} != N = {n}", probe.len())));
    }
    if slot_len == 0 {
        return Err(invalid("slot length must be at least one symbol"));
    }
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(invalid(format!("noise power must be positive, got {noise_power}")));
    }
    Ok(())
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(a, b)| a.conj() * b).sum()
}

/// Analytic 5x5 FIM for a constant probe.
pub fn fim(
    geom: &ArrayGeometry,
    er: &ErState,
    probe: &[Complex64],
    slot_len: usize,
    noise_power: f64,
) -> Result<FisherInfo> {
    check_fim_args(probe, geom.len(), slot_len, noise_power)?;
    let h = channel(geom, er)?;
    if h.norm_sqr() == 0.0 {
        return Err(Error::SingularModel);
    }
    let g = vr_cover(&er.vr, geom.len())?;
    let hd: Vec<Vec<Complex64>> = Axis::ALL
        .iter()
        .map(|&u| {
            steering_derivative(geom, &er.position, u)
                .map(|d| d.into_iter().zip(&g).map(|(d, g)| d * g).collect())
        })
        .collect::<Result<_>>()?;

    // With S = x x^H, a^H S^* c = conj(x^T a) (x^T c).
    let xt = |v: &[Complex64]| -> Complex64 { v.iter().zip(probe).map(|(v, x)| v * x).sum() };
    let quad = |a: &[Complex64], c: &[Complex64]| xt(a).conj() * xt(c);

    let b = er.reflection;
    let b2 = b.norm_sqr();
    let hh = dot(&h, &h);
    let hsh = quad(&h, &h);

    let mut blocks = [[Complex64::new(0.0, 0.0); 3]; 3];
    for u in 0..3 {
        for v in 0..3 {
            let (du, dv) = (&hd[u], &hd[v]);
            blocks[u][v] = (dot(du, dv) * hsh
                + dot(du, &h) * quad(&h, dv)
                + dot(&h, dv) * quad(du, &h)
                + hh * quad(du, dv))
                * b2;
        }
    }
    let f_bb = hh * hsh;
    let f_ub: Vec<Complex64> =
        (0..3).map(|u| (dot(&hd[u], &h) * hsh + hh * quad(&hd[u], &h)) * b.conj()).collect();

    let mut m = Matrix5::zeros();
    for u in 0..3 {
        for v in 0..3 {
            m[(u, v)] = blocks[u][v].re;
        }
        m[(u, 3)] = f_ub[u].re;
        m[(u, 4)] = -f_ub[u].im;
        m[(3, u)] = f_ub[u].re;
        m[(4, u)] = -f_ub[u].im;
    }
    m[(3, 3)] = f_bb.re;
    m[(4, 4)] = f_bb.re;
    m[(3, 4)] = -f_bb.im;
    m[(4, 3)] = -f_bb.im;
    // symmetrise the position block against rounding in Re{F_uv} vs Re{F_vu}
    for u in 0..3 {
        for v in (u + 1)..3 {
            let s = 0.5 * (m[(u, v)] + m[(v, u)]);
            m[(u, v)] = s;
            m[(v, u)] = s;
        }
    }

    let scale = 2.0 / noise_power;
    Ok(FisherInfo { per_symbol: m * scale, tau: slot_len, noise_power })
}

/// Finite-difference FIM: position derivatives of `mu` by central
/// differences (step 1e-7 m), reflection derivatives exact.
pub fn fim_numeric_oracle(
    geom: &ArrayGeometry,
    er: &ErState,
    probe: &[Complex64],
    slot_len: usize,
    noise_power: f64,
) -> Result<Matrix5<f64>> {
    const STEP: f64 = 1e-7;
    check_fim_args(probe, geom.len(), slot_len, noise_power)?;
    let mean = |l: &Vector3<f64>, b: Complex64| -> Result<Vec<Complex64>> {
        let h = masked_channel(geom, l, &er.vr)?;
        let hx: Complex64 = h.iter().zip(probe).map(|(h, x)| h * x).sum();
        Ok(h.iter().map(|h| b * h * hx).collect())
    };
    let mu0 = mean(&er.position, Complex64::new(1.0, 0.0))?;
    if mu0.iter().all(|c| c.norm_sqr() == 0.0) {
        return Err(Error::SingularModel);
    }

    let mut grads: Vec<Vec<Complex64>> = Vec::with_capacity(5);
    for u in 0..3 {
        let mut e = Vector3::zeros();
        e[u] = STEP;
        let plus = mean(&(er.position + e), er.reflection)?;
        let minus = mean(&(er.position - e), er.reflection)?;
        grads.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * STEP)).collect());
    }
    grads.push(mu0.clone());
    grads.push(mu0.iter().map(|c| c * Complex64::i()).collect());

    let mut f = Matrix5::zeros();
    for i in 0..5 {
        for j in 0..5 {
            // every symbol of the slot contributes the same term
            f[(i, j)] = dot(&grads[i], &grads[j]).re * (2.0 / noise_power) * slot_len as f64;
        }
    }
    Ok(f)
}

/// Condition number of `D^{-1/2} F D^{-1/2}` with `D = diag(F)`.
pub fn equilibrated_condition(f: &Matrix5<f64>) -> f64 {
    let d = Matrix5::from_diagonal(&f.diagonal().map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 }));
    let e = d * f * d;
    let ev = SymmetricEigen::new(e).eigenvalues;
    let max = ev.max();
    let min = ev.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Position CRB from `C = F^{-1}`.
///
/// Entries of `theta` mix metres with a dimensionless reflection
/// coefficient, so invertibility is judged on the diagonally equilibrated
/// FIM and the inverse is taken in that scaling.
pub fn crb_position(fi: &FisherInfo) -> Result<CrbReport> {
    if fi.tau == 0 {
        return Err(Error::SingularFim { cond: f64::INFINITY });
    }
    let f = &fi.per_symbol;
    if f.diagonal().iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::SingularFim { cond: f64::INFINITY });
    }
    let cond = equilibrated_condition(f);
    if !(cond < MAX_CONDITION) {
        return Err(Error::SingularFim { cond });
    }
    let dinv = f.diagonal().map(|v| 1.0 / v.sqrt());
    let d = Matrix5::from_diagonal(&dinv);
    let e = d * f * d;
    let e_inv = e.cholesky().ok_or(Error::SingularFim { cond })?.inverse();
    let c = d * e_inv * d;
    let tau = fi.tau as f64;
    let per_axis = [c[(0, 0)] / tau, c[(1, 1)] / tau, c[(2, 2)] / tau];
    Ok(CrbReport { crb_total: per_axis.iter().sum(), per_axis, tau: fi.tau })
}

/// How prior uncertainty enters the duration rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrbMode {
    /// CRB at the prior position only.
    #[default]
    Nominal,
    /// Worst CRB over the 27-point lattice `prior + {-D, 0, D}^3`.
    WorstCase,
}

/// Planning inputs for one ER: previous-block position, VR and reflection.
#[derive(Debug, Clone, PartialEq)]
pub struct ErPrior {
    pub position: Vector3<f64>,
    pub vr: VisibilityRegion,
    pub reflection: Complex64,
}

/// Largest single-slot (`tau = 1`) position CRB over ERs and lattice points.
pub fn planning_crb(
    geom: &ArrayGeometry,
    priors: &[ErPrior],
    error_bounds: &[Vector3<f64>],
    probe: &[Complex64],
    noise_power: f64,
    mode: CrbMode,
) -> Result<f64> {
    if priors.is_empty() {
        return Err(invalid("at least one ER prior is required"));
    }
    if error_bounds.len() != priors.len() {
        return Err(invalid("one error-bound triple per ER is required"));
    }
    let mut worst = 0.0f64;
    for (prior, bound) in priors.iter().zip(error_bounds) {
        if bound.iter().any(|&d| !(d >= 0.0)) {
            return Err(invalid(format!("error bounds must be non-negative, got {bound:?}")));
        }
        for offset in lattice(bound, mode) {
            let er = ErState::new(prior.position + offset, prior.vr, prior.reflection, 0.0)?;
            let c = crb_position(&fim(geom, &er, probe, 1, noise_power)?)?.crb_total;
            worst = worst.max(c);
        }
    }
    Ok(worst)
}

fn lattice(bound: &Vector3<f64>, mode: CrbMode) -> Vec<Vector3<f64>> {
    match mode {
        CrbMode::Nominal => vec![Vector3::zeros()],
        CrbMode::WorstCase => {
            let mut pts = Vec::with_capacity(27);
            for sx in [-1.0, 0.0, 1.0] {
                for sy in [-1.0, 0.0, 1.0] {
                    for sz in [-1.0, 0.0, 1.0] {
                        pts.push(Vector3::new(sx * bound.x, sy * bound.y, sz * bound.z));
                    }
                }
            }
            pts
        }
    }
}

/// Smallest `tau >= 1` with `crb_1 / tau <= gamma`.
pub fn duration_for(crb_1: f64, gamma: f64) -> Result<u64> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("CRB threshold must be positive, got {gamma}")));
    }
    if !crb_1.is_finite() {
        return Err(invalid("planning CRB is not finite"));
    }
    let ratio = crb_1 / gamma;
    if ratio > 1e15 {
        return Ok(u64::MAX);
    }
    let mut tau = (ratio.ceil() as u64).max(1);
    while tau > 1 && crb_1 / (tau - 1) as f64 <= gamma {
        tau -= 1;
    }
    while crb_1 / tau as f64 > gamma {
        tau += 1;
    }
    Ok(tau)
}

/// Minimum slot length meeting the CRB threshold for every ER.
#[allow(clippy::too_many_arguments)]
pub fn min_sensing_duration(
    geom: &ArrayGeometry,
    priors: &[ErPrior],
    error_bounds: &[Vector3<f64>],
    gamma: f64,
    block_len: u64,
    probe: &[Complex64],
    noise_power: f64,
    mode: CrbMode,
) -> Result<u64> {
    let worst = planning_crb(geom, priors, error_bounds, probe, noise_power, mode)?;
    let tau = duration_for(worst, gamma)?;
    let k = priors.len() as u64;
    let needed = k.saturating_mul(tau);
    if needed >= block_len {
        return Err(Error::InfeasibleBlock { needed, block_len });
    }
    Ok(tau)
}
