//! 3D localization of a backscattering ER by concentrated maximum likelihood.
//!
//! With a constant probe the echo matrix is rank one in time, so the column
//! sum `y_bar` is sufficient. For a candidate position `l` with constructed
//! channel `h(l) = a(l) ⊙ g(vr)` the likelihood concentrated over the
//! reflection coefficient is `|h(l)^H y_bar|^2 / ||h(l)||^2`.
//!
//! The estimator first scans a coarse lattice over the search box, then
//! refines by cyclic line searches along x, y, z and the range direction
//! from the array centre. Every cycle closes with a pattern step along the
//! cycle's net displacement. Beyond a few apertures the objective is a
//! narrow ridge in range that coordinate moves alone only crawl along.
//! Every accepted move is non-decreasing in the objective.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::channel::{steering_entry, VisibilityRegion};
use crate::error::{invalid, Error, Result};
use crate::geometry::ArrayGeometry;

const INV_PHI: f64 = 0.618_033_988_749_894_8;
const PHI: f64 = 1.618_033_988_749_895;

/// Axis-aligned search box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub lo: Vector3<f64>,
    pub hi: Vector3<f64>,
}

impl SearchBox {
    pub fn new(lo: Vector3<f64>, hi: Vector3<f64>) -> Result<Self> {
        if (0..3).any(|i| !(lo[i] <= hi[i]) || !lo[i].is_finite() || !hi[i].is_finite()) {
            return Err(invalid(format!("empty search box: lo = {lo:?}, hi = {hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// `center ± half_width` per axis.
    pub fn around(center: Vector3<f64>, half_width: Vector3<f64>) -> Result<Self> {
        Self::new(center - half_width, center + half_width)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    fn clamp(&self, p: Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| p[i].clamp(self.lo[i], self.hi[i]))
    }

    /// Parameter interval `[t_lo, t_hi]` keeping `p + t d` inside the box.
    fn segment(&self, p: &Vector3<f64>, d: &Vector3<f64>) -> (f64, f64) {
        let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..3 {
            if d[i] == 0.0 {
                continue;
            }
            let a = (self.lo[i] - p[i]) / d[i];
            let b = (self.hi[i] - p[i]) / d[i];
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
        (t_lo.min(0.0), t_hi.max(0.0))
    }
}

/// Settings of the coarse scan and cyclic refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcoSettings {
    /// Lattice points per axis (each at least 2).
    pub coarse_grid: [usize; 3],
    /// Stop once a full cycle moves the estimate by less than this (m).
    pub tol: f64,
    pub max_iters: usize,
    /// Golden-section iterations per line search.
    pub line_search_iters: usize,
}

impl Default for AcoSettings {
    fn default() -> Self {
        Self { coarse_grid: [9, 9, 9], tol: 1e-4, max_iters: 100, line_search_iters: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub position_hat: Vector3<f64>,
    pub b_hat: Complex64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Evaluates the concentrated likelihood over the VR only.
struct Objective<'a> {
    positions: &'a [Vector3<f64>],
    wavelength: f64,
    y: &'a [Complex64],
}

impl<'a> Objective<'a> {
    fn new(geom: &'a ArrayGeometry, y_bar: &'a [Complex64], vr: &VisibilityRegion) -> Result<Self> {
        if y_bar.len() != geom.len() {
            return Err(invalid(format!("echo length {} != N = {}", y_bar.len(), geom.len())));
        }
        if vr.end() > geom.len() {
            return Err(invalid(format!("visibility region end {} exceeds N", vr.end())));
        }
        let r = vr.range();
        Ok(Self { positions: &geom.positions()[r.clone()], wavelength: geom.wavelength(), y: &y_bar[r] })
    }

    fn eval(&self, l: &Vector3<f64>) -> Result<f64> {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for (p, y) in self.positions.iter().zip(self.y) {
            let (a, r) = steering_entry(self.wavelength, p, l);
            if r == 0.0 {
                return Err(Error::SingularGeometry { index: 0 });
            }
            num += a.conj() * y;
            den += a.norm_sqr();
        }
        if den == 0.0 {
            return Err(Error::DegenerateChannel);
        }
        Ok(num.norm_sqr() / den)
    }
}

/// `|h(l)^H y_bar|^2 / ||h(l)||^2` with `h(l) = a(l) ⊙ g(vr_hat)`.
pub fn concentrated_objective(
    geom: &ArrayGeometry,
    y_bar: &[Complex64],
    candidate: &Vector3<f64>,
    vr_hat: &VisibilityRegion,
) -> Result<f64> {
    if let Some(i) = geom.positions().iter().position(|p| p == candidate) {
        return Err(Error::SingularGeometry { index: i + 1 });
    }
    Objective::new(geom, y_bar, vr_hat)?.eval(candidate)
}

/// Least-squares reflection estimate
/// `b = h^H y_bar / (tau (h^T x) ||h||^2)` at position `l_hat`.
pub fn estimate_b(
    geom: &ArrayGeometry,
    y_bar: &[Complex64],
    l_hat: &Vector3<f64>,
    vr_hat: &VisibilityRegion,
    probe: &[Complex64],
    slot_len: usize,
) -> Result<Complex64> {
    if probe.len() != geom.len() || y_bar.len() != geom.len() {
        return Err(invalid("probe and echo must both have N entries"));
    }
    if slot_len == 0 {
        return Err(invalid("slot length must be at least one symbol"));
    }
    let lambda = geom.wavelength();
    let mut hy = Complex64::new(0.0, 0.0);
    let mut hx = Complex64::new(0.0, 0.0);
    let mut hx_scale = 0.0;
    let mut norm = 0.0;
    for i in vr_hat.range() {
        let (a, r) = steering_entry(lambda, &geom.positions()[i], l_hat);
        if r == 0.0 {
            return Err(Error::SingularGeometry { index: i + 1 });
        }
        hy += a.conj() * y_bar[i];
        hx += a * probe[i];
        hx_scale += (a * probe[i]).norm();
        norm += a.norm_sqr();
    }
    if norm == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    if hx.norm() <= 1e-13 * hx_scale {
        return Err(Error::UnidentifiableReflection);
    }
    Ok(hy / (hx * (slot_len as f64 * norm)))
}

/// Coarse lattice scan followed by cyclic coordinate refinement.
pub fn locate_3d_aco(
    geom: &ArrayGeometry,
    y_bar: &[Complex64],
    vr_hat: &VisibilityRegion,
    probe: &[Complex64],
    slot_len: usize,
    search_box: &SearchBox,
    settings: &AcoSettings,
) -> Result<LocalizationResult> {
    if settings.coarse_grid.iter().any(|&g| g < 2) {
        return Err(invalid(format!("coarse grid needs >= 2 points per axis, got {:?}", settings.coarse_grid)));
    }
    if !(settings.tol > 0.0) {
        return Err(invalid("convergence tolerance must be positive"));
    }
    let obj = Objective::new(geom, y_bar, vr_hat)?;

    // Phase 1: lattice scan.
    let axis_points = |i: usize| -> Vec<f64> {
        let g = settings.coarse_grid[i];
        (0..g)
            .map(|k| {
                let t = k as f64 / (g - 1) as f64;
                search_box.lo[i] + t * (search_box.hi[i] - search_box.lo[i])
            })
            .collect()
    };
    let (xs, ys, zs) = (axis_points(0), axis_points(1), axis_points(2));
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for &x in &xs {
        for &y in &ys {
            for &z in &zs {
                let p = Vector3::new(x, y, z);
                let f = obj.eval(&p)?;
                if best.is_none_or(|(bf, _)| f > bf) {
                    best = Some((f, p));
                }
            }
        }
    }
    let (mut f, mut p) = best.expect("lattice has at least 8 points");

    // Phase 2: cyclic refinement.
    let cell = Vector3::from_fn(|i, _| {
        (search_box.hi[i] - search_box.lo[i]) / (settings.coarse_grid[i] - 1) as f64
    });
    let mut steps = cell;
    let centroid = geom.positions().iter().sum::<Vector3<f64>>() / geom.len() as f64;
    let mut radial_step = cell.norm();
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iters {
        iterations += 1;
        let start = p;
        let f_cycle = f;
        for (i, d) in axes.iter().enumerate() {
            if steps[i] == 0.0 {
                continue;
            }
            let (t, fl) = line_max(&obj, search_box, &p, d, steps[i], f, settings.line_search_iters)?;
            if fl > f {
                p = search_box.clamp(p + d * t);
                f = fl;
                steps[i] = (2.0 * t.abs()).clamp(0.01 * settings.tol, cell[i]);
            }
        }
        // range direction seen from the array centre
        let radial = p - centroid;
        if radial.norm() > 0.0 {
            let d = radial.normalize();
            let (t, fl) = line_max(&obj, search_box, &p, &d, radial_step, f, settings.line_search_iters)?;
            if fl > f {
                p = search_box.clamp(p + d * t);
                f = fl;
                radial_step = (2.0 * t.abs()).clamp(0.01 * settings.tol, cell.norm());
            }
        }
        let disp = p - start;
        let moved = disp.norm();
        if moved > 0.0 {
            let d = disp / moved;
            let (t, fl) = line_max(&obj, search_box, &p, &d, moved, f, settings.line_search_iters)?;
            if fl > f {
                p = search_box.clamp(p + d * t);
                f = fl;
            }
        }
        debug_assert!(f >= f_cycle, "refinement decreased the objective");
        if (p - start).norm() < settings.tol {
            converged = true;
            break;
        }
    }

    let b_hat = estimate_b(geom, y_bar, &p, vr_hat, probe, slot_len)?;
    Ok(LocalizationResult { position_hat: p, b_hat, objective: f, iterations, converged })
}

/// Maximises `f(p + t d)` over the box-feasible segment.
///
/// Brackets a local maximum by expanding from `±step`, then runs a fixed
/// number of golden-section iterations. Returns the best `(t, f)` seen,
/// which is `(0, f0)` when nothing improves.
fn line_max(
    obj: &Objective<'_>,
    bx: &SearchBox,
    p: &Vector3<f64>,
    d: &Vector3<f64>,
    step: f64,
    f0: f64,
    iters: usize,
) -> Result<(f64, f64)> {
    let (t_min, t_max) = bx.segment(p, d);
    if t_max - t_min <= 0.0 {
        return Ok((0.0, f0));
    }
    let eval = |t: f64| obj.eval(&bx.clamp(p + d * t));
    let mut best = (0.0, f0);
    let note = |t: f64, f: f64, best: &mut (f64, f64)| {
        if f > best.1 {
            *best = (t, f);
        }
    };

    let s = step.min(t_max - t_min);
    let tp = s.min(t_max);
    let tm = (-s).max(t_min);
    let fp = if tp > 0.0 { eval(tp)? } else { f64::NEG_INFINITY };
    let fm = if tm < 0.0 { eval(tm)? } else { f64::NEG_INFINITY };
    note(tp, fp, &mut best);
    note(tm, fm, &mut best);

    // Bracket [a, c] around the best of the three probes.
    let (a, c) = if fp <= f0 && fm <= f0 {
        (tm, tp)
    } else {
        let dir = if fp >= fm { 1.0 } else { -1.0 };
        let limit = if dir > 0.0 { t_max } else { t_min };
        let mut prev: f64 = 0.0;
        let mut cur = if dir > 0.0 { tp } else { tm };
        let mut f_cur = if dir > 0.0 { fp } else { fm };
        let mut width = cur.abs();
        loop {
            if cur == limit {
                break (prev.min(cur), prev.max(cur));
            }
            width *= PHI;
            let next = if dir > 0.0 { (cur + width).min(limit) } else { (cur - width).max(limit) };
            let f_next = eval(next)?;
            note(next, f_next, &mut best);
            if f_next < f_cur {
                break (prev.min(next), prev.max(next));
            }
            prev = cur;
            cur = next;
            f_cur = f_next;
        }
    };

    // Golden-section search on [a, c].
    let (mut lo, mut hi) = (a, c);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    note(x1, f1, &mut best);
    note(x2, f2, &mut best);
    for _ in 0..iters {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1)?;
            note(x1, f1, &mut best);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2)?;
            note(x2, f2, &mut best);
        }
    }
    Ok(best)
}
