//! Visibility-region identification from the aggregated echo.
//!
//! The VR estimate minimises
//! `f(s, e) = sum_{n<s} |y_n| + sum_{n>e} |y_n| + alpha (e - s + 1)`
//! over `s in 1..=floor((1-eta) N)`, `e in s+ceil(eta N)..=N`, using prefix
//! sums so each window costs O(1). Ties go to the smaller window, then the
//! smaller start index.

use num_complex::Complex64;

use crate::channel::{min_span, VisibilityRegion};
use crate::error::{invalid, Error, Result};

/// Estimated mean magnitudes outside / inside the VR from order statistics.
pub fn estimate_power_levels(y_bar: &[Complex64], n_alpha: usize) -> Result<(f64, f64)> {
    let n = y_bar.len();
    if n_alpha == 0 || 2 * n_alpha > n {
        return Err(invalid(format!("n_alpha = {n_alpha} must lie in 1..={}", n / 2)));
    }
    let mut mags: Vec<f64> = y_bar.iter().map(|c| c.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let p_out = mags[..n_alpha].iter().sum::<f64>() / n_alpha as f64;
    let p_in = mags[n - n_alpha..].iter().sum::<f64>() / n_alpha as f64;
    Ok((p_out, p_in))
}

/// Window cost `alpha`, the midpoint of the two level estimates.
pub fn scaling_factor(p_out: f64, p_in: f64) -> f64 {
    if p_out == p_in {
        log::warn!("degenerate echo levels (p_out = p_in = {p_in}); window search has no contrast");
    }
    0.5 * (p_out + p_in)
}

/// Direct evaluation of the window objective (1-based inclusive bounds).
pub fn window_objective(mags: &[f64], start: usize, end: usize, alpha: f64) -> f64 {
    let outside: f64 = mags[..start - 1].iter().sum::<f64>() + mags[end..].iter().sum::<f64>();
    outside + alpha * (end - start + 1) as f64
}

/// Feasible bounds `(max_start, min_span)` of the window search.
pub fn search_bounds(n: usize, eta: f64) -> Result<(usize, usize)> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1), got {eta}")));
    }
    let span = min_span(eta, n).max(1);
    let max_start = ((1.0 - eta) * n as f64 + 1e-9).floor() as usize;
    if max_start == 0 || 1 + span > n {
        return Err(Error::InfeasibleWindow { min_span: span, n });
    }
    Ok((max_start, span))
}

/// Finds the window minimising the objective.
pub fn identify_vr(y_bar: &[Complex64], eta: f64, alpha: f64) -> Result<VisibilityRegion> {
    let n = y_bar.len();
    let (max_start, span) = search_bounds(n, eta)?;

    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for c in y_bar {
        acc += c.norm();
        prefix.push(acc);
    }
    let total = prefix[n];

    let mut best: Option<(f64, usize, usize)> = None;
    for s in 1..=max_start {
        for e in (s + span)..=n {
            let f = prefix[s - 1] + (total - prefix[e]) + alpha * (e - s + 1) as f64;
            if is_better(f, s, e, best) {
                best = Some((f, s, e));
            }
        }
    }
    let (_, s, e) = best.ok_or(Error::InfeasibleWindow { min_span: span, n })?;
    VisibilityRegion::new(s, e, n)
}

pub(crate) fn is_better(f: f64, s: usize, e: usize, best: Option<(f64, usize, usize)>) -> bool {
    match best {
        None => true,
        Some((bf, bs, be)) => {
            f < bf || (f == bf && ((e - s) < (be - bs) || ((e - s) == (be - bs) && s < bs)))
        }
    }
}

/// Full identification chain: level estimates, window cost, window search.
pub fn identify_from_echo(y_bar: &[Complex64], eta: f64, n_alpha: usize) -> Result<VisibilityRegion> {
    let (p_out, p_in) = estimate_power_levels(y_bar, n_alpha)?;
    identify_vr(y_bar, eta, scaling_factor(p_out, p_in))
}
