//! Parameter sweeps and CSV output.
//!
//! Every grid point reuses trial indices `0..trials`, so points differ only
//! in the swept parameter (common random numbers).

use std::io::Write;

use super::config::{ScenarioConfig, Scheme};
use super::trial::{run_trial, TrialResult};
use crate::error::{invalid, Result};

/// Aggregates of one (grid value, scheme) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub tau_mean: f64,
    pub duty_factor: f64,
    /// Mean average harvested power per ER (W).
    pub power_mean: Vec<f64>,
    pub vr_hit_rate: Option<f64>,
    pub pos_rmse: Option<f64>,
    pub trials: Vec<TrialResult>,
}

impl SweepRow {
    /// Standard error of ER `k`'s mean power.
    pub fn power_se(&self, k: usize) -> f64 {
        let v: Vec<f64> = self.trials.iter().map(|t| t.powers[k]).collect();
        standard_error(&v)
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation over `sqrt(n)`; zero for a single sample.
pub fn standard_error(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Runs all trials of `cfg` and aggregates them.
pub fn run_cell(cfg: &ScenarioConfig, sweep_value: f64) -> Result<SweepRow> {
    cfg.validate()?;
    log::info!("cell {sweep_value:e} {}: {} trials", cfg.scheme, cfg.trials);
    let trials: Vec<TrialResult> = (0..cfg.trials as u64).map(|i| run_trial(cfg, i)).collect::<Result<_>>()?;
    let n = trials.len() as f64;
    let k = cfg.k();
    let power_mean = (0..k).map(|j| trials.iter().map(|t| t.powers[j]).sum::<f64>() / n).collect();
    let tau_mean = trials.iter().map(|t| t.tau_used as f64).sum::<f64>() / n;
    let duty_factor = trials.iter().map(|t| t.duty_factor).sum::<f64>() / n;

    let hits: Vec<bool> = trials.iter().filter_map(|t| t.vr_hit.as_ref()).flatten().copied().collect();
    let vr_hit_rate = (!hits.is_empty()).then(|| hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64);
    let errs: Vec<f64> = trials.iter().filter_map(|t| t.pos_error.as_ref()).flatten().copied().collect();
    let pos_rmse = (!errs.is_empty()).then(|| (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt());

    Ok(SweepRow { sweep_value, scheme: cfg.scheme, tau_mean, duty_factor, power_mean, vr_hit_rate, pos_rmse, trials })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("sweep grid must not be empty"));
    }
    Ok(())
}

/// One row per CRB threshold, scheme from the config.
pub fn sweep_gamma(cfg: &ScenarioConfig, gamma_grid: &[f64]) -> Result<Vec<SweepRow>> {
    check_grid(gamma_grid)?;
    gamma_grid.iter().map(|&g| run_cell(&ScenarioConfig { gamma: g, ..cfg.clone() }, g)).collect()
}

/// One row per (transmit power in W, scheme) for all five schemes.
pub fn sweep_pmax(cfg: &ScenarioConfig, pmax_grid: &[f64]) -> Result<Vec<SweepRow>> {
    check_grid(pmax_grid)?;
    let mut rows = Vec::with_capacity(pmax_grid.len() * Scheme::ALL.len());
    for &p in pmax_grid {
        for scheme in Scheme::ALL {
            rows.push(run_cell(&ScenarioConfig { p_max: p, scheme, ..cfg.clone() }, p)?);
        }
    }
    Ok(rows)
}

/// One row per ER2 weight with `beta_1 = 1 - beta_2`; requires two ERs.
pub fn sweep_beta(cfg: &ScenarioConfig, beta2_grid: &[f64]) -> Result<Vec<SweepRow>> {
    check_grid(beta2_grid)?;
    if cfg.k() != 2 {
        return Err(invalid(format!("weight sweep needs exactly two ERs, got {}", cfg.k())));
    }
    if let Some(b) = beta2_grid.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(invalid(format!("ER2 weight must lie in [0, 1], got {b}")));
    }
    beta2_grid
        .iter()
        .map(|&b2| {
            let mut c = cfg.clone();
            c.ers[0].weight = 1.0 - b2;
            c.ers[1].weight = b2;
            run_cell(&c, b2)
        })
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.14e}")
}

/// Writes the sweep table: `sweep_value, scheme, tau_mean, duty_factor,
/// power_er<k>_watts..., vr_hit_rate, pos_rmse_m`; empty cells are N/A.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let k = rows.first().map_or(0, |r| r.power_mean.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sweep_value".to_string(), "scheme".into(), "tau_mean".into(), "duty_factor".into()];
    header.extend((1..=k).map(|i| format!("power_er{i}_watts")));
    header.extend(["vr_hit_rate".to_string(), "pos_rmse_m".into()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![fmt(r.sweep_value), r.scheme.name().to_string(), fmt(r.tau_mean), fmt(r.duty_factor)];
        rec.extend(r.power_mean.iter().map(|p| fmt(*p)));
        rec.push(r.vr_hit_rate.map(fmt).unwrap_or_default());
        rec.push(r.pos_rmse.map(fmt).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
}
