//! One Monte Carlo trial of the two-stage protocol.
//!
//! Randomness: the trial seed is `splitmix64(master_seed ^ splitmix64(trial_index))`.
//! A ChaCha8 generator seeded with it draws the scene on stream 0 (per ER:
//! position offset, VR, reflection phase) and ER `k`'s echo noise on stream
//! `k + 1`. Every scheme sees the same scene and noise for a given trial.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, Scheme};
use crate::beamforming::{average_harvested_power, isotropic_covariance, solve_p4_factored, TransmitCovariance};
use crate::channel::{channel, masked_channel, min_span, ChannelVector, ErState, VisibilityRegion};
use crate::crb::{duration_for, planning_crb, ErPrior};
use crate::echo::{aggregate, simulate_echo, uniform_probe};
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::localization::{locate_3d_aco, SearchBox};
use crate::vr::identify_from_echo;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    /// Average harvested power per ER (W).
    pub powers: Vec<f64>,
    /// Sensing symbols per ER slot.
    pub tau_used: u64,
    pub duty_factor: f64,
    /// Exact VR recovery per ER (schemes that identify VRs).
    pub vr_hit: Option<Vec<bool>>,
    /// Position error per ER in metres (sensing schemes).
    pub pos_error: Option<Vec<f64>>,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(trial_index))
}

fn stream(seed: u64, s: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s);
    rng
}

/// True ER states of a trial.
pub fn draw_scene(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<ErState>> {
    let n = cfg.n();
    let span = min_span(cfg.eta, n);
    let slack = cfg.slack();
    let mut rng = stream(seed, 0);
    cfg.ers
        .iter()
        .map(|er| {
            let offset = Vector3::from_fn(|i, _| {
                let d = er.error_bounds[i];
                if d > 0.0 {
                    rng.random_range(-d..=d)
                } else {
                    0.0
                }
            });
            let vr = match er.vr {
                Some([s, e]) => VisibilityRegion::new(s, e, n)?,
                None => {
                    let len = span + 1 + rng.random_range(0..=slack);
                    let start = rng.random_range(1..=n - len + 1);
                    VisibilityRegion::new(start, start + len - 1, n)?
                }
            };
            let reflection = match er.reflection {
                Some([re, im]) => Complex64::new(re, im),
                None => Complex64::from_polar(
                    er.reflection_magnitude.unwrap_or(cfg.reflection_magnitude),
                    rng.random_range(0.0..std::f64::consts::TAU),
                ),
            };
            ErState::new(er.prior() + offset, vr, reflection, er.weight)
        })
        .collect()
}

/// Planning priors: configured prior position, the block's VR (the blockage
/// is taken as static across adjacent blocks) and the configured `|b|`.
pub fn planning_priors(cfg: &ScenarioConfig, scene: &[ErState]) -> Vec<ErPrior> {
    cfg.ers
        .iter()
        .zip(scene)
        .map(|(er, truth)| ErPrior {
            position: er.prior(),
            vr: truth.vr,
            reflection: Complex64::new(er.planning_magnitude(cfg.reflection_magnitude), 0.0),
        })
        .collect()
}

/// Largest feasible slot length `floor((T - 1) / K)`.
pub fn max_feasible_tau(block_len: u64, k: u64) -> u64 {
    (block_len - 1) / k
}

/// Sensing duration from the CRB rule, capped at the block if configured.
pub fn planned_tau(cfg: &ScenarioConfig, geom: &ArrayGeometry, probe: &[Complex64], scene: &[ErState]) -> Result<u64> {
    let priors = planning_priors(cfg, scene);
    let bounds: Vec<Vector3<f64>> = cfg.ers.iter().map(|e| e.bounds()).collect();
    let worst = planning_crb(geom, &priors, &bounds, probe, cfg.noise_power, cfg.crb_mode)?;
    let tau = duration_for(worst, cfg.gamma)?;
    let k = cfg.k() as u64;
    let needed = k.saturating_mul(tau);
    if needed >= cfg.block_len {
        let cap = max_feasible_tau(cfg.block_len, k);
        if cfg.cap_infeasible_tau && cap >= 1 {
            log::debug!("tau* = {tau} does not fit the block; capped at {cap}");
            return Ok(cap);
        }
        return Err(Error::InfeasibleBlock { needed, block_len: cfg.block_len });
    }
    Ok(tau)
}

struct Sensed {
    channels: Vec<ChannelVector>,
    vr_hit: Vec<bool>,
    pos_error: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn sense(
    cfg: &ScenarioConfig,
    geom: &ArrayGeometry,
    probe: &[Complex64],
    scene: &[ErState],
    truth: &[ChannelVector],
    tau: u64,
    seed: u64,
    identify: bool,
) -> Result<Sensed> {
    let n = geom.len();
    let settings = cfg.aco_settings();
    let mut out = Sensed { channels: Vec::new(), vr_hit: Vec::new(), pos_error: Vec::new() };
    for (k, ((er, h), conf)) in scene.iter().zip(truth).zip(&cfg.ers).enumerate() {
        let mut rng = stream(seed, k as u64 + 1);
        let batch = simulate_echo(h, er.reflection, probe, tau as usize, cfg.noise_power, &mut rng)?;
        let y = aggregate(&batch);
        let vr_hat = if identify { identify_from_echo(&y, cfg.eta, cfg.n_alpha)? } else { VisibilityRegion::full(n)? };
        let half = conf.bounds().add_scalar(cfg.search_margin);
        let bx = SearchBox::around(conf.prior(), half)?;
        let loc = locate_3d_aco(geom, &y, &vr_hat, probe, tau as usize, &bx, &settings)?;
        out.channels.push(masked_channel(geom, &loc.position_hat, &vr_hat)?);
        out.vr_hit.push(vr_hat == er.vr);
        out.pos_error.push((loc.position_hat - er.position).norm());
    }
    Ok(out)
}

fn scored(truth: &[ChannelVector], cov: &impl TransmitCovariance, tau: u64, block_len: u64) -> Result<Vec<f64>> {
    let k = truth.len() as u64;
    truth.iter().map(|h| average_harvested_power(h, cov, tau, k, block_len)).collect()
}

/// Runs trial `trial_index` of `cfg` under `cfg.scheme`.
pub fn run_trial(cfg: &ScenarioConfig, trial_index: u64) -> Result<TrialResult> {
    cfg.validate()?;
    let geom = cfg.geometry()?;
    let seed = trial_seed(cfg.master_seed, trial_index);
    let scene = draw_scene(cfg, seed)?;
    let truth: Vec<ChannelVector> = scene.iter().map(|er| channel(&geom, er)).collect::<Result<_>>()?;
    let weights = cfg.weights();
    let k = cfg.k() as u64;
    let t = cfg.block_len;

    let (tau, powers, sensed) = match cfg.scheme {
        Scheme::PerfectCsi => {
            let sol = solve_p4_factored(&truth, &weights, cfg.p_max)?;
            (0, scored(&truth, &sol, 0, t)?, None)
        }
        Scheme::Isotropic => {
            let iso = isotropic_covariance(cfg.p_max, geom.len())?;
            (0, scored(&truth, &iso, 0, t)?, None)
        }
        Scheme::Proposed | Scheme::NoVr | Scheme::EqualTime => {
            let probe = uniform_probe(&geom, cfg.p_max)?;
            let tau = match cfg.scheme {
                Scheme::EqualTime => t / (2 * k),
                _ => planned_tau(cfg, &geom, &probe, &scene)?,
            };
            if tau == 0 {
                return Err(Error::InfeasibleBlock { needed: k, block_len: t });
            }
            let sensed = sense(cfg, &geom, &probe, &scene, &truth, tau, seed, cfg.scheme != Scheme::NoVr)?;
            let sol = solve_p4_factored(&sensed.channels, &weights, cfg.p_max)?;
            (tau, scored(&truth, &sol, tau, t)?, Some(sensed))
        }
    };

    let (vr_hit, pos_error) = match sensed {
        Some(s) => ((cfg.scheme != Scheme::NoVr).then_some(s.vr_hit), Some(s.pos_error)),
        None => (None, None),
    };
    Ok(TrialResult {
        seed,
        powers,
        tau_used: tau,
        duty_factor: (t - k * tau) as f64 / t as f64,
        vr_hit,
        pos_error,
    })
}
