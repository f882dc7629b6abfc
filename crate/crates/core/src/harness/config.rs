//! Scenario configuration (strict JSON).
//!
//! Powers are in watts, lengths in metres, durations in symbols.

use std::path::Path;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::VisibilityRegion;
use crate::crb::CrbMode;
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::localization::AcoSettings;

/// `10^((dbm - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    PerfectCsi,
    Isotropic,
    EqualTime,
    NoVr,
}

impl Scheme {
    pub const ALL: [Scheme; 5] =
        [Scheme::Proposed, Scheme::PerfectCsi, Scheme::Isotropic, Scheme::EqualTime, Scheme::NoVr];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::PerfectCsi => "perfect_csi",
            Scheme::Isotropic => "isotropic",
            Scheme::EqualTime => "equal_time",
            Scheme::NoVr => "no_vr",
        }
    }

    /// Whether the scheme runs the sensing stage.
    pub fn senses(self) -> bool {
        matches!(self, Scheme::Proposed | Scheme::EqualTime | Scheme::NoVr)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_y: usize,
    pub n_z: usize,
    pub carrier_freq: f64,
    /// Element pitch in metres; half a wavelength when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErConfig {
    /// Previous-block position estimate.
    pub prior_position: [f64; 3],
    /// Half-widths of the uniform true-position error box.
    pub error_bounds: [f64; 3],
    pub weight: f64,
    /// `|b|`; the phase is drawn uniformly per trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection_magnitude: Option<f64>,
    /// Fixed `[re, im]` reflection coefficient (overrides the magnitude).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<[f64; 2]>,
    /// Fixed 1-based inclusive VR `[start, end]`; drawn per trial when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vr: Option<[usize; 2]>,
}

impl ErConfig {
    pub fn prior(&self) -> Vector3<f64> {
        Vector3::from(self.prior_position)
    }

    pub fn bounds(&self) -> Vector3<f64> {
        Vector3::from(self.error_bounds)
    }

    /// Reflection magnitude used for planning.
    pub fn planning_magnitude(&self, default: f64) -> f64 {
        match self.reflection {
            Some([re, im]) => Complex64::new(re, im).norm(),
            None => self.reflection_magnitude.unwrap_or(default),
        }
    }
}

fn default_crb_mode() -> CrbMode {
    CrbMode::Nominal
}
fn default_reflection_magnitude() -> f64 {
    DEFAULT_REFLECTION_MAGNITUDE
}
fn default_coarse_grid() -> [usize; 3] {
    [9, 9, 9]
}
fn default_loc_tol() -> f64 {
    1e-4
}
fn default_loc_max_iters() -> usize {
    100
}
fn default_true() -> bool {
    true
}

/// Default `|b|` when an ER gives none.
pub const DEFAULT_REFLECTION_MAGNITUDE: f64 = 31.622_776_601_683_793;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub array: ArrayConfig,
    /// Receiver noise power (W).
    pub noise_power: f64,
    /// Transmit power budget (W).
    pub p_max: f64,
    /// Block length `T` in symbols.
    pub block_len: u64,
    pub ers: Vec<ErConfig>,
    pub eta: f64,
    pub n_alpha: usize,
    /// CRB threshold (m^2).
    pub gamma: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub scheme: Scheme,
    #[serde(default = "default_crb_mode")]
    pub crb_mode: CrbMode,
    #[serde(default = "default_reflection_magnitude")]
    pub reflection_magnitude: f64,
    /// Extra VR length drawn uniformly from `0..=vr_slack`; `ceil(eta N)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vr_slack: Option<usize>,
    /// Search box half-width added to the error bounds (m).
    #[serde(default)]
    pub search_margin: f64,
    #[serde(default = "default_coarse_grid")]
    pub coarse_grid: [usize; 3],
    #[serde(default = "default_loc_tol")]
    pub loc_tol: f64,
    #[serde(default = "default_loc_max_iters")]
    pub loc_max_iters: usize,
    /// Clamp an infeasible sensing duration to `floor((T - 1) / K)` instead of failing.
    #[serde(default = "default_true")]
    pub cap_infeasible_tau: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let er = |p: [f64; 3], w: f64| ErConfig {
            prior_position: p,
            error_bounds: [0.15; 3],
            weight: w,
            reflection_magnitude: None,
            reflection: None,
            vr: None,
        };
        Self {
            array: ArrayConfig { n_y: 16, n_z: 16, carrier_freq: 28e9, spacing: None },
            noise_power: dbm_to_watts(-120.0),
            p_max: dbm_to_watts(30.0),
            block_len: 200,
            ers: vec![er([1.0, 2.0, 3.0], 0.1), er([1.5, 3.0, 4.5], 0.9)],
            eta: 0.25,
            n_alpha: 32,
            gamma: DEFAULT_GAMMA,
            trials: 100,
            master_seed: 2024,
            scheme: Scheme::Proposed,
            crb_mode: default_crb_mode(),
            reflection_magnitude: DEFAULT_REFLECTION_MAGNITUDE,
            vr_slack: None,
            search_margin: 0.0,
            coarse_grid: default_coarse_grid(),
            loc_tol: default_loc_tol(),
            loc_max_iters: default_loc_max_iters(),
            cap_infeasible_tau: true,
        }
    }
}

/// Default CRB threshold (m^2).
pub const DEFAULT_GAMMA: f64 = 100.0;

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::upa(self.array.n_y, self.array.n_z, self.array.carrier_freq, self.array.spacing)
    }

    pub fn n(&self) -> usize {
        self.array.n_y * self.array.n_z
    }

    pub fn k(&self) -> usize {
        self.ers.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.ers.iter().map(|e| e.weight).collect()
    }

    pub fn aco_settings(&self) -> AcoSettings {
        AcoSettings {
            coarse_grid: self.coarse_grid,
            tol: self.loc_tol,
            max_iters: self.loc_max_iters,
            ..AcoSettings::default()
        }
    }

    /// Extra VR length beyond the minimum.
    pub fn slack(&self) -> usize {
        self.vr_slack.unwrap_or_else(|| crate::channel::min_span(self.eta, self.n()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.geometry()?;
        let n = self.n();
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad(format!("noise_power must be positive, got {}", self.noise_power));
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return bad(format!("p_max must be positive, got {}", self.p_max));
        }
        if self.block_len < 1 {
            return bad("block_len must be at least 1".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.ers.is_empty() {
            return bad("at least one ER is required".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if self.n_alpha == 0 || 2 * self.n_alpha > n {
            return bad(format!("n_alpha must lie in 1..={}", n / 2));
        }
        if self.scheme.senses() && !(self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.reflection_magnitude >= 0.0) || !(self.search_margin >= 0.0) {
            return bad("reflection_magnitude and search_margin must be non-negative".into());
        }
        let span = crate::channel::min_span(self.eta, n);
        if span + 1 + self.slack() > n {
            return bad(format!("VR of {} + slack {} elements does not fit N = {n}", span + 1, self.slack()));
        }
        for (k, er) in self.ers.iter().enumerate() {
            if !(er.weight >= 0.0) {
                return bad(format!("ER {} weight must be non-negative", k + 1));
            }
            if er.error_bounds.iter().any(|d| !(*d >= 0.0)) {
                return bad(format!("ER {} error bounds must be non-negative", k + 1));
            }
            if er.reflection_magnitude.is_some_and(|m| !(m >= 0.0)) {
                return bad(format!("ER {} reflection magnitude must be non-negative", k + 1));
            }
            if let Some([s, e]) = er.vr {
                let vr = VisibilityRegion::new(s, e, n).map_err(|err| Error::Config(format!("ER {}: {err}", k + 1)))?;
                if !vr.satisfies_min_size(self.eta, n) {
                    return bad(format!("ER {} VR is shorter than the eta bound", k + 1));
                }
            }
        }
        Ok(())
    }
}
