//! Monte Carlo harness: scenario config, trials of the two-stage protocol
//! under each scheme, parameter sweeps and CSV output.

pub mod config;
pub mod sweep;
pub mod trial;

pub use config::{dbm_to_watts, ArrayConfig, ErConfig, ScenarioConfig, Scheme};
pub use sweep::{csv_string, run_cell, sweep_beta, sweep_gamma, sweep_pmax, write_csv, SweepRow};
pub use trial::{run_trial, trial_seed, TrialResult};
