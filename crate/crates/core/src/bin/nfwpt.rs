use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use nfwpt::crb::{crb_position, duration_for, fim, planning_crb, CrbMode};
use nfwpt::echo::uniform_probe;
use nfwpt::harness::trial::{draw_scene, planning_priors};
use nfwpt::harness::{self, dbm_to_watts, ScenarioConfig, Scheme, SweepRow};

#[derive(Parser)]
#[command(name = "nfwpt", version, about = "Sensing-assisted near-field WPT simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON scenario file (built-in default scenario when absent)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials`
    #[arg(long)]
    trials: Option<usize>,
    /// CSV output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `scheme`
    #[arg(long)]
    scheme: Option<Scheme>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scheme and print its aggregates as one CSV row
    Simulate(Common),
    /// Sweep the CRB threshold (m^2)
    SweepGamma {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0])]
        grid: Vec<f64>,
    },
    /// Sweep the transmit power (dBm) for all five schemes
    SweepPower {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [20.0, 25.0, 30.0, 35.0])]
        grid: Vec<f64>,
    },
    /// Sweep ER2's energy weight with beta_1 = 1 - beta_2
    SweepWeight {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]
        grid: Vec<f64>,
    },
    /// Print single-symbol CRBs and the sensing duration for one trial's scene
    Crb {
        #[command(flatten)]
        common: Common,
        /// Trial whose VR draw is used for planning
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Print the built-in default scenario as JSON
    DefaultConfig,
}

fn load(common: &Common) -> nfwpt::Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(s) = common.scheme {
        cfg.scheme = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(rows: &[SweepRow], out: &Option<PathBuf>) -> nfwpt::Result<()> {
    match out {
        Some(p) => harness::write_csv(rows, BufWriter::new(File::create(p)?)),
        None => harness::write_csv(rows, io::stdout().lock()),
    }
}

fn crb_report(cfg: &ScenarioConfig, trial: u64) -> nfwpt::Result<()> {
    let geom = cfg.geometry()?;
    let probe = uniform_probe(&geom, cfg.p_max)?;
    let scene = draw_scene(cfg, harness::trial_seed(cfg.master_seed, trial))?;
    let priors = planning_priors(cfg, &scene);
    let bounds: Vec<Vector3<f64>> = cfg.ers.iter().map(|e| e.bounds()).collect();
    let mut out = io::stdout().lock();
    for (k, p) in priors.iter().enumerate() {
        let er = nfwpt::channel::ErState::new(p.position, p.vr, p.reflection, 1.0)?;
        let r = crb_position(&fim(&geom, &er, &probe, 1, cfg.noise_power)?)?;
        writeln!(
            out,
            "er{}: vr=[{}, {}] crb_tau1_m2={:.6e} per_axis=[{:.6e}, {:.6e}, {:.6e}]",
            k + 1,
            p.vr.start(),
            p.vr.end(),
            r.crb_total,
            r.per_axis[0],
            r.per_axis[1],
            r.per_axis[2]
        )?;
    }
    for mode in [CrbMode::Nominal, CrbMode::WorstCase] {
        let worst = planning_crb(&geom, &priors, &bounds, &probe, cfg.noise_power, mode)?;
        let tau = duration_for(worst, cfg.gamma)?;
        let feasible = (cfg.k() as u64).saturating_mul(tau) < cfg.block_len;
        writeln!(out, "{mode:?}: planning_crb_m2={worst:.6e} gamma_m2={:.6e} tau_star={tau} feasible={feasible}", cfg.gamma)?;
    }
    Ok(())
}

fn run(cli: Cli) -> nfwpt::Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = load(&c)?;
            emit(&[harness::run_cell(&cfg, cfg.gamma)?], &c.out)
        }
        Command::SweepGamma { common, grid } => {
            let cfg = load(&common)?;
            emit(&harness::sweep_gamma(&cfg, &grid)?, &common.out)
        }
        Command::SweepPower { common, grid } => {
            let cfg = load(&common)?;
            let watts: Vec<f64> = grid.iter().map(|d| dbm_to_watts(*d)).collect();
            emit(&harness::sweep_pmax(&cfg, &watts)?, &common.out)
        }
        Command::SweepWeight { common, grid } => {
            let cfg = load(&common)?;
            emit(&harness::sweep_beta(&cfg, &grid)?, &common.out)
        }
        Command::Crb { common, trial } => crb_report(&load(&common)?, trial),
        Command::DefaultConfig => {
            println!("{}", ScenarioConfig::default().to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
