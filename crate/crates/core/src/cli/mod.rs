//! Command-line runner.
//!
//! Every subcommand builds an [`ExperimentConfig`] and hands it to
//! [`run_experiment`], so `sfde alh ...` and a config file with one `alh`
//! check produce the same artifacts:
//!
//! ```text
//! <out>/manifest.json
//! <out>/reports/<check>.json
//! <out>/paths/<check>.csv
//! ```
//!
//! Exit status: 0 when every check passes or is inconclusive, 2 on a
//! violation, 1 on any error.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{
    config_hash, resolve, Check, ConsistencyParams, ConstantsParams, CouplingParams, DecayParams, ExperimentConfig,
    MartingaleParams, ModelRef, Resolved, SegmentSource, SimulateParams, ValidateParams,
};
pub use run::{run_experiment, CheckSummary, Manifest, Versions, EXIT_ERROR, EXIT_PASS, EXIT_VIOLATION};

use crate::coupling::Measure;
use crate::error::{Result, SfdeError};
use crate::estimators::constants::{hamiltonian_constants, SearchGrid};

#[derive(Parser, Debug)]
#[command(name = "sfde", version, about = "Segment-process simulation and log-Harnack checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "sfde-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: $SFDE_WORKERS, then all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct Inputs {
    /// Model file, or the name of a shipped model.
    #[arg(long)]
    pub model: String,
    /// Initial segment: a CSV file or comma-separated constant values.
    #[arg(long)]
    pub xi: String,
    #[arg(long)]
    pub eta: Option<String>,
    /// Coupling strength (default depends on the model kind).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// JSON file with the check's parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub n_paths: Option<usize>,
    /// Monte Carlo step.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a JSON experiment file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Simulate single paths.
    Simulate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        xi: String,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate the coupled pair with its density process.
    Couple {
        #[arg(long)]
        model: String,
        #[arg(long)]
        xi: String,
        #[arg(long)]
        eta: String,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_parser = parse_measure, default_value = "Q")]
        measure: Measure,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the decay rate of the coupled difference.
    Decay {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
    },
    /// Check the asymptotic log-Harnack inequality.
    Alh {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
    },
    /// Check the gradient estimate with finite differences.
    Gradient {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
    },
    /// Check the irreducibility bound on balls of segments.
    Irreducibility {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
    },
    /// Check the heat-kernel bound against a long-run invariant sample.
    Heatkernel {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
    },
    /// Print the Hamiltonian coupling constants.
    Constants {
        #[arg(long)]
        l1: f64,
        #[arg(long)]
        l2: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        r: f64,
        /// Also write a manifest and report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomised falsification of a model's declared constants.
    Validate {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_measure(s: &str) -> std::result::Result<Measure, String> {
    match s {
        "P" | "p" => Ok(Measure::P),
        "Q" | "q" => Ok(Measure::Q),
        _ => Err(format!("measure must be P or Q, not '{s}'")),
    }
}

/// `"1,0.5"` is a constant segment; anything else is a CSV path.
pub fn parse_segment(s: &str) -> SegmentSource {
    let parsed: std::result::Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    match parsed {
        Ok(v) if !v.is_empty() => SegmentSource::Constant(v),
        _ => SegmentSource::Csv(PathBuf::from(s)),
    }
}

fn base_config(model: Option<String>, xi: Option<String>, eta: Option<String>, common: &Common) -> ExperimentConfig {
    ExperimentConfig {
        model: model.map(ModelRef::Named),
        xi: xi.as_deref().map(parse_segment),
        eta: eta.as_deref().map(parse_segment),
        coupling: CouplingParams::default(),
        solver: Default::default(),
        seed: common.seed.unwrap_or(1),
        workers: None,
        output_dir: common.out.clone(),
        checks: Vec::new(),
    }
}

fn load_params<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| SfdeError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| SfdeError::config(format!("{}: {e}", p.display())))
        }
    }
}

fn estimator_config(inputs: &Inputs, common: &Common, check: Check) -> ExperimentConfig {
    let mut cfg = base_config(Some(inputs.model.clone()), Some(inputs.xi.clone()), inputs.eta.clone(), common);
    cfg.coupling.lambda = inputs.lambda;
    let mut check = check;
    if let Some(mc) = check.mc_mut() {
        if let Some(n) = inputs.n_paths {
            mc.n_paths = n;
        }
        if let Some(dt) = inputs.dt {
            mc.dt = dt;
        }
    }
    cfg.checks.push(check);
    cfg
}

/// Parse arguments, run, and map the outcome to an exit status.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("sfde: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn finish(manifest: &Manifest, out: &Path) -> u8 {
    for c in &manifest.checks {
        let status = match (c.pass, c.inconclusive) {
            (None, _) => "done",
            (Some(true), true) => "inconclusive",
            (Some(true), false) => "pass",
            (Some(false), _) => "VIOLATION",
        };
        println!("{:<24} {status}", c.name);
    }
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    println!("manifest: {}", out.join("manifest.json").display());
    manifest.exit_code
}

fn execute(cfg: ExperimentConfig, base: &Path, workers: Option<usize>) -> Result<u8> {
    let out = cfg.output_dir.clone();
    let manifest = run_experiment(cfg, base, workers)?;
    Ok(finish(&manifest, &out))
}

pub fn dispatch(cmd: Command) -> Result<u8> {
    let here = Path::new(".");
    match cmd {
        Command::Run { config, out, seed, workers } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
            execute(cfg, &base, workers)
        }
        Command::Simulate { model, xi, dt, horizon, paths, common } => {
            let mut cfg = base_config(Some(model), Some(xi), None, &common);
            if let Some(dt) = dt {
                cfg.solver.dt = dt;
            }
            if let Some(h) = horizon {
                cfg.solver.horizon = h;
            }
            cfg.checks.push(Check::Simulate(SimulateParams { paths }));
            execute(cfg, here, common.workers)
        }
        Command::Couple { model, xi, eta, lambda, measure, dt, horizon, common } => {
            let mut cfg = base_config(Some(model), Some(xi), Some(eta), &common);
            cfg.coupling = CouplingParams { lambda, measure };
            if let Some(dt) = dt {
                cfg.solver.dt = dt;
            }
            if let Some(h) = horizon {
                cfg.solver.horizon = h;
            }
            cfg.checks.push(Check::Couple(SimulateParams::default()));
            execute(cfg, here, common.workers)
        }
        Command::Decay { inputs, common } => {
            let check = Check::Decay(load_params(&inputs.params)?);
            execute(estimator_config(&inputs, &common, check), here, common.workers)
        }
        Command::Alh { inputs, common } => {
            let check = Check::Alh(load_params(&inputs.params)?);
            execute(estimator_config(&inputs, &common, check), here, common.workers)
        }
        Command::Gradient { inputs, common } => {
            let check = Check::Gradient(load_params(&inputs.params)?);
            execute(estimator_config(&inputs, &common, check), here, common.workers)
        }
        Command::Irreducibility { inputs, common } => {
            let check = Check::Irreducibility(load_params(&inputs.params)?);
            execute(estimator_config(&inputs, &common, check), here, common.workers)
        }
        Command::Heatkernel { inputs, common } => {
            let check = Check::HeatKernel(load_params(&inputs.params)?);
            execute(estimator_config(&inputs, &common, check), here, common.workers)
        }
        Command::Constants { l1, l2, beta, r, out } => {
            let k = hamiltonian_constants(l1, l2, beta, r, &SearchGrid::default())?;
            println!("p0        = {:.12}", k.p0);
            println!("alpha0    = {:.12}", k.alpha0);
            println!("Lambda    = {:.12e}", k.lambda);
            println!("mu        = {:.12e}", k.mu);
            println!("threshold = {:.12e}", k.threshold);
            if let Some(out) = out {
                let common = Common { out, seed: None, workers: Some(1) };
                let mut cfg = base_config(None, None, None, &common);
                cfg.checks.push(Check::Constants(ConstantsParams { l1, l2, beta, r, grid: SearchGrid::default() }));
                return execute(cfg, here, Some(1));
            }
            Ok(EXIT_PASS)
        }
        Command::Validate { model, trials, common } => {
            let mut cfg = base_config(Some(model), None, None, &common);
            cfg.checks.push(Check::Validate(ValidateParams { trials }));
            execute(cfg, here, common.workers)
        }
    }
}
