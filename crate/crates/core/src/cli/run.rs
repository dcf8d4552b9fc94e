use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::{resolve, Check, DecayParams, ExperimentConfig, Resolved};
use crate::coupling::{simulate_coupled, CouplingSpec, Measure};
use crate::error::{Result, SfdeError};
use crate::estimators::alh::check_alh;
use crate::estimators::constants::hamiltonian_constants;
use crate::estimators::decay::{estimate_decay, even_grid, offset_scaling};
use crate::estimators::girsanov::{check_martingale, check_measure_consistency};
use crate::estimators::gradient::check_gradient;
use crate::estimators::heat_kernel::check_heat_kernel;
use crate::estimators::irreducibility::check_irreducibility;
use crate::estimators::moments::check_moments;
use crate::estimators::strong_order::check_strong_order;
use crate::estimators::CheckOutcome;
use crate::models::validate::RandomPairs;
use crate::models::{validate_assumptions, ModelSpec};
use crate::rng::domain;
use crate::segment::Segment;
use crate::solver::{simulate_path, GaussianNoise};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_VIOLATION: u8 = 2;

/// One line of the manifest per check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub kind: String,
    /// `None` for simulations and tables, which assert nothing.
    pub pass: Option<bool>,
    pub inconclusive: bool,
    pub outputs: Vec<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub versions: Versions,
    pub timestamp: u64,
    pub workers: usize,
    pub model: Option<String>,
    pub warnings: Vec<String>,
    pub checks: Vec<CheckSummary>,
    pub exit_code: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub sfde: &'static str,
    pub report_format: u32,
}

impl Manifest {
    pub fn violated(&self) -> bool {
        self.checks.iter().any(|c| c.pass == Some(false))
    }
}

fn worker_count(flag: Option<usize>, config: Option<usize>) -> Result<usize> {
    if let Some(n) = flag.or(config) {
        return Ok(n);
    }
    match std::env::var("SFDE_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| SfdeError::config(format!("SFDE_WORKERS = '{v}' is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Run every check of `config` and write the artifacts. `base` anchors
/// relative input paths.
pub fn run_experiment(config: ExperimentConfig, base: &Path, workers: Option<usize>) -> Result<Manifest> {
    let workers = worker_count(workers, config.workers)?;
    if workers == 0 {
        return Err(SfdeError::config("worker count must be positive"));
    }
    let resolved = resolve(config, base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SfdeError::config(format!("thread pool: {e}")))?;
    pool.install(|| execute(&resolved, workers))
}

fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| SfdeError::io(p, e))
}

fn create(p: &Path) -> Result<BufWriter<File>> {
    File::create(p).map(BufWriter::new).map_err(|e| SfdeError::io(p, e))
}

fn write_json<T: Serialize>(p: &Path, v: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    std::fs::write(p, text).map_err(|e| SfdeError::io(p, e))
}

fn labels(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let dup = checks.iter().filter(|d| d.kind() == c.kind()).count() > 1;
            if dup {
                format!("{}_{}", c.kind(), i)
            } else {
                c.kind().to_string()
            }
        })
        .collect()
}

struct Ctx<'a> {
    res: &'a Resolved,
    out: &'a Path,
}

impl Ctx<'_> {
    fn model(&self) -> &ModelSpec {
        self.res.model.as_ref().expect("checked in resolve")
    }
    fn xi(&self) -> &Segment {
        self.res.xi.as_ref().expect("checked in resolve")
    }
    fn eta(&self) -> &Segment {
        self.res.eta.as_ref().expect("checked in resolve")
    }
    fn spec(&self, measure: Measure) -> Result<CouplingSpec<'_>> {
        CouplingSpec::new(self.model(), self.res.config.coupling.lambda, measure)
    }
    fn report(&self, name: &str) -> PathBuf {
        self.out.join("reports").join(format!("{name}.json"))
    }
    fn path(&self, name: &str) -> PathBuf {
        self.out.join("paths").join(format!("{name}.csv"))
    }
}

fn execute(res: &Resolved, workers: usize) -> Result<Manifest> {
    let cfg = &res.config;
    let out = cfg.output_dir.as_path();
    create_dir(&out.join("reports"))?;
    create_dir(&out.join("paths"))?;
    let ctx = Ctx { res, out };
    let mut warnings = Vec::new();
    if let Some(m) = &res.model {
        warnings.extend(CouplingSpec::new(m, cfg.coupling.lambda, cfg.coupling.measure)?.warnings().iter().cloned());
    }
    let mut checks = Vec::new();
    for (check, name) in cfg.checks.iter().zip(labels(&cfg.checks)) {
        checks.push(run_check(&ctx, check, &name)?);
    }
    let mut manifest = Manifest {
        config_hash: res.hash.clone(),
        seed: cfg.seed,
        versions: Versions { sfde: env!("CARGO_PKG_VERSION"), report_format: 1 },
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        workers,
        model: res.model_def.as_ref().map(|m| m.name.clone()),
        warnings,
        checks,
        exit_code: EXIT_PASS,
    };
    if manifest.violated() {
        manifest.exit_code = EXIT_VIOLATION;
    }
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn outcome(ctx: &Ctx, name: &str, kind: &str, o: &CheckOutcome) -> Result<CheckSummary> {
    let p = ctx.report(name);
    write_json(&p, o)?;
    Ok(CheckSummary { name: name.into(), kind: kind.into(), pass: Some(o.pass), inconclusive: o.inconclusive, outputs: vec![p] })
}

fn run_check(ctx: &Ctx, check: &Check, name: &str) -> Result<CheckSummary> {
    let cfg = &ctx.res.config;
    let kind = check.kind();
    match check {
        Check::Simulate(p) => {
            let m = ctx.model();
            let mut outputs = Vec::new();
            for i in 0..p.paths {
                let mut noise = GaussianNoise::new(cfg.seed, domain::SIMULATE, i as u64, cfg.solver.dt);
                let tr = simulate_path(m, ctx.xi(), &cfg.solver, &mut noise)?;
                let file = if p.paths == 1 { ctx.path(name) } else { ctx.path(&format!("{name}_{i}")) };
                tr.write_csv(create(&file)?)?;
                outputs.push(file);
            }
            Ok(CheckSummary { name: name.into(), kind: kind.into(), pass: None, inconclusive: false, outputs })
        }
        Check::Couple(p) => {
            let cs = ctx.spec(cfg.coupling.measure)?;
            let mut outputs = Vec::new();
            for i in 0..p.paths {
                let mut noise = GaussianNoise::new(cfg.seed, domain::COUPLED, i as u64, cfg.solver.dt);
                let tr = simulate_coupled(&cs, ctx.xi(), ctx.eta(), &cfg.solver, &mut noise)?;
                let file = if p.paths == 1 { ctx.path(name) } else { ctx.path(&format!("{name}_{i}")) };
                tr.write_csv(create(&file)?)?;
                outputs.push(file);
            }
            Ok(CheckSummary { name: name.into(), kind: kind.into(), pass: None, inconclusive: false, outputs })
        }
        Check::Decay(p) => run_decay(ctx, p, name),
        Check::Alh(c) => outcome(ctx, name, kind, &check_alh(&ctx.spec(Measure::Q)?, ctx.xi(), ctx.eta(), c)?),
        Check::Gradient(c) => outcome(ctx, name, kind, &check_gradient(&ctx.spec(Measure::Q)?, ctx.xi(), c)?),
        Check::Irreducibility(c) => {
            outcome(ctx, name, kind, &check_irreducibility(&ctx.spec(Measure::Q)?, ctx.xi(), ctx.eta(), c)?)
        }
        Check::HeatKernel(c) => outcome(ctx, name, kind, &check_heat_kernel(&ctx.spec(Measure::Q)?, ctx.xi(), c)?),
        Check::Moments(c) => outcome(ctx, name, kind, &check_moments(ctx.model(), ctx.xi(), c)?),
        Check::StrongOrder(c) => outcome(ctx, name, kind, &check_strong_order(ctx.model(), ctx.xi(), c)?),
        Check::Martingale(p) => {
            outcome(ctx, name, kind, &check_martingale(&ctx.spec(Measure::P)?, ctx.xi(), ctx.eta(), &p.times, &p.mc)?)
        }
        Check::MeasureConsistency(p) => outcome(
            ctx,
            name,
            kind,
            &check_measure_consistency(&ctx.spec(Measure::Q)?, ctx.xi(), ctx.eta(), &p.f, p.t, &p.mc)?,
        ),
        Check::Validate(p) => {
            let m = ctx.model();
            let mut pairs = RandomPairs::for_model(m, cfg.seed);
            let rep = validate_assumptions(m, &mut pairs, p.trials)?;
            let file = ctx.report(name);
            write_json(&file, &rep)?;
            Ok(CheckSummary { name: name.into(), kind: kind.into(), pass: Some(rep.pass), inconclusive: false, outputs: vec![file] })
        }
        Check::Constants(p) => {
            let k = hamiltonian_constants(p.l1, p.l2, p.beta, p.r, &p.grid)?;
            let file = ctx.report(name);
            write_json(&file, &k)?;
            Ok(CheckSummary { name: name.into(), kind: kind.into(), pass: None, inconclusive: false, outputs: vec![file] })
        }
    }
}

fn run_decay(ctx: &Ctx, p: &DecayParams, name: &str) -> Result<CheckSummary> {
    let m = ctx.model();
    let cs = ctx.spec(Measure::Q)?;
    let r = m.rate();
    let grid = match &p.t_grid {
        Some(g) => g.clone(),
        None => even_grid(p.horizon.unwrap_or(10.0 / r), p.points, p.mc.dt),
    };
    let fit = estimate_decay(&cs, ctx.xi(), ctx.eta(), p.p, &grid, &p.mc, p.target.unwrap_or(r / 2.0))?;
    let mut reports = vec![fit.report.clone()];
    if !p.scales.is_empty() {
        let t = p.scale_t.unwrap_or(*grid.last().expect("non-empty grid"));
        let (_, rep) = offset_scaling(&cs, ctx.xi(), ctx.eta(), &p.scales, p.p, t, &p.mc, p.scale_tol)?;
        reports.push(rep);
    }
    let o = CheckOutcome::new("decay", m.name(), reports)
        .with_calibration("c_hat", fit.c_hat)
        .with_calibration("lambda", cs.lambda());
    let mut summary = outcome(ctx, name, "decay", &o)?;
    let file = ctx.path(&format!("{name}_moments"));
    let mut w = csv::Writer::from_writer(create(&file)?);
    w.write_record(["t", "mean_norm_p", "stderr"])?;
    for ((t, mo), se) in fit.t_grid.iter().zip(&fit.moments).zip(&fit.moment_se) {
        w.write_record([t.to_string(), mo.to_string(), se.to_string()])?;
    }
    w.flush().map_err(|e| SfdeError::io(&file, e))?;
    summary.outputs.push(file);
    Ok(summary)
}
