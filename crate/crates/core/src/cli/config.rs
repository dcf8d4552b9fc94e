//! Experiment files.
//!
//! Relative model and segment paths are resolved against the directory of
//! the config file. The output directory is taken as given.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::coupling::Measure;
use crate::error::{Result, SfdeError};
use crate::estimators::alh::AlhConfig;
use crate::estimators::constants::SearchGrid;
use crate::estimators::gradient::GradientConfig;
use crate::estimators::heat_kernel::HeatKernelConfig;
use crate::estimators::irreducibility::IrreducibilityConfig;
use crate::estimators::moments::MomentConfig;
use crate::estimators::strong_order::StrongOrderConfig;
use crate::estimators::{FSpec, McConfig};
use crate::models::{builtin, ModelDef, ModelSpec};
use crate::segment::read_segment_csv;
use crate::segment::{steps_for_window, Segment, TailMode};
use crate::solver::SolverConfig;

/// A model given inline, by file, or by the name of a shipped model.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelRef {
    Named(String),
    Inline(Box<ModelDef>),
}

impl<'de> Deserialize<'de> for ModelRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        // Dispatch by hand so that errors inside an inline definition keep
        // their own message instead of "no variant matched".
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) => Ok(ModelRef::Named(s)),
            other => ModelDef::deserialize(other).map(|m| ModelRef::Inline(Box::new(m))).map_err(serde::de::Error::custom),
        }
    }
}

impl ModelRef {
    pub fn resolve(&self, base: &Path) -> Result<ModelDef> {
        match self {
            ModelRef::Inline(m) => Ok((**m).clone()),
            ModelRef::Named(s) => {
                let looks_like_path = s.ends_with(".json") || s.contains('/') || s.contains('\\');
                if looks_like_path {
                    let p = base.join(s);
                    if !p.exists() {
                        return Err(SfdeError::config(format!("model file {} does not exist", p.display())));
                    }
                    return ModelDef::load(&p)
                        .map_err(|e| SfdeError::config(format!("model file {}: {e}", p.display())));
                }
                builtin::shipped().into_iter().find(|(n, _)| n == s).map(|(_, d)| d).ok_or_else(|| {
                    let names: Vec<_> = builtin::shipped().into_iter().map(|(n, _)| n).collect();
                    SfdeError::config(format!("unknown model '{s}' (shipped: {})", names.join(", ")))
                })
            }
        }
    }
}

/// Initial segment source. Generated segments use the solver step and a
/// window long enough that the tail weight drops below 1e-8.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentSource {
    Constant(Vec<f64>),
    /// `ξ(θ) = base + slope·θ`.
    Affine { base: Vec<f64>, slope: Vec<f64> },
    Csv(PathBuf),
}

impl SegmentSource {
    pub fn build(&self, model: &ModelSpec, dt: f64, base: &Path) -> Result<Segment> {
        let window = Segment::default_window(model.rate()).max(model.max_delay() + dt);
        let steps = steps_for_window(window, dt);
        let seg = match self {
            SegmentSource::Constant(v) => Segment::constant(v, dt, steps, TailMode::Constant)?,
            SegmentSource::Affine { base, slope } => {
                if base.len() != slope.len() {
                    return Err(SfdeError::config("affine segment: base and slope differ in length"));
                }
                Segment::from_fn(base.len(), dt, steps, TailMode::Constant, |t, row| {
                    for (i, x) in row.iter_mut().enumerate() {
                        *x = base[i] + slope[i] * t;
                    }
                })?
            }
            SegmentSource::Csv(p) => {
                let p = base.join(p);
                let (seg, meta) = read_segment_csv(&p)?;
                if (meta.r - model.rate()).abs() > 1e-12 * model.rate() {
                    return Err(SfdeError::config(format!(
                        "{}: segment was written for r = {}, model has r = {}",
                        p.display(),
                        meta.r,
                        model.rate()
                    )));
                }
                seg
            }
        };
        if seg.dim() != model.dim() {
            return Err(SfdeError::config(format!(
                "segment has dimension {}, model '{}' has {}",
                seg.dim(),
                model.name(),
                model.dim()
            )));
        }
        Ok(seg)
    }

    /// Identity for hashing: file sources hash their bytes and sidecar.
    fn canonical(&self, base: &Path) -> Result<serde_json::Value> {
        Ok(match self {
            SegmentSource::Csv(p) => {
                let p = base.join(p);
                let mut h = Sha256::new();
                for f in [p.clone(), crate::segment::sidecar_path(&p)] {
                    h.update(std::fs::read(&f).map_err(|e| SfdeError::io(&f, e))?);
                }
                serde_json::json!({ "csv_sha256": hex::encode(h.finalize()) })
            }
            other => serde_json::to_value(other)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingParams {
    pub lambda: Option<f64>,
    pub measure: Measure,
}

impl Default for CouplingParams {
    fn default() -> Self {
        CouplingParams { lambda: None, measure: Measure::Q }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateParams {
    pub paths: usize,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams { paths: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayParams {
    pub p: f64,
    /// Explicit grid; otherwise `points` even times up to `horizon`.
    pub t_grid: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub points: usize,
    /// Rate the fit must reach; `r/2` when absent.
    pub target: Option<f64>,
    /// Offset scales for the moment-scaling check (skipped when empty).
    pub scales: Vec<f64>,
    pub scale_t: Option<f64>,
    pub scale_tol: f64,
    pub mc: McConfig,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            p: 2.0,
            t_grid: None,
            horizon: None,
            points: 16,
            target: None,
            scales: Vec::new(),
            scale_t: None,
            scale_tol: 0.1,
            mc: McConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MartingaleParams {
    pub times: Vec<f64>,
    pub mc: McConfig,
}

impl Default for MartingaleParams {
    fn default() -> Self {
        MartingaleParams { times: vec![1.0, 5.0], mc: McConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsistencyParams {
    pub f: FSpec,
    pub t: f64,
    pub mc: McConfig,
}

impl Default for ConsistencyParams {
    fn default() -> Self {
        ConsistencyParams { f: FSpec::default(), t: 2.0, mc: McConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateParams {
    pub trials: usize,
}

impl Default for ValidateParams {
    fn default() -> Self {
        ValidateParams { trials: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsParams {
    pub l1: f64,
    pub l2: f64,
    pub beta: f64,
    pub r: f64,
    #[serde(default)]
    pub grid: SearchGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    Simulate(SimulateParams),
    Couple(SimulateParams),
    Decay(DecayParams),
    Alh(AlhConfig),
    Gradient(GradientConfig),
    Irreducibility(IrreducibilityConfig),
    #[serde(rename = "heatkernel")]
    HeatKernel(HeatKernelConfig),
    Moments(MomentConfig),
    StrongOrder(StrongOrderConfig),
    Martingale(MartingaleParams),
    MeasureConsistency(ConsistencyParams),
    Validate(ValidateParams),
    Constants(ConstantsParams),
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::Simulate(_) => "simulate",
            Check::Couple(_) => "couple",
            Check::Decay(_) => "decay",
            Check::Alh(_) => "alh",
            Check::Gradient(_) => "gradient",
            Check::Irreducibility(_) => "irreducibility",
            Check::HeatKernel(_) => "heatkernel",
            Check::Moments(_) => "moments",
            Check::StrongOrder(_) => "strong_order",
            Check::Martingale(_) => "martingale",
            Check::MeasureConsistency(_) => "measure_consistency",
            Check::Validate(_) => "validate",
            Check::Constants(_) => "constants",
        }
    }

    pub fn needs_model(&self) -> bool {
        !matches!(self, Check::Constants(_))
    }

    pub fn needs_xi(&self) -> bool {
        !matches!(self, Check::Constants(_) | Check::Validate(_))
    }

    pub fn needs_eta(&self) -> bool {
        matches!(
            self,
            Check::Couple(_)
                | Check::Decay(_)
                | Check::Alh(_)
                | Check::Irreducibility(_)
                | Check::Martingale(_)
                | Check::MeasureConsistency(_)
        )
    }

    pub fn mc_mut(&mut self) -> Option<&mut McConfig> {
        match self {
            Check::Decay(p) => Some(&mut p.mc),
            Check::Alh(c) => Some(&mut c.mc),
            Check::Gradient(c) => Some(&mut c.mc),
            Check::Irreducibility(c) => Some(&mut c.mc),
            Check::HeatKernel(c) => Some(&mut c.mc),
            Check::Moments(c) => Some(&mut c.mc),
            Check::Martingale(p) => Some(&mut p.mc),
            Check::MeasureConsistency(p) => Some(&mut p.mc),
            _ => None,
        }
    }

    fn set_seed(&mut self, seed: u64) {
        if let Check::StrongOrder(c) = self {
            c.seed = seed;
        }
        if let Some(mc) = self.mc_mut() {
            mc.seed = seed;
        }
    }

    fn step_sizes(&self) -> Vec<f64> {
        match self {
            Check::StrongOrder(c) => c.dt_exponents.iter().map(|k| 2f64.powi(-(*k as i32))).collect(),
            Check::Decay(p) => vec![p.mc.dt],
            Check::Alh(c) => vec![c.mc.dt],
            Check::Gradient(c) => vec![c.mc.dt],
            Check::Irreducibility(c) => vec![c.mc.dt],
            Check::HeatKernel(c) => vec![c.mc.dt],
            Check::Moments(c) => vec![c.mc.dt],
            Check::Martingale(p) => vec![p.mc.dt],
            Check::MeasureConsistency(p) => vec![p.mc.dt],
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: Option<ModelRef>,
    #[serde(default)]
    pub xi: Option<SegmentSource>,
    #[serde(default)]
    pub eta: Option<SegmentSource>,
    #[serde(default)]
    pub coupling: CouplingParams,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Master seed; overrides every nested seed.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub checks: Vec<Check>,
}

fn default_seed() -> u64 {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("sfde-out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SfdeError::io(path, e))?;
        Self::from_json(&text).map_err(|e| SfdeError::config(format!("{}: {e}", path.display())))
    }
}

/// A config with its model and segments materialised.
pub struct Resolved {
    pub config: ExperimentConfig,
    pub model_def: Option<ModelDef>,
    pub model: Option<ModelSpec>,
    pub xi: Option<Segment>,
    pub eta: Option<Segment>,
    pub hash: String,
}

/// Check the config, build the model and segments, and push the master seed
/// into every check.
pub fn resolve(mut config: ExperimentConfig, base: &Path) -> Result<Resolved> {
    if config.seed == 0 {
        return Err(SfdeError::config("seed must be positive"));
    }
    if config.workers == Some(0) {
        return Err(SfdeError::config("worker count must be positive"));
    }
    if config.checks.is_empty() {
        return Err(SfdeError::config("no checks selected"));
    }
    let seed = config.seed;
    config.solver.seed = seed;
    for c in config.checks.iter_mut() {
        c.set_seed(seed);
    }
    let needs_model = config.checks.iter().any(Check::needs_model);
    let model_def = match (&config.model, needs_model) {
        (Some(m), _) => Some(m.resolve(base)?),
        (None, true) => return Err(SfdeError::config("the selected checks need a model")),
        (None, false) => None,
    };
    let model = model_def.as_ref().map(ModelDef::build).transpose()?;
    let (mut xi, mut eta) = (None, None);
    if let Some(m) = &model {
        let r = m.rate();
        let mut dts = vec![config.solver.dt];
        dts.extend(config.checks.iter().flat_map(Check::step_sizes));
        for dt in dts {
            if !(dt > 0.0) || r * dt > std::f64::consts::LN_2 * (1.0 + 1e-12) {
                return Err(SfdeError::config(format!("dt = {dt} violates e^(r dt) <= 2 for r = {r}")));
            }
        }
        let dt = config.solver.dt;
        xi = config.xi.as_ref().map(|s| s.build(m, dt, base)).transpose()?;
        if xi.is_none() {
            if let Some(c) = config.checks.iter().find(|c| c.needs_xi()) {
                return Err(SfdeError::config(format!("check '{}' needs an initial segment `xi`", c.kind())));
            }
        }
        eta = config.eta.as_ref().map(|s| s.build(m, dt, base)).transpose()?;
        if eta.is_none() {
            if let Some(c) = config.checks.iter().find(|c| c.needs_eta()) {
                return Err(SfdeError::config(format!("check '{}' needs a second segment `eta`", c.kind())));
            }
        }
    }
    let hash = config_hash(&config, model_def.as_ref(), base)?;
    Ok(Resolved { config, model_def, model, xi, eta, hash })
}

/// SHA-256 of the canonical JSON of everything that affects results:
/// the resolved model, segment identities, coupling, solver, seed and
/// checks with their defaults filled in. Output directory and worker count
/// are left out since they cannot change a result.
pub fn config_hash(config: &ExperimentConfig, model: Option<&ModelDef>, base: &Path) -> Result<String> {
    let seg = |s: &Option<SegmentSource>| -> Result<serde_json::Value> {
        s.as_ref().map(|s| s.canonical(base)).transpose().map(|v| v.unwrap_or(serde_json::Value::Null))
    };
    let canonical = serde_json::json!({
        "model": model,
        "xi": seg(&config.xi)?,
        "eta": seg(&config.eta)?,
        "coupling": config.coupling,
        "solver": config.solver,
        "seed": config.seed,
        "checks": config.checks,
    });
    // serde_json maps are ordered by key, so this string is canonical.
    let text = serde_json::to_string(&canonical)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}
