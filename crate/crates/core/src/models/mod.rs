//! Model classes and their coefficient functionals.
//!
//! A [`ModelSpec`] owns compiled drift, diffusion and (for neutral models)
//! neutral functionals over a shared [`KernelSet`], plus the declared
//! assumption constants. Hamiltonian models act on the stacked state
//! `(x, y) ∈ R^{2n}`: position `x` integrates `λ·y`, and the drift,
//! diffusion and noise live on the momentum block `y`.

pub mod builtin;
mod config;
mod diffusion;
mod expr;
mod galerkin;
pub mod validate;
mod view;

pub use config::{DiffusionTermDef, ModelDef};
pub use diffusion::{DiffusionValue, DiffusionTerm};
pub use expr::{Expr, Functional, HistoryView, Kernel, KernelSet, PointFn};
pub use galerkin::{galerkin_truncate, EigenSequence, GalerkinInfo, GalerkinSpec};
pub use validate::{validate_assumptions, ConditionResult, PairSampler, ValidationReport, Witness};
pub use view::{stack_pair, SegmentView};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfdeError};
use crate::segment::Segment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Nondegenerate,
    Neutral,
    GalerkinSpde,
    Hamiltonian,
}

/// Assumption constants carried with the model. Missing entries are filled
/// from the analytic Lipschitz bounds of the expressions where possible.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredConstants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_inv_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Position speed of a Hamiltonian model, `dX = λ·Y dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ModelSpec {
    name: String,
    kind: ModelKind,
    dim: usize,
    noise_dim: usize,
    rate: f64,
    drift: Functional,
    diffusion: Vec<DiffusionTerm>,
    neutral: Option<Functional>,
    kernels: KernelSet,
    constants: DeclaredConstants,
    derived: Vec<String>,
    galerkin: Option<GalerkinInfo>,
    ergodic: bool,
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(SfdeError::config(format!("declared {name} must be positive and finite, got {x}")))
        }
        _ => Ok(()),
    }
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn kind(&self) -> ModelKind {
        self.kind
    }
    /// State dimension (`2n` for Hamiltonian models).
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Brownian dimension; also the size of the block that receives drift and noise.
    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    /// First state coordinate of the noise block.
    pub fn noise_offset(&self) -> usize {
        self.dim - self.noise_dim
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }
    pub fn kernels(&self) -> &KernelSet {
        &self.kernels
    }
    pub fn constants(&self) -> &DeclaredConstants {
        &self.constants
    }
    /// Names of constants filled from expression bounds rather than declared.
    pub fn derived_constants(&self) -> &[String] {
        &self.derived
    }
    pub fn galerkin(&self) -> Option<&GalerkinInfo> {
        self.galerkin.as_ref()
    }
    pub fn ergodic(&self) -> bool {
        self.ergodic
    }
    pub fn drift_functional(&self) -> &Functional {
        &self.drift
    }
    pub fn neutral_functional(&self) -> Option<&Functional> {
        self.neutral.as_ref()
    }
    pub fn diffusion_terms(&self) -> &[DiffusionTerm] {
        &self.diffusion
    }

    /// Longest delay used by any coefficient.
    pub fn max_delay(&self) -> f64 {
        let mut d = self.drift.max_delay();
        for t in &self.diffusion {
            d = d.max(t.scalar().max_delay());
        }
        if let Some(g) = &self.neutral {
            d = d.max(g.max_delay());
        }
        d
    }

    /// Hamiltonian position speed (0 for other kinds).
    pub fn position_speed(&self) -> f64 {
        match self.kind {
            ModelKind::Hamiltonian => self.constants.lambda.unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// Lipschitz constant of `σ` in Hilbert–Schmidt norm.
    pub fn diffusion_hs_lipschitz(&self) -> f64 {
        self.diffusion.iter().map(|t| t.scalar().lipschitz() * t.frobenius()).sum()
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        name: String,
        kind: ModelKind,
        dim: usize,
        rate: f64,
        drift: Functional,
        diffusion: Vec<DiffusionTerm>,
        neutral: Option<Functional>,
        kernels: KernelSet,
        constants: DeclaredConstants,
        galerkin: Option<GalerkinInfo>,
        ergodic: bool,
    ) -> Result<ModelSpec> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(SfdeError::config(format!("memory rate must be positive, got {rate}")));
        }
        let noise_dim = match kind {
            ModelKind::Hamiltonian => {
                if dim % 2 != 0 {
                    return Err(SfdeError::config("hamiltonian state dimension must be even"));
                }
                dim / 2
            }
            _ => dim,
        };
        if drift.out_dim() != noise_dim {
            return Err(SfdeError::config(format!(
                "drift has dimension {}, expected {noise_dim}",
                drift.out_dim()
            )));
        }
        if diffusion.is_empty() {
            return Err(SfdeError::config("diffusion needs at least one term"));
        }
        for t in &diffusion {
            if t.size() != noise_dim || t.scalar().out_dim() != 1 {
                return Err(SfdeError::config(format!(
                    "diffusion terms must be scalar times a {noise_dim}x{noise_dim} matrix"
                )));
            }
        }
        match (&neutral, kind) {
            (Some(g), ModelKind::Neutral) if g.out_dim() != dim => {
                return Err(SfdeError::config("neutral term has the wrong dimension"));
            }
            (None, ModelKind::Neutral) => {
                return Err(SfdeError::config("neutral model needs a neutral term"));
            }
            (Some(_), k) if k != ModelKind::Neutral => {
                return Err(SfdeError::config("only neutral models take a neutral term"));
            }
            _ => {}
        }
        let mut spec = ModelSpec {
            name,
            kind,
            dim,
            noise_dim,
            rate,
            drift,
            diffusion,
            neutral,
            kernels,
            constants,
            derived: Vec::new(),
            galerkin,
            ergodic,
        };
        spec.fill_constants();
        spec.check_constants()?;
        Ok(spec)
    }

    fn fill_constants(&mut self) {
        let lb = self.drift.lipschitz();
        let ls = self.diffusion_hs_lipschitz();
        let set = |slot: &mut Option<f64>, name: &str, v: f64, derived: &mut Vec<String>| {
            if slot.is_none() && v.is_finite() {
                *slot = Some(v);
                derived.push(name.to_string());
            }
        };
        let c = &mut self.constants;
        let d = &mut self.derived;
        set(&mut c.k2, "k2", ls * ls, d);
        match self.kind {
            ModelKind::Nondegenerate | ModelKind::GalerkinSpde => match &self.galerkin {
                Some(g) => {
                    let ln = g.nonlinear.lipschitz();
                    set(&mut c.l0, "l0", ln + ls, d);
                    set(&mut c.k1, "k1", 2.0 * ln, d);
                }
                None => set(&mut c.k1, "k1", 2.0 * lb, d),
            },
            ModelKind::Neutral => {
                let lg = self.neutral.as_ref().map(|g| g.lipschitz()).unwrap_or(0.0);
                set(&mut c.delta, "delta", lg, d);
                let delta = c.delta.unwrap_or(lg);
                set(&mut c.l, "l", 2.0 * (1.0 + delta) * lb, d);
            }
            ModelKind::Hamiltonian => {
                if let Some(beta) = c.beta {
                    set(&mut c.l1, "l1", (1.0 + beta * beta).sqrt() * lb, d);
                }
                set(&mut c.l2, "l2", ls * ls, d);
            }
        }
        if let Some((smax, sinv)) = diffusion::scalar_bounds(&self.diffusion) {
            set(&mut c.sigma_max, "sigma_max", smax, d);
            set(&mut c.sigma_inv_max, "sigma_inv_max", sinv, d);
        }
    }

    fn check_constants(&self) -> Result<()> {
        let c = &self.constants;
        for (n, v) in [
            ("sigma_max", c.sigma_max),
            ("sigma_inv_max", c.sigma_inv_max),
            ("beta", c.beta),
            ("lambda", c.lambda),
        ] {
            positive(n, v)?;
        }
        for (n, v) in [("k1", c.k1), ("k2", c.k2), ("l", c.l), ("l0", c.l0), ("l1", c.l1), ("l2", c.l2)]
        {
            if let Some(x) = v {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(SfdeError::config(format!("declared {n} must be finite and >= 0")));
                }
            }
        }
        match self.kind {
            ModelKind::Neutral => match c.delta {
                Some(d) if d > 0.0 && d < 1.0 => {}
                Some(d) if d == 0.0 => {}
                other => {
                    return Err(SfdeError::config(format!(
                        "neutral model needs delta in (0,1), got {other:?}"
                    )))
                }
            },
            ModelKind::Hamiltonian => {
                if c.beta.is_none() || c.lambda.is_none() {
                    return Err(SfdeError::config("hamiltonian model needs beta > 0 and lambda > 0"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `b` into `out` (length `noise_dim`).
    pub fn drift_into(&self, view: &dyn HistoryView, out: &mut [f64]) -> Result<()> {
        self.drift.eval_into(view, out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(SfdeError::ModelEvaluation { norm: view.norm() });
        }
        Ok(())
    }

    /// Drift of the full state: `b` for most kinds, `(λ·y(0), b)` for Hamiltonian ones.
    pub fn full_drift_into(&self, view: &dyn HistoryView, out: &mut [f64]) -> Result<()> {
        let off = self.noise_offset();
        if off > 0 {
            let lam = self.position_speed();
            let y = &view.point()[off..];
            for (o, v) in out[..off].iter_mut().zip(y) {
                *o = lam * v;
            }
        }
        self.drift_into(view, &mut out[off..])
    }

    pub fn diffusion_into(&self, view: &dyn HistoryView, out: &mut DiffusionValue) -> Result<()> {
        diffusion::evaluate(&self.diffusion, view, out)?;
        if !out.is_finite() {
            return Err(SfdeError::ModelEvaluation { norm: view.norm() });
        }
        Ok(())
    }

    pub fn neutral_into(&self, view: &dyn HistoryView, out: &mut [f64]) -> Result<()> {
        let g = self.neutral.as_ref().ok_or_else(|| {
            SfdeError::usage(format!("model '{}' has no neutral term", self.name))
        })?;
        g.eval_into(view, out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(SfdeError::ModelEvaluation { norm: view.norm() });
        }
        Ok(())
    }

    /// `b(ξ)`. For Hamiltonian models the view is the stacked pair.
    pub fn eval_drift(&self, view: &dyn HistoryView) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.noise_dim];
        self.drift_into(view, &mut out)?;
        Ok(out)
    }

    pub fn eval_diffusion(&self, view: &dyn HistoryView) -> Result<DiffusionValue> {
        let mut out = DiffusionValue::new(self.noise_dim);
        self.diffusion_into(view, &mut out)?;
        Ok(out)
    }

    pub fn eval_neutral(&self, view: &dyn HistoryView) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.neutral_into(view, &mut out)?;
        Ok(out)
    }

    /// Evaluate on a bare segment (or a stacked pair for Hamiltonian models).
    pub fn view<'a>(&'a self, seg: &'a Segment) -> Result<SegmentView<'a>> {
        SegmentView::new(self, seg)
    }
}

#[cfg(test)]
mod tests;
