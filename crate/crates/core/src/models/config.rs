//! JSON model definitions.
//!
//! ```json
//! {
//!   "name": "linear",
//!   "kind": "nondegenerate",
//!   "dim": 1,
//!   "rate": 1.0,
//!   "drift": {"op": "scale", "factor": -1.0, "arg": {"op": "point"}},
//!   "diffusion": [{"scalar": {"op": "const", "value": [1.0]}}],
//!   "constants": {"k1": 2.0}
//! }
//! ```
//!
//! A diffusion term without `matrix` uses the identity. Galerkin models
//! replace `drift` and `dim` by a `galerkin` block.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diffusion::DiffusionTerm;
use super::expr::{Expr, Functional, KernelSet};
use super::galerkin::{galerkin_truncate, EigenSequence, GalerkinSpec};
use super::{DeclaredConstants, ModelKind, ModelSpec};
use crate::error::{Result, SfdeError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionTermDef {
    pub scalar: Expr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl DiffusionTermDef {
    /// `s(ξ)·I`.
    pub fn scalar(scalar: Expr) -> Self {
        DiffusionTermDef { scalar, matrix: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinModes {
    pub modes: usize,
    pub eigenvalues: EigenSequence,
    pub alpha: f64,
    pub nonlinear: Expr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDef {
    pub name: String,
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Expr>,
    pub diffusion: Vec<DiffusionTermDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral: Option<Expr>,
    #[serde(default)]
    pub constants: DeclaredConstants,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub galerkin: Option<GalerkinModes>,
    /// Declares that the model has an invariant measure (used by the
    /// heat-kernel check, which cannot verify it).
    #[serde(default)]
    pub ergodic: bool,
}

pub(super) fn build_diffusion(
    defs: &[DiffusionTermDef],
    in_dim: usize,
    size: usize,
    rate: f64,
    kernels: &mut KernelSet,
) -> Result<Vec<super::DiffusionTerm>> {
    defs.iter()
        .map(|t| {
            let scalar = Functional::compile(&t.scalar, in_dim, rate, kernels)?;
            let matrix = match &t.matrix {
                None => {
                    let mut m = vec![0.0; size * size];
                    for i in 0..size {
                        m[i * size + i] = 1.0;
                    }
                    m
                }
                Some(rows) => {
                    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
                        return Err(SfdeError::config(format!(
                            "diffusion matrix must be {size}x{size}"
                        )));
                    }
                    rows.iter().flatten().cloned().collect()
                }
            };
            DiffusionTerm::new(scalar, size, matrix)
        })
        .collect()
}

impl ModelDef {
    pub fn build(&self) -> Result<ModelSpec> {
        if self.kind == ModelKind::GalerkinSpde || self.galerkin.is_some() {
            let g = self.galerkin.as_ref().ok_or_else(|| {
                SfdeError::config("galerkin-spde model needs a 'galerkin' block")
            })?;
            if self.drift.is_some() || self.neutral.is_some() {
                return Err(SfdeError::config(
                    "galerkin models take their drift from the 'galerkin' block",
                ));
            }
            if let Some(d) = self.dim {
                if d != g.modes {
                    return Err(SfdeError::config("dim must equal the number of Galerkin modes"));
                }
            }
            return galerkin_truncate(&GalerkinSpec {
                name: self.name.clone(),
                rate: self.rate,
                modes: g.modes,
                eigenvalues: g.eigenvalues.clone(),
                alpha: g.alpha,
                nonlinear: g.nonlinear.clone(),
                diffusion: self.diffusion.clone(),
                constants: self.constants.clone(),
                ergodic: self.ergodic,
            });
        }
        let dim = self.dim.ok_or_else(|| SfdeError::config("model needs 'dim'"))?;
        if dim == 0 {
            return Err(SfdeError::config("model dimension must be positive"));
        }
        let drift_expr =
            self.drift.as_ref().ok_or_else(|| SfdeError::config("model needs 'drift'"))?;
        let noise_dim = if self.kind == ModelKind::Hamiltonian { dim / 2 } else { dim };
        let mut kernels = KernelSet::default();
        let drift = Functional::compile(drift_expr, dim, self.rate, &mut kernels)?;
        let diffusion = build_diffusion(&self.diffusion, dim, noise_dim, self.rate, &mut kernels)?;
        let neutral = self
            .neutral
            .as_ref()
            .map(|e| Functional::compile(e, dim, self.rate, &mut kernels))
            .transpose()?;
        ModelSpec::assemble(
            self.name.clone(),
            self.kind,
            dim,
            self.rate,
            drift,
            diffusion,
            neutral,
            kernels,
            self.constants.clone(),
            None,
            self.ergodic,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SfdeError::io(path, e))?;
        Self::from_json(&text)
    }
}
