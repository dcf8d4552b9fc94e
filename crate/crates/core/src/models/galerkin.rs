//! Spectral Galerkin truncation of a semilinear SPDE
//! `dX = (A·X + b(X_t)) dt + σ(X_t) dW` to its first `N` modes.

use serde::{Deserialize, Serialize};

use super::config::{build_diffusion, DiffusionTermDef};
use super::expr::{Expr, Functional, KernelSet};
use super::{DeclaredConstants, ModelKind, ModelSpec};
use crate::error::{Result, SfdeError};

/// Eigenvalues `λ_1 ≤ λ_2 ≤ …` of `-A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenSequence {
    /// `λ_i = scale·i^exponent`.
    Power { scale: f64, exponent: f64 },
    List(Vec<f64>),
}

impl EigenSequence {
    pub fn first(&self, n: usize) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            EigenSequence::Power { scale, exponent } => {
                (1..=n).map(|i| scale * (i as f64).powf(*exponent)).collect()
            }
            EigenSequence::List(l) => {
                if l.len() < n {
                    return Err(SfdeError::config(format!(
                        "{n} modes requested but only {} eigenvalues listed",
                        l.len()
                    )));
                }
                l[..n].to_vec()
            }
        };
        if let Some(x) = v.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
            return Err(SfdeError::config(format!("eigenvalues must be positive, got {x}")));
        }
        if v.windows(2).any(|w| w[1] < w[0]) {
            return Err(SfdeError::config("eigenvalues must be nondecreasing"));
        }
        Ok(v)
    }

    /// Whether `Σ λ_i^{-α}` is finite for the full (untruncated) sequence.
    pub fn series_converges(&self, alpha: f64) -> bool {
        match self {
            EigenSequence::Power { exponent, .. } => exponent * alpha > 1.0,
            EigenSequence::List(_) => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GalerkinSpec {
    pub name: String,
    pub rate: f64,
    pub modes: usize,
    pub eigenvalues: EigenSequence,
    pub alpha: f64,
    /// `b_N`, acting on the truncated coordinates.
    pub nonlinear: Expr,
    pub diffusion: Vec<DiffusionTermDef>,
    pub constants: DeclaredConstants,
    pub ergodic: bool,
}

#[derive(Clone, Debug)]
pub struct GalerkinInfo {
    pub eigenvalues: Vec<f64>,
    pub alpha: f64,
    pub nonlinear: Functional,
    /// `Σ_{i≤N} λ_i^{-α}`.
    pub partial_sum: f64,
}

impl GalerkinInfo {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().cloned().unwrap_or(0.0)
    }
}

/// Nondegenerate model on `R^N` with drift `-diag(λ)·x + b_N` and the
/// given diffusion. `L₀` and `K₁ = 2·L₀` default to the Lipschitz bound of
/// `b_N` (plus that of `σ` for `L₀`), which does not depend on `N`.
pub fn galerkin_truncate(g: &GalerkinSpec) -> Result<ModelSpec> {
    if g.modes == 0 {
        return Err(SfdeError::config("at least one Galerkin mode is needed"));
    }
    if !(g.alpha > 0.0 && g.alpha < 1.0) {
        return Err(SfdeError::config(format!("alpha must lie in (0,1), got {}", g.alpha)));
    }
    if !g.eigenvalues.series_converges(g.alpha) {
        return Err(SfdeError::config("the eigenvalue series Σ λ_i^(-alpha) diverges"));
    }
    let n = g.modes;
    let lam = g.eigenvalues.first(n)?;
    let mut kernels = KernelSet::default();
    let nonlinear = Functional::compile(&g.nonlinear, n, g.rate, &mut kernels)?;
    if nonlinear.out_dim() != n {
        return Err(SfdeError::config("the nonlinear drift must have one entry per mode"));
    }
    let diag: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { -lam[i] } else { 0.0 }).collect())
        .collect();
    let drift_expr = Expr::sum(vec![Expr::linear(diag, Expr::point()), g.nonlinear.clone()]);
    let drift = Functional::compile(&drift_expr, n, g.rate, &mut kernels)?;
    let diffusion = build_diffusion(&g.diffusion, n, n, g.rate, &mut kernels)?;
    let partial_sum = lam.iter().map(|l| l.powf(-g.alpha)).sum();
    let info = GalerkinInfo { eigenvalues: lam, alpha: g.alpha, nonlinear, partial_sum };
    ModelSpec::assemble(
        g.name.clone(),
        ModelKind::Nondegenerate,
        n,
        g.rate,
        drift,
        diffusion,
        None,
        kernels,
        g.constants.clone(),
        Some(info),
        g.ergodic,
    )
}
