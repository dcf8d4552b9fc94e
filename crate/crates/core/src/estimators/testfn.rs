use serde::{Deserialize, Serialize};

use crate::error::{Result, SfdeError};
use crate::models::{Expr, Functional, HistoryView, KernelSet, ModelSpec};

/// A test function `f = e^g` with `g` bounded and Lipschitz in `‖·‖_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FSpec {
    pub g: Expr,
    /// Declared Lipschitz constant of `g`; must not undercut the computed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

impl Default for FSpec {
    /// `g(ζ) = tanh(ζ(0)_1)`.
    fn default() -> Self {
        FSpec { g: Expr::tanh(Expr::slice(0, 1, Expr::point())), lipschitz: None }
    }
}

impl FSpec {
    pub fn constant(c: f64) -> Self {
        FSpec { g: Expr::constant(vec![c]), lipschitz: None }
    }
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    g: Functional,
    lip: f64,
    lo: f64,
    hi: f64,
}

impl TestFunction {
    pub fn compile(spec: &FSpec, model: &ModelSpec) -> Result<Self> {
        let mut ks = KernelSet::default();
        let g = Functional::compile(&spec.g, model.dim(), model.rate(), &mut ks)?;
        if !ks.is_empty() {
            return Err(SfdeError::usage("test functions may use point and delay values only"));
        }
        if g.out_dim() != 1 {
            return Err(SfdeError::usage(format!("test function must be scalar, got dimension {}", g.out_dim())));
        }
        let (lo, hi) = g.range()[0];
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(SfdeError::usage("test function must be bounded"));
        }
        let computed = g.lipschitz();
        let lip = match spec.lipschitz {
            Some(l) if l + 1e-12 < computed => {
                return Err(SfdeError::usage(format!(
                    "declared Lipschitz constant {l} is below the computed bound {computed}"
                )))
            }
            Some(l) => l,
            None => computed,
        };
        if !lip.is_finite() {
            return Err(SfdeError::usage("test function Lipschitz constant is undeclared"));
        }
        Ok(TestFunction { g, lip, lo, hi })
    }

    /// `g = log f`.
    pub fn log_f(&self, view: &dyn HistoryView) -> f64 {
        let mut out = [0.0];
        self.g.eval_into(view, &mut out);
        out[0]
    }

    pub fn f(&self, view: &dyn HistoryView) -> f64 {
        self.log_f(view).exp()
    }

    /// `‖∇ log f‖_∞`.
    pub fn lip_log_f(&self) -> f64 {
        self.lip
    }

    /// `‖∇ f‖_∞ ≤ e^{sup g}·Lip(g)`.
    pub fn lip_f(&self) -> f64 {
        self.hi.exp() * self.lip
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn max_delay(&self) -> f64 {
        self.g.max_delay()
    }
}
