//! Euler–Maruyama time stepping with grid-frozen segments.
//!
//! Coefficients are evaluated on the history up to the left grid point.
//! Neutral models solve their implicit step by Picard iteration; Hamiltonian
//! models move positions by `λ·y(0)·dt` without noise.

mod history;
mod noise;
mod trajectory;

pub use history::{PathHistory, TentativeView};
pub use noise::{Aggregated, GaussianNoise, NoiseSource, RecordedNoise, ZeroNoise};
pub use trajectory::Trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfdeError};
use crate::models::{stack_pair, DiffusionValue, HistoryView, ModelKind, ModelSpec};
use crate::segment::{euclid, Segment};

/// Picard tolerance, relative to `max(1, |x|)`.
pub const NEUTRAL_TOL: f64 = 1e-12;
pub const NEUTRAL_MAX_ITER: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt: f64,
    pub horizon: f64,
    pub r_stop: f64,
    pub seed: u64,
    pub record_stride: usize,
    /// Require `e^{r·dt} ≤ 2`.
    pub enforce_grid: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.01,
            horizon: 10.0,
            r_stop: 1e6,
            seed: 0,
            record_stride: 1,
            enforce_grid: true,
        }
    }
}

impl SolverConfig {
    /// Number of grid steps covering the horizon.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SfdeError::config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(SfdeError::config(format!("horizon must be >= 0, got {}", self.horizon)));
        }
        let n = (self.horizon / self.dt).round();
        if (n * self.dt - self.horizon).abs() > 1e-9 * self.horizon.max(1.0) {
            return Err(SfdeError::config(format!(
                "horizon {} is not a multiple of dt {}",
                self.horizon, self.dt
            )));
        }
        Ok(n as usize)
    }

    /// Check against a model and the initial norm; returns the step count.
    pub fn validate(&self, model: &ModelSpec, init_norm: f64) -> Result<usize> {
        let n = self.steps()?;
        if self.record_stride == 0 {
            return Err(SfdeError::config("record_stride must be >= 1"));
        }
        if self.enforce_grid && model.rate() * self.dt > std::f64::consts::LN_2 * (1.0 + 1e-12) {
            return Err(SfdeError::config(format!(
                "dt = {} violates e^(r dt) <= 2 for r = {}",
                self.dt,
                model.rate()
            )));
        }
        if !(self.r_stop > init_norm) {
            return Err(SfdeError::config(format!(
                "r_stop = {} must exceed the initial norm {}",
                self.r_stop, init_norm
            )));
        }
        if let Some(g) = model.galerkin() {
            if self.dt * g.max_eigenvalue() >= 2.0 {
                return Err(SfdeError::config(format!(
                    "dt = {} is unstable for the largest retained eigenvalue {}",
                    self.dt,
                    g.max_eigenvalue()
                )));
            }
        }
        Ok(n)
    }
}

/// Result of one implicit neutral step.
#[derive(Clone, Debug, PartialEq)]
pub struct NeutralStep {
    pub state: Vec<f64>,
    /// Picard updates performed.
    pub iterations: usize,
    /// Residual before each update and after the last one.
    pub residuals: Vec<f64>,
}

/// Per-path scratch for coefficient evaluation and stepping.
#[derive(Clone, Debug)]
pub struct Stepper<'m> {
    model: &'m ModelSpec,
    dt: f64,
    drift: Vec<f64>,
    sigma: DiffusionValue,
    shock: Vec<f64>,
    x_new: Vec<f64>,
    d: Vec<f64>,
    g: Vec<f64>,
    x_try: Vec<f64>,
    residuals: Option<Vec<f64>>,
}

impl<'m> Stepper<'m> {
    pub fn new(model: &'m ModelSpec, dt: f64) -> Self {
        let d = model.dim();
        Stepper {
            model,
            dt,
            drift: vec![0.0; d],
            sigma: DiffusionValue::new(model.noise_dim()),
            shock: vec![0.0; model.noise_dim()],
            x_new: vec![0.0; d],
            d: vec![0.0; d],
            g: vec![0.0; d],
            x_try: vec![0.0; d],
            residuals: None,
        }
    }

    pub fn model(&self) -> &'m ModelSpec {
        self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Evaluate drift and diffusion on `view`.
    pub fn coefficients(&mut self, view: &dyn HistoryView) -> Result<()> {
        self.model.full_drift_into(view, &mut self.drift)?;
        self.model.diffusion_into(view, &mut self.sigma)
    }

    /// Full-state drift from the last [`Stepper::coefficients`] call.
    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn sigma(&self) -> &DiffusionValue {
        &self.sigma
    }

    /// `b·dt + σ·dW` (plus `extra·dt` on the noise block) into `out`.
    fn increment(&mut self, extra: Option<&[f64]>, dw: &[f64], out: &mut [f64]) {
        let off = self.model.noise_offset();
        self.sigma.apply(dw, &mut self.shock);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.drift[i] * self.dt;
        }
        for (j, s) in self.shock.iter().enumerate() {
            out[off + j] += s;
        }
        if let Some(e) = extra {
            for (j, v) in e.iter().enumerate() {
                out[off + j] += v * self.dt;
            }
        }
    }

    /// Move `hist` one step with the last evaluated coefficients. `extra` is
    /// an additional drift on the noise block. Returns Picard updates used
    /// (0 for explicit kinds).
    pub fn advance(
        &mut self,
        hist: &mut PathHistory,
        extra: Option<&[f64]>,
        dw: &[f64],
    ) -> Result<usize> {
        let mut inc = std::mem::take(&mut self.d);
        self.increment(extra, dw, &mut inc);
        let iterations = if self.model.kind() == ModelKind::Neutral {
            self.model.neutral_into(&*hist, &mut self.g)?;
            for i in 0..inc.len() {
                inc[i] += hist.current()[i] - self.g[i];
            }
            let it = self.picard(hist, &inc);
            self.d = inc;
            it?
        } else {
            for i in 0..inc.len() {
                self.x_new[i] = hist.current()[i] + inc[i];
            }
            self.d = inc;
            0
        };
        hist.commit(self.model, &self.x_new)?;
        Ok(iterations)
    }

    /// Solve `x = D + G(history ⊕ x)` starting from the explicit guess.
    fn picard(&mut self, hist: &mut PathHistory, dvec: &[f64]) -> Result<usize> {
        let model = self.model;
        for i in 0..dvec.len() {
            self.x_new[i] = dvec[i] + self.g[i];
        }
        if let Some(r) = self.residuals.as_mut() {
            r.clear();
        }
        let mut iterations = 0;
        loop {
            self.x_try.copy_from_slice(&self.x_new);
            {
                let view = hist.tentative(model, &self.x_try);
                model.neutral_into(&view, &mut self.g)?;
            }
            let mut res2 = 0.0;
            for i in 0..dvec.len() {
                self.x_new[i] = dvec[i] + self.g[i];
                res2 += (self.x_new[i] - self.x_try[i]).powi(2);
            }
            let res = res2.sqrt();
            if let Some(r) = self.residuals.as_mut() {
                r.push(res);
            }
            if !res.is_finite() {
                return Err(SfdeError::NeutralIteration { residual: res, iterations });
            }
            if res <= NEUTRAL_TOL * euclid(&self.x_try).max(1.0) {
                self.x_new.copy_from_slice(&self.x_try);
                return Ok(iterations);
            }
            if iterations == NEUTRAL_MAX_ITER {
                return Err(SfdeError::NeutralIteration { residual: res, iterations });
            }
            iterations += 1;
        }
    }
}

/// `b(ξ)·dt + σ(ξ)·dW` for a model evaluated on the frozen segment `seg`.
/// For Hamiltonian models `seg` is the stacked pair and `dW` drives the
/// velocity block only.
pub fn em_step(model: &ModelSpec, seg: &Segment, dt: f64, dw: &[f64]) -> Result<Vec<f64>> {
    check_dw(model, dw)?;
    let view = model.view(seg)?;
    let mut st = Stepper::new(model, dt);
    st.coefficients(&view)?;
    let mut out = vec![0.0; model.dim()];
    st.increment(None, dw, &mut out);
    Ok(out)
}

/// One implicit step of a neutral model from segment `seg`.
pub fn neutral_step(model: &ModelSpec, seg: &Segment, dt: f64, dw: &[f64]) -> Result<NeutralStep> {
    if model.kind() != ModelKind::Neutral {
        return Err(SfdeError::usage("neutral_step needs a neutral model"));
    }
    check_dw(model, dw)?;
    let mut hist = PathHistory::new(model, seg, dt)?;
    let mut st = Stepper::new(model, dt);
    st.residuals = Some(Vec::new());
    st.coefficients(&hist)?;
    let iterations = st.advance(&mut hist, None, dw)?;
    Ok(NeutralStep {
        state: hist.current().to_vec(),
        iterations,
        residuals: st.residuals.take().unwrap_or_default(),
    })
}

/// Position and velocity increments of a Hamiltonian model.
pub fn hamiltonian_step(
    model: &ModelSpec,
    seg_x: &Segment,
    seg_y: &Segment,
    dt: f64,
    dw: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if model.kind() != ModelKind::Hamiltonian {
        return Err(SfdeError::usage("hamiltonian_step needs a Hamiltonian model"));
    }
    let stacked = stack_pair(seg_x, seg_y)?;
    let mut inc = em_step(model, &stacked, dt, dw)?;
    let dy = inc.split_off(model.noise_offset());
    Ok((inc, dy))
}

fn check_dw(model: &ModelSpec, dw: &[f64]) -> Result<()> {
    if dw.len() != model.noise_dim() {
        return Err(SfdeError::usage(format!(
            "noise increment has length {}, expected {}",
            dw.len(),
            model.noise_dim()
        )));
    }
    if dw.iter().any(|v| !v.is_finite()) {
        return Err(SfdeError::usage("noise increment is not finite"));
    }
    Ok(())
}

/// Simulate one path from `xi`. Explosion past `r_stop` ends the path with
/// `stopped = true`; non-finite states are errors.
pub fn simulate_path(
    model: &ModelSpec,
    xi: &Segment,
    cfg: &SolverConfig,
    noise: &mut dyn NoiseSource,
) -> Result<Trajectory> {
    let init = xi.weighted_norm(model.rate());
    let steps = cfg.validate(model, init)?;
    let mut hist = PathHistory::new(model, xi, cfg.dt)?;
    let mut st = Stepper::new(model, cfg.dt);
    let mut dw = vec![0.0; model.noise_dim()];
    let mut tr = Trajectory::new(model.dim());
    tr.push(0.0, hist.current(), hist.norm());
    for k in 1..=steps {
        st.coefficients(&hist)?;
        noise.fill(&mut dw)?;
        st.advance(&mut hist, None, &dw)?;
        let norm = hist.norm();
        if norm >= cfg.r_stop {
            tr.push(hist.time(), hist.current(), norm);
            tr.stopped = true;
            tr.stop_time = Some(hist.time());
            break;
        }
        if k % cfg.record_stride == 0 || k == steps {
            tr.push(hist.time(), hist.current(), norm);
        }
    }
    Ok(tr)
}
