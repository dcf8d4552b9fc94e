//! Coupling by change of measure.
//!
//! The pair `(X, Y)` shares one Brownian stream. Under `Q` (the default) the
//! increments drive `dW̃` and `X` is pulled toward `Y`; under `P` they drive
//! `dW` and `Y` is pulled toward `X`. Both use the same pull vector `v` with
//! `σ(X_t) h = v`:
//!
//! | kind          | `v`                                  |
//! |---------------|--------------------------------------|
//! | nondegenerate | `λ(X(0) - Y(0))`                     |
//! | neutral       | `λ(X(0) - Y(0) - (G(X_t) - G(Y_t)))` |
//! | Hamiltonian   | `λΔx(0) + 2λβΔy(0)`                  |

mod trajectory;

pub use trajectory::CoupledTrajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfdeError};
use crate::estimators::constants::{hamiltonian_constants, SearchGrid};
use crate::models::{ModelKind, ModelSpec};
use crate::segment::{NormTracker, Segment};
use crate::solver::{NoiseSource, PathHistory, SolverConfig, Stepper};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    P,
    Q,
}

#[derive(Clone, Debug)]
pub struct CouplingSpec<'m> {
    model: &'m ModelSpec,
    lambda: f64,
    beta: f64,
    measure: Measure,
    warnings: Vec<String>,
}

impl<'m> CouplingSpec<'m> {
    /// `λ = 2·max(2r, K1)` for nondegenerate models and `2·max(2r, L)` for
    /// neutral ones, with undeclared constants treated as 0. Hamiltonian
    /// models use their own position speed.
    pub fn default_lambda(model: &ModelSpec) -> f64 {
        let c = model.constants();
        match model.kind() {
            ModelKind::Hamiltonian => model.position_speed(),
            ModelKind::Neutral => 2.0 * (2.0 * model.rate()).max(c.l.unwrap_or(0.0)),
            _ => 2.0 * (2.0 * model.rate()).max(c.k1.unwrap_or(0.0)),
        }
    }

    pub fn new(model: &'m ModelSpec, lambda: Option<f64>, measure: Measure) -> Result<Self> {
        let mut warnings = Vec::new();
        let mut beta = 0.0;
        let lam = match model.kind() {
            ModelKind::Hamiltonian => {
                let lh = model.position_speed();
                if let Some(l) = lambda {
                    if l != lh {
                        return Err(SfdeError::config(format!(
                            "Hamiltonian coupling strength is the model's lambda = {lh}, got {l}"
                        )));
                    }
                }
                let c = model.constants();
                beta = c.beta.unwrap_or(0.0);
                if let (Some(l1), Some(l2)) = (c.l1, c.l2) {
                    let hc = hamiltonian_constants(l1, l2, beta, model.rate(), &SearchGrid::default())?;
                    if lh <= hc.threshold {
                        warnings.push(format!(
                            "lambda = {lh} does not exceed the threshold {:.6}",
                            hc.threshold
                        ));
                    }
                } else {
                    warnings.push("L1/L2 undeclared; lambda threshold not checked".into());
                }
                lh
            }
            _ => {
                let l = lambda.unwrap_or_else(|| Self::default_lambda(model));
                if !(l > model.rate()) || !l.is_finite() {
                    return Err(SfdeError::config(format!(
                        "coupling strength must exceed r = {}, got {l}",
                        model.rate()
                    )));
                }
                l
            }
        };
        Ok(CouplingSpec { model, lambda: lam, beta, measure, warnings })
    }

    /// `λ = 0`: no pull, `h ≡ 0`, `R ≡ 1`.
    pub fn uncoupled(model: &'m ModelSpec, measure: Measure) -> Self {
        let beta = model.constants().beta.unwrap_or(0.0);
        CouplingSpec { model, lambda: 0.0, beta, measure, warnings: Vec::new() }
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    pub fn model(&self) -> &'m ModelSpec {
        self.model
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn measure(&self) -> Measure {
        self.measure
    }
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Drifts of the pair under the spec's measure, and `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledDrift {
    pub drift_x: Vec<f64>,
    pub drift_y: Vec<f64>,
    pub h: Vec<f64>,
}

/// Evaluate the coupled drifts on frozen segments (stacked pairs for
/// Hamiltonian models).
pub fn coupled_drift(cs: &CouplingSpec, x: &Segment, y: &Segment) -> Result<CoupledDrift> {
    let m = cs.model;
    let dt = x.dt();
    let hx = PathHistory::new(m, x, dt)?;
    let hy = PathHistory::new(m, y, dt)?;
    let mut pair = Pair::new(cs, dt);
    pair.prepare(&hx, &hy)?;
    let off = m.noise_offset();
    let mut dx = pair.sx.drift().to_vec();
    let mut dy = pair.sy.drift().to_vec();
    if let Some(e) = pair.extra_x() {
        for (a, b) in dx[off..].iter_mut().zip(e) {
            *a += b;
        }
    }
    if let Some(e) = pair.extra_y() {
        for (a, b) in dy[off..].iter_mut().zip(e) {
            *a += b;
        }
    }
    Ok(CoupledDrift { drift_x: dx, drift_y: dy, h: pair.h.clone() })
}

/// Scratch for stepping one coupled pair.
#[derive(Clone, Debug)]
struct Pair<'m> {
    model: &'m ModelSpec,
    lambda: f64,
    beta: f64,
    measure: Measure,
    sx: Stepper<'m>,
    sy: Stepper<'m>,
    v: Vec<f64>,
    h: Vec<f64>,
    extra: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl<'m> Pair<'m> {
    fn new(cs: &CouplingSpec<'m>, dt: f64) -> Self {
        let m = cs.model;
        let k = m.noise_dim();
        Pair {
            model: m,
            lambda: cs.lambda,
            beta: cs.beta,
            measure: cs.measure,
            sx: Stepper::new(m, dt),
            sy: Stepper::new(m, dt),
            v: vec![0.0; k],
            h: vec![0.0; k],
            extra: vec![0.0; k],
            gx: vec![0.0; m.dim()],
            gy: vec![0.0; m.dim()],
        }
    }

    /// Coefficients of both sides, `v`, `h` and the pull drift.
    fn prepare(&mut self, hx: &PathHistory, hy: &PathHistory) -> Result<()> {
        self.sx.coefficients(hx)?;
        self.sy.coefficients(hy)?;
        if self.lambda == 0.0 {
            self.v.fill(0.0);
            self.h.fill(0.0);
            self.extra.fill(0.0);
            return Ok(());
        }
        let (x, y) = (hx.current(), hy.current());
        let lam = self.lambda;
        match self.model.kind() {
            ModelKind::Hamiltonian => {
                let n = self.model.noise_offset();
                for i in 0..n {
                    self.v[i] = lam * (x[i] - y[i]) + 2.0 * lam * self.beta * (x[n + i] - y[n + i]);
                }
            }
            ModelKind::Neutral => {
                self.model.neutral_into(hx, &mut self.gx)?;
                self.model.neutral_into(hy, &mut self.gy)?;
                for i in 0..x.len() {
                    self.v[i] = lam * (x[i] - y[i] - (self.gx[i] - self.gy[i]));
                }
            }
            _ => {
                for i in 0..x.len() {
                    self.v[i] = lam * (x[i] - y[i]);
                }
            }
        }
        self.sx.sigma().solve(&self.v, &mut self.h)?;
        match self.measure {
            Measure::Q => {
                for (e, v) in self.extra.iter_mut().zip(&self.v) {
                    *e = -v;
                }
            }
            Measure::P => self.sy.sigma().apply(&self.h, &mut self.extra),
        }
        Ok(())
    }

    fn extra_x(&self) -> Option<&[f64]> {
        match self.measure {
            Measure::Q => Some(&self.extra),
            Measure::P => None,
        }
    }

    fn extra_y(&self) -> Option<&[f64]> {
        match self.measure {
            Measure::P => Some(&self.extra),
            Measure::Q => None,
        }
    }
}

/// A coupled pair advanced step by step.
#[derive(Clone, Debug)]
pub struct CoupledPath<'m> {
    pair: Pair<'m>,
    hx: PathHistory,
    hy: PathHistory,
    z: NormTracker,
    dw: Vec<f64>,
    dt: f64,
    log_r: f64,
    entropy: f64,
    h_norm: f64,
}

impl<'m> CoupledPath<'m> {
    pub fn new(cs: &CouplingSpec<'m>, xi: &Segment, eta: &Segment, dt: f64) -> Result<Self> {
        Self::with_min_delay(cs, xi, eta, dt, 0.0)
    }

    /// Keep lags for delays up to `delay` besides the model's own.
    pub fn with_min_delay(
        cs: &CouplingSpec<'m>,
        xi: &Segment,
        eta: &Segment,
        dt: f64,
        delay: f64,
    ) -> Result<Self> {
        let m = cs.model;
        let hx = PathHistory::with_min_delay(m, xi, dt, delay)?;
        let hy = PathHistory::with_min_delay(m, eta, dt, delay)?;
        let z0 = xi.distance(eta, m.rate())?;
        Ok(CoupledPath {
            pair: Pair::new(cs, dt),
            hx,
            hy,
            z: NormTracker::new(m.rate(), z0),
            dw: vec![0.0; m.noise_dim()],
            dt,
            log_r: 0.0,
            entropy: 0.0,
            h_norm: 0.0,
        })
    }

    pub fn step(&mut self, noise: &mut dyn NoiseSource) -> Result<()> {
        self.pair.prepare(&self.hx, &self.hy)?;
        noise.fill(&mut self.dw)?;
        let p = &mut self.pair;
        let hh: f64 = p.h.iter().map(|v| v * v).sum();
        let hdw: f64 = p.h.iter().zip(&self.dw).map(|(a, b)| a * b).sum();
        self.h_norm = hh.sqrt();
        match p.measure {
            Measure::Q => self.log_r += -hdw + 0.5 * hh * self.dt,
            Measure::P => self.log_r += -hdw - 0.5 * hh * self.dt,
        }
        self.entropy += 0.5 * hh * self.dt;
        let (ex, ey) = match p.measure {
            Measure::Q => (Some(&p.extra[..]), None),
            Measure::P => (None, Some(&p.extra[..])),
        };
        p.sx.advance(&mut self.hx, ex, &self.dw)?;
        p.sy.advance(&mut self.hy, ey, &self.dw)?;
        let dz: f64 = self
            .hx
            .current()
            .iter()
            .zip(self.hy.current())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.z.advance_mut(self.hx.time(), dz.sqrt())?;
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.hx.time()
    }
    pub fn x(&self) -> &PathHistory {
        &self.hx
    }
    pub fn y(&self) -> &PathHistory {
        &self.hy
    }
    /// `‖X_t - Y_t‖_r`.
    pub fn z_norm(&self) -> f64 {
        self.z.norm()
    }
    pub fn log_r(&self) -> f64 {
        self.log_r
    }
    /// `½ Σ |h|² dt` so far.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }
    /// `|h|` at the last step.
    pub fn h_norm(&self) -> f64 {
        self.h_norm
    }
    pub fn h(&self) -> &[f64] {
        &self.pair.h
    }
    pub fn measure(&self) -> Measure {
        self.pair.measure
    }
}

/// Simulate the coupled pair from `(ξ, η)`.
pub fn simulate_coupled(
    cs: &CouplingSpec,
    xi: &Segment,
    eta: &Segment,
    cfg: &SolverConfig,
    noise: &mut dyn NoiseSource,
) -> Result<CoupledTrajectory> {
    let m = cs.model;
    let init = xi.weighted_norm(m.rate()).max(eta.weighted_norm(m.rate()));
    let steps = cfg.validate(m, init)?;
    let mut path = CoupledPath::new(cs, xi, eta, cfg.dt)?;
    let mut tr = CoupledTrajectory::new(m.dim(), m.noise_dim(), cs.measure);
    tr.record(&path);
    for k in 1..=steps {
        path.step(noise)?;
        let stop = path.x().norm() >= cfg.r_stop || path.y().norm() >= cfg.r_stop;
        if stop || k % cfg.record_stride == 0 || k == steps {
            tr.record(&path);
        }
        if stop {
            tr.stopped = true;
            tr.stop_time = Some(path.time());
            break;
        }
    }
    Ok(tr)
}

/// `½ Σ |h(t_k)|² dt` along a `Q` trajectory.
pub fn entropy_along_path(tr: &CoupledTrajectory) -> Result<f64> {
    if tr.measure != Measure::Q {
        return Err(SfdeError::usage("the entropy identity needs a trajectory simulated under Q"));
    }
    Ok(tr.entropy.last().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests;
