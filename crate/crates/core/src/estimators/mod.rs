//! Monte Carlo and analytic checks of the coupling inequalities.
//!
//! Every estimator is a deterministic function of its inputs and seed: path
//! `i` draws from stream `(seed, domain, i)`, paths run in parallel and are
//! reduced in index order.

pub mod alh;
pub mod calibrate;
pub mod constants;
pub mod decay;
pub mod girsanov;
pub mod gradient;
pub mod heat_kernel;
pub mod irreducibility;
pub mod moments;
mod report;
pub mod stats;
pub mod strong_order;
mod testfn;

pub use calibrate::{calibrate, Calibration};
pub use report::{CheckOutcome, EstimateReport, ReportMeta, LOWER, SLACK_SE, UPPER};
pub use testfn::{FSpec, TestFunction};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingSpec, CoupledPath};
use crate::error::{Result, SfdeError};
use crate::models::{ModelKind, ModelSpec};
use crate::segment::Segment;
use crate::solver::{GaussianNoise, PathHistory, Stepper};
use stats::Moments;

/// Path count, step and seed shared by the Monte Carlo estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_paths: 10_000, dt: 0.02, seed: 1 }
    }
}

impl McConfig {
    pub(crate) fn check(&self, model: &ModelSpec) -> Result<()> {
        if self.n_paths < 2 {
            return Err(SfdeError::config("need at least two paths"));
        }
        if !(self.dt > 0.0) || model.rate() * self.dt > std::f64::consts::LN_2 * (1.0 + 1e-12) {
            return Err(SfdeError::config(format!(
                "dt = {} violates e^(r dt) <= 2 for r = {}",
                self.dt,
                model.rate()
            )));
        }
        if let Some(g) = model.galerkin() {
            if self.dt * g.max_eigenvalue() >= 2.0 {
                return Err(SfdeError::config("dt too large for the retained Galerkin modes"));
            }
        }
        Ok(())
    }

    pub(crate) fn meta(&self, t_grid: &[f64]) -> ReportMeta {
        ReportMeta {
            n_paths: self.n_paths,
            dt: self.dt,
            t_grid: t_grid.to_vec(),
            seed: self.seed,
            ..Default::default()
        }
    }
}

/// Step indices of an increasing time grid.
pub fn grid_steps(t_grid: &[f64], dt: f64) -> Result<Vec<usize>> {
    if t_grid.is_empty() {
        return Err(SfdeError::config("empty time grid"));
    }
    let mut out = Vec::with_capacity(t_grid.len());
    let mut prev = 0.0;
    for (i, &t) in t_grid.iter().enumerate() {
        if !(t > prev || (i == 0 && t >= 0.0)) || !t.is_finite() {
            return Err(SfdeError::config("time grid must be strictly increasing and nonnegative"));
        }
        let k = (t / dt).round();
        if (k * dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(SfdeError::config(format!("grid time {t} is not a multiple of dt = {dt}")));
        }
        out.push(k as usize);
        prev = t;
    }
    Ok(out)
}

/// `t`-grid `{1, 2, 4, 8}/r₀` rounded to multiples of `dt`.
pub fn default_grid(r0: f64, dt: f64) -> Vec<f64> {
    [1.0, 2.0, 4.0, 8.0].iter().map(|k| ((k / r0) / dt).round() * dt).collect()
}

/// Run `f(i)` for `i in 0..n` in parallel, results in index order.
pub fn par_paths<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Column moments of per-path sample rows, reduced in path order.
pub(crate) fn column_moments(rows: &[Vec<f64>]) -> Vec<Moments> {
    let w = rows.first().map_or(0, |r| r.len());
    let mut m = vec![Moments::default(); w];
    for r in rows {
        for (a, &v) in m.iter_mut().zip(r) {
            a.push(v);
        }
    }
    m
}

/// Simulate one path per index and call `observe` at each grid step,
/// which appends its samples to the row.
pub(crate) fn single_samples<F>(
    model: &ModelSpec,
    xi: &Segment,
    mc: &McConfig,
    steps: &[usize],
    domain: u64,
    min_delay: f64,
    observe: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&PathHistory, &mut Vec<f64>) + Sync + Send,
{
    let template = PathHistory::with_min_delay(model, xi, mc.dt, min_delay)?;
    let last = *steps.last().unwrap_or(&0);
    par_paths(mc.n_paths, |i| {
        let mut h = template.clone();
        let mut st = Stepper::new(model, mc.dt);
        let mut noise = GaussianNoise::new(mc.seed, domain, i, mc.dt);
        let mut dw = vec![0.0; model.noise_dim()];
        let mut row = Vec::new();
        let mut next = 0;
        for k in 0..=last {
            while next < steps.len() && steps[next] == k {
                observe(&h, &mut row);
                next += 1;
            }
            if k == last {
                break;
            }
            st.coefficients(&h)?;
            use crate::solver::NoiseSource;
            noise.fill(&mut dw)?;
            st.advance(&mut h, None, &dw)?;
        }
        Ok(row)
    })
}

/// Coupled counterpart of [`single_samples`].
pub(crate) fn coupled_samples<F>(
    cs: &CouplingSpec,
    xi: &Segment,
    eta: &Segment,
    mc: &McConfig,
    steps: &[usize],
    domain: u64,
    min_delay: f64,
    observe: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&CoupledPath, &mut Vec<f64>) + Sync + Send,
{
    let template = CoupledPath::with_min_delay(cs, xi, eta, mc.dt, min_delay)?;
    let last = *steps.last().unwrap_or(&0);
    par_paths(mc.n_paths, |i| {
        let mut p = template.clone();
        let mut noise = GaussianNoise::new(mc.seed, domain, i, mc.dt);
        let mut row = Vec::new();
        let mut next = 0;
        for k in 0..=last {
            while next < steps.len() && steps[next] == k {
                observe(&p, &mut row);
                next += 1;
            }
            if k == last {
                break;
            }
            p.step(&mut noise)?;
        }
        Ok(row)
    })
}

/// Columns `[start, start + len)` of a segment.
pub fn project(seg: &Segment, start: usize, len: usize) -> Result<Segment> {
    let d = seg.dim();
    let vals: Vec<f64> = seg.values().chunks(d).flat_map(|r| r[start..start + len].to_vec()).collect();
    Segment::new(len, seg.dt(), vals, seg.tail_mode())
}

/// `‖ξ - η‖_r` per block: one block, or position and velocity blocks for
/// Hamiltonian models.
pub fn block_distances(model: &ModelSpec, xi: &Segment, eta: &Segment) -> Result<Vec<f64>> {
    let r = model.rate();
    if model.kind() == ModelKind::Hamiltonian {
        let n = model.noise_offset();
        Ok(vec![
            project(xi, 0, n)?.distance(&project(eta, 0, n)?, r)?,
            project(xi, n, n)?.distance(&project(eta, n, n)?, r)?,
        ])
    } else {
        Ok(vec![xi.distance(eta, r)?])
    }
}

/// `(ρ_Φ², ρ_Ψ)`: sum of squared block distances and sum of block distances.
pub fn rho(model: &ModelSpec, xi: &Segment, eta: &Segment) -> Result<(f64, f64)> {
    let b = block_distances(model, xi, eta)?;
    Ok((b.iter().map(|v| v * v).sum(), b.iter().sum()))
}

pub(crate) fn check_r0(model: &ModelSpec, r0: f64) -> Result<()> {
    if !(r0 > 0.0 && r0 < model.rate()) {
        return Err(SfdeError::config(format!("r0 must lie in (0, r = {}), got {r0}", model.rate())));
    }
    Ok(())
}
