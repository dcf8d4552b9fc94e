//! Exponential decay of `E_Q‖X_t - Y_t‖_r^p`.

use serde::{Deserialize, Serialize};

use super::stats::{fit_line, slope_weights};
use super::{column_moments, coupled_samples, grid_steps, EstimateReport, McConfig};
use crate::coupling::{CouplingSpec, Measure};
use crate::error::{Result, SfdeError};
use crate::rng::domain;
use crate::segment::Segment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted `r̂₀` (slope of `log E‖Z_t‖^p` divided by `-p`).
    pub rate: f64,
    pub stderr: f64,
    /// `ĉ = e^{intercept} / ‖ξ - η‖_r^p`.
    pub c_hat: f64,
    pub t_grid: Vec<f64>,
    pub moments: Vec<f64>,
    pub moment_se: Vec<f64>,
    pub report: EstimateReport,
}

/// `t`-grid of `n` points spread over `(0, horizon]`.
pub fn even_grid(horizon: f64, n: usize, dt: f64) -> Vec<f64> {
    (1..=n).map(|i| ((horizon * i as f64 / n as f64) / dt).round() * dt).collect()
}

fn moments_at(
    cs: &CouplingSpec,
    xi: &Segment,
    eta: &Segment,
    p: f64,
    steps: &[usize],
    mc: &McConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = coupled_samples(cs, xi, eta, mc, steps, domain::COUPLED, 0.0, |c, row| {
        row.push(c.z_norm().powf(p));
    })?;
    let cols = column_moments(&rows);
    Ok((cols.iter().map(|m| m.mean()).collect(), cols.iter().map(|m| m.se()).collect()))
}

/// Fit the decay rate over the second half of `t_grid`; pass iff
/// `r̂₀ ≥ target - stderr`.
pub fn estimate_decay(
    cs: &CouplingSpec,
    xi: &Segment,
    eta: &Segment,
    p: f64,
    t_grid: &[f64],
    mc: &McConfig,
    target: f64,
) -> Result<DecayFit> {
    let m = cs.model();
    if cs.measure() != Measure::Q {
        return Err(SfdeError::usage("decay estimation runs under Q"));
    }
    if !(p > 0.0) {
        return Err(SfdeError::config("moment order p must be positive"));
    }
    mc.check(m)?;
    let steps = grid_steps(t_grid, mc.dt)?;
    if steps.len() < 2 {
        return Err(SfdeError::config("decay fit needs at least two grid times"));
    }
    let rho = xi.distance(eta, m.rate())?;
    if rho == 0.0 {
        return Err(SfdeError::DegenerateFit("initial segments coincide".into()));
    }
    let (mean, se) = moments_at(cs, xi, eta, p, &steps, mc)?;
    let from = (steps.len() / 2).min(steps.len() - 2);
    let ts = &t_grid[from..];
    let ms = &mean[from..];
    if ms.iter().any(|v| !(*v > 0.0)) {
        return Err(SfdeError::DegenerateFit("difference vanished on the fit window".into()));
    }
    let logs: Vec<f64> = ms.iter().map(|v| v.ln()).collect();
    let fit = fit_line(ts, &logs)?;
    let w = slope_weights(ts);
    let mc_var: f64 = w.iter().zip(ms.iter().zip(&se[from..])).map(|(w, (m, s))| (w * s / m).powi(2)).sum();
    let stderr = (fit.slope_se.powi(2) + mc_var).sqrt() / p;
    let rate = -fit.slope / p;
    let c_hat = fit.intercept.exp() / rho.powf(p);
    let report = EstimateReport::lower("decay_rate", rate, stderr, target, mc.meta(t_grid))
        .with_extra("p", p)
        .with_extra("c_hat", c_hat)
        .with_extra("lambda", cs.lambda());
    Ok(DecayFit {
        rate,
        stderr,
        c_hat,
        t_grid: t_grid.to_vec(),
        moments: mean,
        moment_se: se,
        report,
    })
}

/// Exponent `q` in `E‖Z_t‖^p ∝ s^q` when `η - ξ` is scaled by `s`; reported
/// against the band `p·(1 ± tol)`.
#[allow(clippy::too_many_arguments)]
pub fn offset_scaling(
    cs: &CouplingSpec,
    xi: &Segment,
    eta: &Segment,
    scales: &[f64],
    p: f64,
    t: f64,
    mc: &McConfig,
    tol: f64,
) -> Result<(f64, EstimateReport)> {
    mc.check(cs.model())?;
    let steps = grid_steps(&[t], mc.dt)?;
    let mut logs = Vec::with_capacity(scales.len());
    let mut var = Vec::with_capacity(scales.len());
    for &s in scales {
        let e = xi.combine(1.0 - s, eta, s)?;
        let (m, se) = moments_at(cs, xi, &e, p, &steps, mc)?;
        if !(m[0] > 0.0) {
            return Err(SfdeError::DegenerateFit("difference vanished".into()));
        }
        logs.push(m[0].ln());
        var.push((se[0] / m[0]).powi(2));
    }
    let ls: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let fit = fit_line(&ls, &logs)?;
    let w = slope_weights(&ls);
    let se = (fit.slope_se.powi(2) + w.iter().zip(&var).map(|(w, v)| w * w * v).sum::<f64>()).sqrt();
    let mut meta = mc.meta(&[t]);
    meta.extra.insert("p".into(), p);
    let rep = EstimateReport::within("offset_scaling_exponent", fit.slope, se, p * (1.0 - tol), p * (1.0 + tol), meta);
    Ok((fit.slope, rep))
}
