//! Exponential envelope `E‖X_t‖_r² ≤ C e^{Ct}(1 + ‖ξ‖_r²)`.

use serde::{Deserialize, Serialize};

use super::decay::even_grid;
use super::{column_moments, grid_steps, single_samples, CheckOutcome, EstimateReport, McConfig, SLACK_SE};
use crate::error::{Result, SfdeError};
use crate::models::ModelSpec;
use crate::rng::domain;
use crate::segment::Segment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentConfig {
    pub horizon: f64,
    pub points: usize,
    /// Largest acceptable envelope constant.
    pub c_max: f64,
    pub mc: McConfig,
}

impl Default for MomentConfig {
    fn default() -> Self {
        MomentConfig { horizon: 10.0, points: 20, c_max: 10.0, mc: McConfig { n_paths: 1000, ..Default::default() } }
    }
}

/// Smallest `C` with `C e^{C t_i} a ≥ y_i` for all `i` (bisection; the left
/// side increases in `C`).
pub fn envelope_constant(ts: &[f64], ys: &[f64], a: f64) -> f64 {
    let ok = |c: f64| ts.iter().zip(ys).all(|(t, y)| c * (c * t).exp() * a >= *y);
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    hi
}

pub fn check_moments(model: &ModelSpec, xi: &Segment, cfg: &MomentConfig) -> Result<CheckOutcome> {
    cfg.mc.check(model)?;
    if cfg.points < 1 || !(cfg.horizon > 0.0) {
        return Err(SfdeError::config("moment grid needs a positive horizon and at least one point"));
    }
    let mut grid = vec![0.0];
    grid.extend(even_grid(cfg.horizon, cfg.points, cfg.mc.dt));
    let steps = grid_steps(&grid, cfg.mc.dt)?;
    let rows = single_samples(model, xi, &cfg.mc, &steps, domain::SIMULATE, 0.0, |h, row| {
        row.push(h.norm().powi(2))
    })?;
    let cols = column_moments(&rows);
    let upper: Vec<f64> = cols.iter().map(|m| m.mean() + SLACK_SE * m.se()).collect();
    let n2 = xi.weighted_norm(model.rate()).powi(2);
    let c = envelope_constant(&grid, &upper, 1.0 + n2);
    let mut meta = cfg.mc.meta(&grid);
    meta.extra.insert("init_norm_sq".into(), n2);
    meta.extra.insert("max_second_moment".into(), cols.iter().map(|m| m.mean()).fold(0.0, f64::max));
    let rep = EstimateReport::upper("moment_envelope_c", c, 0.0, cfg.c_max, meta)
        .with_note("C is the least constant whose envelope covers mean + 3 stderr at every grid time");
    Ok(CheckOutcome::new("moments", model.name(), vec![rep]).with_calibration("c", c))
}
