//! Asymptotic irreducibility
//! `P_t(ξ, A) ≤ (1/n) log(1 + eⁿ P_t(η, A_ε)) + Φ(ξ, η)/n + Ψ_t(ξ, η)/ε`
//! for balls `A = {ζ : ‖ζ - c‖_r ≤ R}` around constant segments.

use serde::{Deserialize, Serialize};

use super::calibrate::calibrate;
use super::{check_r0, default_grid, grid_steps, par_paths, CheckOutcome, EstimateReport, McConfig};
use crate::coupling::{CouplingSpec, Measure};
use crate::error::{Result, SfdeError};
use crate::models::ModelSpec;
use crate::rng::domain;
use crate::segment::{euclid, NormTracker, Segment};
use crate::solver::{GaussianNoise, NoiseSource, PathHistory, Stepper};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrreducibilityConfig {
    /// Ball center (constant segment); origin if absent.
    pub center: Option<Vec<f64>>,
    pub radius: f64,
    pub eps: f64,
    pub n: f64,
    pub r0: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub n_cal: usize,
    pub mc: McConfig,
}

impl Default for IrreducibilityConfig {
    fn default() -> Self {
        IrreducibilityConfig {
            center: None,
            radius: 1.5,
            eps: 0.5,
            n: 2.0,
            r0: None,
            t_grid: None,
            n_cal: 2000,
            mc: McConfig::default(),
        }
    }
}

/// Distances `‖X_t - c‖_r` at each grid step, one row per path.
fn ball_distances(
    model: &ModelSpec,
    start: &Segment,
    center: &[f64],
    mc: &McConfig,
    steps: &[usize],
    dom: u64,
) -> Result<Vec<Vec<f64>>> {
    let r = model.rate();
    let d0 = start.offset(&center.iter().map(|v| -v).collect::<Vec<_>>()).weighted_norm(r);
    let template = PathHistory::new(model, start, mc.dt)?;
    let last = *steps.last().unwrap_or(&0);
    par_paths(mc.n_paths, |i| {
        let mut h = template.clone();
        let mut tr = NormTracker::new(r, d0);
        let mut st = Stepper::new(model, mc.dt);
        let mut noise = GaussianNoise::new(mc.seed, dom, i, mc.dt);
        let mut dw = vec![0.0; model.noise_dim()];
        let mut diff = vec![0.0; model.dim()];
        let mut row = Vec::with_capacity(steps.len());
        let mut next = 0;
        for k in 0..=last {
            while next < steps.len() && steps[next] == k {
                row.push(tr.norm());
                next += 1;
            }
            if k == last {
                break;
            }
            st.coefficients(&h)?;
            noise.fill(&mut dw)?;
            st.advance(&mut h, None, &dw)?;
            for ((o, x), c) in diff.iter_mut().zip(h.current()).zip(center) {
                *o = x - c;
            }
            tr.advance_mut(h.time(), euclid(&diff))?;
        }
        Ok(row)
    })
}

pub fn check_irreducibility(
    cs: &CouplingSpec,
    xi: &Segment,
    eta: &Segment,
    cfg: &IrreducibilityConfig,
) -> Result<CheckOutcome> {
    let m = cs.model();
    let r0 = cfg.r0.unwrap_or(m.rate() / 2.0);
    check_r0(m, r0)?;
    cfg.mc.check(m)?;
    if !(cfg.radius >= 0.0 && cfg.eps > 0.0 && cfg.n > 0.0) {
        return Err(SfdeError::config("need radius >= 0, eps > 0 and n > 0"));
    }
    let center = cfg.center.clone().unwrap_or_else(|| vec![0.0; m.dim()]);
    if center.len() != m.dim() {
        return Err(SfdeError::config("ball center has the wrong dimension"));
    }
    let grid = cfg.t_grid.clone().unwrap_or_else(|| default_grid(r0, cfg.mc.dt));
    let steps = grid_steps(&grid, cfg.mc.dt)?;
    let dx = ball_distances(m, xi, &center, &cfg.mc, &steps, domain::REFERENCE_P)?;
    let dy = ball_distances(m, eta, &center, &cfg.mc, &steps, domain::SECOND_P)?;
    let cal_mc = McConfig { n_paths: cfg.n_cal.max(2), ..cfg.mc };
    let cal = calibrate(&cs.clone().with_measure(Measure::Q), xi, eta, &cal_mc, &grid, r0)?;
    let nn = cfg.n_paths_f();
    let en = cfg.n.exp();
    let mut reports = Vec::with_capacity(steps.len());
    for (i, &t) in grid.iter().enumerate() {
        let hx = dx.iter().filter(|r| r[i] <= cfg.radius).count();
        let hy = dy.iter().filter(|r| r[i] <= cfg.radius + cfg.eps).count();
        let (px, py) = (hx as f64 / nn, hy as f64 / nn);
        let bound = (1.0 + en * py).ln() / cfg.n + cal.phi() / cfg.n + cal.psi(t) / cfg.eps;
        let se_x = (px * (1.0 - px) / nn).sqrt();
        let se_y = (py * (1.0 - py) / nn).sqrt() * en / (cfg.n * (1.0 + en * py));
        let mut meta = cfg.mc.meta(&grid);
        meta.extra.insert("t".into(), t);
        meta.extra.insert("p_eta_eps".into(), py);
        meta.extra.insert("phi".into(), cal.phi());
        meta.extra.insert("psi_t".into(), cal.psi(t));
        let mut rep = EstimateReport::upper("pt_xi_ball", px, (se_x * se_x + se_y * se_y).sqrt(), bound, meta);
        if hx == 0 && hy == 0 {
            rep = rep.mark_inconclusive("no hits from either start");
        }
        reports.push(rep);
    }
    Ok(CheckOutcome::new("irreducibility", m.name(), reports)
        .with_calibration("c", cal.c)
        .with_calibration("r0", r0)
        .with_calibration("radius", cfg.radius)
        .with_calibration("eps", cfg.eps)
        .with_calibration("n", cfg.n))
}

impl IrreducibilityConfig {
    fn n_paths_f(&self) -> f64 {
        self.mc.n_paths as f64
    }
}
