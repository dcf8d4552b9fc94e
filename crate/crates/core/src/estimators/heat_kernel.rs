//! Finite-time heat-kernel bound
//! `P_t log f(ξ) ≤ log( μ(f) / ∫ e^{-Φ(ξ,y) - ‖∇ log f‖ Ψ_t(ξ,y)} μ(dy) )`,
//! with `μ` approximated by one long path. Requires the model to be
//! declared ergodic; nothing here verifies it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::calibrate::calibrate;
use super::stats::Moments;
use super::{check_r0, column_moments, grid_steps, single_samples, CheckOutcome, EstimateReport, FSpec, McConfig, TestFunction};
use crate::coupling::{CouplingSpec, Measure};
use crate::error::{Result, SfdeError};
use crate::models::ModelKind;
use crate::rng::domain;
use crate::segment::{Segment, TailMode};
use crate::solver::{GaussianNoise, NoiseSource, PathHistory, Stepper};

pub const ERGODIC_NOTE: &str =
    "assumes an invariant measure exists (declared by the model, not verified); it is approximated by one long path";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatKernelConfig {
    pub r0: Option<f64>,
    /// `8/r₀` if absent.
    pub t: Option<f64>,
    pub f: FSpec,
    /// Constant value of the second start used to calibrate `c`; origin if absent.
    pub eta: Option<Vec<f64>>,
    /// Samples of the invariant measure.
    pub samples: usize,
    /// `20/r` if absent.
    pub burn_in: Option<f64>,
    /// `1/r` if absent.
    pub thin: Option<f64>,
    /// Total long-run time; `burn_in + samples·thin` if absent.
    pub long_run: Option<f64>,
    /// Drop `Φ` and `Ψ` (pure Jensen bound).
    pub phi_zero: bool,
    pub n_cal: usize,
    pub mc: McConfig,
}

impl Default for HeatKernelConfig {
    fn default() -> Self {
        HeatKernelConfig {
            r0: None,
            t: None,
            f: FSpec::default(),
            eta: None,
            samples: 2000,
            burn_in: None,
            thin: None,
            long_run: None,
            phi_zero: false,
            n_cal: 2000,
            mc: McConfig::default(),
        }
    }
}

/// Block-wise `sup_θ e^{rθ}|ξ(θ) - y(θ)|` over the recorded window.
fn window_distances(xi_grid: &[f64], ring: &VecDeque<Vec<f64>>, weights: &[f64], blocks: &[(usize, usize)]) -> Vec<f64> {
    let d = ring[0].len();
    let mut out = vec![0.0f64; blocks.len()];
    for (j, y) in ring.iter().rev().enumerate() {
        let x = &xi_grid[j * d..(j + 1) * d];
        for (b, &(s, l)) in blocks.iter().enumerate() {
            let mut acc = 0.0;
            for k in s..s + l {
                acc += (x[k] - y[k]).powi(2);
            }
            out[b] = out[b].max(weights[j] * acc.sqrt());
        }
    }
    out
}

pub fn check_heat_kernel(cs: &CouplingSpec, xi: &Segment, cfg: &HeatKernelConfig) -> Result<CheckOutcome> {
    let m = cs.model();
    if !m.ergodic() {
        return Err(SfdeError::config(format!(
            "model '{}' is not declared ergodic; the heat-kernel check needs an invariant measure",
            m.name()
        )));
    }
    let r = m.rate();
    let r0 = cfg.r0.unwrap_or(r / 2.0);
    check_r0(m, r0)?;
    cfg.mc.check(m)?;
    let dt = cfg.mc.dt;
    let snap = |x: f64| (x / dt).round() * dt;
    let t = snap(cfg.t.unwrap_or(8.0 / r0));
    let burn = snap(cfg.burn_in.unwrap_or(20.0 / r));
    let thin = snap(cfg.thin.unwrap_or(1.0 / r)).max(dt);
    let total = cfg.long_run.unwrap_or(burn + cfg.samples as f64 * thin);
    if burn >= total {
        return Err(SfdeError::config(format!("burn-in {burn} is not shorter than the long run {total}")));
    }
    let samples = ((total - burn) / thin + 1e-9).floor() as usize;
    if samples < 2 {
        return Err(SfdeError::config("long run yields fewer than two samples"));
    }
    let f = TestFunction::compile(&cfg.f, m)?;
    let lip = f.lip_log_f();

    // Left side.
    let steps = grid_steps(&[t], dt)?;
    let lhs_rows = single_samples(m, xi, &cfg.mc, &steps, domain::REFERENCE_P, f.max_delay(), |h, row| {
        row.push(f.log_f(h))
    })?;
    let lhs = column_moments(&lhs_rows)[0];

    // Calibration.
    let blocks: Vec<(usize, usize)> = if m.kind() == ModelKind::Hamiltonian {
        let n = m.noise_offset();
        vec![(0, n), (n, n)]
    } else {
        vec![(0, m.dim())]
    };
    let c = if cfg.phi_zero {
        0.0
    } else {
        let eta_v = cfg.eta.clone().unwrap_or_else(|| vec![0.0; m.dim()]);
        let eta = Segment::constant(&eta_v, xi.dt(), xi.steps(), TailMode::Constant)?;
        let grid: Vec<f64> = [0.125, 0.25, 0.5, 1.0].iter().map(|k| snap(k * t)).collect();
        let cal_mc = McConfig { n_paths: cfg.n_cal.max(2), ..cfg.mc };
        calibrate(&cs.clone().with_measure(Measure::Q), xi, &eta, &cal_mc, &grid, r0)?.c
    };

    // Long run.
    let window = Segment::default_window(r);
    let lags = (window / dt).ceil() as usize;
    let d = m.dim();
    let mut xi_grid = vec![0.0; (lags + 1) * d];
    for j in 0..=lags {
        xi.value_at(-(j as f64) * dt, &mut xi_grid[j * d..(j + 1) * d])?;
    }
    let weights: Vec<f64> = (0..=lags).map(|j| (-r * j as f64 * dt).exp()).collect();
    let mut h = PathHistory::with_min_delay(m, xi, dt, f.max_delay())?;
    let mut st = Stepper::new(m, dt);
    let mut noise = GaussianNoise::new(cfg.mc.seed, domain::LONG_RUN, 0, dt);
    let mut dw = vec![0.0; m.noise_dim()];
    let mut ring: VecDeque<Vec<f64>> = VecDeque::with_capacity(lags + 2);
    let burn_steps = (burn / dt).round() as usize;
    let thin_steps = (thin / dt).round() as usize;
    let total_steps = burn_steps + (samples - 1) * thin_steps;
    let decay = (-r0 * t).exp();
    let (mut ef, mut ew) = (Moments::default(), Moments::default());
    for k in 0..=total_steps {
        ring.push_back(h.current().to_vec());
        if ring.len() > lags + 1 {
            ring.pop_front();
        }
        if k >= burn_steps && (k - burn_steps) % thin_steps == 0 {
            ef.push(f.f(&h));
            let dist = window_distances(&xi_grid, &ring, &weights, &blocks);
            let rho2: f64 = dist.iter().map(|v| v * v).sum();
            let rho1: f64 = dist.iter().sum();
            ew.push((-c * rho2 - lip * c * decay * rho1).exp());
        }
        if k == total_steps {
            break;
        }
        st.coefficients(&h)?;
        noise.fill(&mut dw)?;
        st.advance(&mut h, None, &dw)?;
    }
    let rhs = ef.mean().ln() - ew.mean().ln();
    let se = (lhs.se().powi(2) + (ef.se() / ef.mean()).powi(2) + (ew.se() / ew.mean()).powi(2)).sqrt();
    let mut meta = cfg.mc.meta(&[t]);
    meta.extra.insert("t".into(), t);
    meta.extra.insert("mu_f".into(), ef.mean());
    meta.extra.insert("mu_weight".into(), ew.mean());
    meta.extra.insert("samples".into(), samples as f64);
    meta.notes.push(ERGODIC_NOTE.into());
    let rep = EstimateReport::upper("pt_log_f_xi", lhs.mean(), se, rhs, meta);
    Ok(CheckOutcome::new("heatkernel", m.name(), vec![rep])
        .with_calibration("c", c)
        .with_calibration("r0", r0)
        .with_calibration("burn_in", burn)
        .with_calibration("thin", thin)
        .with_note(ERGODIC_NOTE))
}
