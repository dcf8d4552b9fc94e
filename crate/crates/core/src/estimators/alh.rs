//! Asymptotic log-Harnack inequality
//! `P_t log f(η) ≤ log P_t f(ξ) + Φ(ξ, η) + ‖∇ log f‖_∞ Ψ_t(ξ, η)`.

use serde::{Deserialize, Serialize};

use super::calibrate::Calibration;
use super::{
    check_r0, column_moments, coupled_samples, default_grid, grid_steps, rho, single_samples,
    CheckOutcome, EstimateReport, FSpec, McConfig, TestFunction,
};
use crate::coupling::{CouplingSpec, Measure};
use crate::error::{Result, SfdeError};
use crate::rng::domain;
use crate::segment::Segment;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlhConfig {
    /// Target rate in `(0, r)`; `r/2` if absent.
    pub r0: Option<f64>,
    /// `{1, 2, 4, 8}/r₀` if absent.
    pub t_grid: Option<Vec<f64>>,
    pub f: FSpec,
    pub mc: McConfig,
}

impl AlhConfig {
    pub fn resolve(&self, rate: f64) -> (f64, Vec<f64>) {
        let r0 = self.r0.unwrap_or(rate / 2.0);
        let grid = self.t_grid.clone().unwrap_or_else(|| default_grid(r0, self.mc.dt));
        (r0, grid)
    }
}

/// `E_Q log f(Y_t)` against `log E_P f(X_t) + c ρ_Φ² + c e^{-r₀t} Lip ρ_Ψ`,
/// with `c` calibrated on the same `Q` run.
pub fn check_alh(cs: &CouplingSpec, xi: &Segment, eta: &Segment, cfg: &AlhConfig) -> Result<CheckOutcome> {
    let m = cs.model();
    if cs.measure() != Measure::Q {
        return Err(SfdeError::usage("the log-Harnack check simulates the coupling under Q"));
    }
    let (r0, grid) = cfg.resolve(m.rate());
    check_r0(m, r0)?;
    cfg.mc.check(m)?;
    let f = TestFunction::compile(&cfg.f, m)?;
    let steps = grid_steps(&grid, cfg.mc.dt)?;
    let q = coupled_samples(cs, xi, eta, &cfg.mc, &steps, domain::COUPLED, f.max_delay(), |p, row| {
        row.push(f.log_f(p.y()));
        row.push(p.entropy());
        row.push(p.z_norm());
    })?;
    let pr = single_samples(m, xi, &cfg.mc, &steps, domain::SECOND_P, f.max_delay(), |h, row| {
        row.push(f.f(h));
    })?;
    let qc = column_moments(&q);
    let pc = column_moments(&pr);
    let (rp2, rp) = rho(m, xi, eta)?;
    let n = steps.len();
    let cal = Calibration::from_means(
        rp2,
        rp,
        r0,
        &grid,
        (0..n).map(|i| qc[3 * i + 1].mean()).collect(),
        (0..n).map(|i| qc[3 * i + 2].mean()).collect(),
    );
    let lip = f.lip_log_f();
    let mut reports = Vec::with_capacity(n);
    for (i, &t) in grid.iter().enumerate() {
        let lhs = &qc[3 * i];
        let pf = &pc[i];
        let rhs = pf.mean().ln() + cal.phi() + lip * cal.psi(t);
        let se = (lhs.se().powi(2) + (pf.se() / pf.mean()).powi(2)).sqrt();
        let mut meta = cfg.mc.meta(&grid);
        meta.extra.insert("t".into(), t);
        meta.extra.insert("log_pt_f_xi".into(), pf.mean().ln());
        meta.extra.insert("phi".into(), cal.phi());
        meta.extra.insert("psi_t".into(), cal.psi(t));
        reports.push(EstimateReport::upper("pt_log_f_eta", lhs.mean(), se, rhs, meta));
    }
    let mut out = CheckOutcome::new("alh", m.name(), reports)
        .with_calibration("c", cal.c)
        .with_calibration("c_phi", cal.c_phi)
        .with_calibration("c_psi", cal.c_psi)
        .with_calibration("r0", r0)
        .with_calibration("lambda", cs.lambda())
        .with_calibration("lip_log_f", lip);
    for w in cs.warnings() {
        out = out.with_note(w.clone());
    }
    Ok(out)
}
