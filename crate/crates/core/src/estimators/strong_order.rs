//! Empirical strong order of the Euler–Maruyama scheme.

use serde::{Deserialize, Serialize};

use super::stats::{fit_line, Moments};
use super::{par_paths, CheckOutcome, EstimateReport, ReportMeta};
use crate::error::{Result, SfdeError};
use crate::models::ModelSpec;
use crate::rng::domain;
use crate::segment::{euclid, Segment};
use crate::solver::{Aggregated, GaussianNoise, NoiseSource, PathHistory, Stepper};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrongOrderConfig {
    /// Exponents `k` of the steps `2^{-k}`.
    pub dt_exponents: Vec<u32>,
    /// Reference step is the finest step divided by this power of two.
    pub ref_factor: usize,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Accepted band for the fitted order.
    pub band: (f64, f64),
}

impl Default for StrongOrderConfig {
    fn default() -> Self {
        StrongOrderConfig {
            dt_exponents: vec![4, 5, 6, 7, 8],
            ref_factor: 64,
            horizon: 1.0,
            n_paths: 400,
            seed: 1,
            band: (0.4, 0.6),
        }
    }
}

fn run(model: &ModelSpec, xi: &Segment, dt: f64, steps: usize, noise: &mut dyn NoiseSource) -> Result<Vec<f64>> {
    let mut h = PathHistory::new(model, xi, dt)?;
    let mut st = Stepper::new(model, dt);
    let mut dw = vec![0.0; model.noise_dim()];
    for _ in 0..steps {
        st.coefficients(&h)?;
        noise.fill(&mut dw)?;
        st.advance(&mut h, None, &dw)?;
    }
    Ok(h.current().to_vec())
}

/// RMS error at the horizon against a fine reference driven by the same
/// Brownian path; the order is the slope of `log RMS` against `log dt`.
pub fn check_strong_order(model: &ModelSpec, xi: &Segment, cfg: &StrongOrderConfig) -> Result<CheckOutcome> {
    if cfg.dt_exponents.len() < 2 || cfg.ref_factor < 2 || !cfg.ref_factor.is_power_of_two() {
        return Err(SfdeError::config("need two or more step sizes and a power-of-two reference factor"));
    }
    let kmax = *cfg.dt_exponents.iter().max().unwrap();
    let fine_exp = kmax + cfg.ref_factor.trailing_zeros();
    let fine_dt = 2f64.powi(-(fine_exp as i32));
    let n_fine = (cfg.horizon / fine_dt).round() as usize;
    if ((n_fine as f64) * fine_dt - cfg.horizon).abs() > 1e-12 {
        return Err(SfdeError::config("horizon must be a multiple of the coarsest step"));
    }
    let dts: Vec<f64> = cfg.dt_exponents.iter().map(|k| 2f64.powi(-(*k as i32))).collect();
    let rows = par_paths(cfg.n_paths, |i| {
        let mut noise = GaussianNoise::new(cfg.seed, domain::STRONG_ORDER, i, fine_dt);
        let reference = run(model, xi, fine_dt, n_fine, &mut noise)?;
        let mut errs = Vec::with_capacity(dts.len());
        for &k in &cfg.dt_exponents {
            let factor = 1usize << (fine_exp - k);
            let mut src = GaussianNoise::new(cfg.seed, domain::STRONG_ORDER, i, fine_dt);
            let mut agg = Aggregated::new(&mut src, factor);
            let dt = fine_dt * factor as f64;
            let x = run(model, xi, dt, n_fine / factor, &mut agg)?;
            let diff: Vec<f64> = x.iter().zip(&reference).map(|(a, b)| a - b).collect();
            errs.push(euclid(&diff).powi(2));
        }
        Ok(errs)
    })?;
    let mut rms = Vec::with_capacity(dts.len());
    for j in 0..dts.len() {
        let mm = Moments::from_slice(&rows.iter().map(|r| r[j]).collect::<Vec<_>>());
        rms.push(mm.mean().sqrt());
    }
    let lx: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = rms.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&lx, &ly)?;
    let meta = ReportMeta {
        n_paths: cfg.n_paths,
        dt: fine_dt,
        t_grid: vec![cfg.horizon],
        seed: cfg.seed,
        ..Default::default()
    };
    let mut rep = EstimateReport::within("strong_order", fit.slope, fit.slope_se, cfg.band.0, cfg.band.1, meta);
    for (k, (d, e)) in dts.iter().zip(&rms).enumerate() {
        rep = rep.with_extra(&format!("rms_dt_{}", cfg.dt_exponents[k]), *e).with_extra(&format!("dt_{}", cfg.dt_exponents[k]), *d);
    }
    Ok(CheckOutcome::new("strong_order", model.name(), vec![rep]).with_calibration("order", fit.slope))
}
