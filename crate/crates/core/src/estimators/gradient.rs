//! Gradient estimate
//! `|∇P_t f| ≤ √(2c)·sd(f(X_t)) + ‖∇f‖_∞·c·e^{-r₀t}` via finite differences.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::calibrate::calibrate;
use super::stats::Moments;
use super::{check_r0, grid_steps, par_paths, CheckOutcome, EstimateReport, FSpec, McConfig, TestFunction};
use crate::coupling::{CouplingSpec, Measure};
use crate::error::{Result, SfdeError};
use crate::rng::{self, domain};
use crate::segment::Segment;
use crate::solver::{GaussianNoise, NoiseSource, PathHistory, Stepper};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradientConfig {
    pub r0: Option<f64>,
    /// `8/r₀` if absent.
    pub t: Option<f64>,
    pub eps: Vec<f64>,
    pub directions: usize,
    /// Paths per direction for calibrating `c`.
    pub n_cal: usize,
    pub f: FSpec,
    pub mc: McConfig,
}

impl Default for GradientConfig {
    fn default() -> Self {
        GradientConfig {
            r0: None,
            t: None,
            eps: vec![0.1, 0.05, 0.025],
            directions: 5,
            n_cal: 2000,
            f: FSpec::default(),
            mc: McConfig::default(),
        }
    }
}

/// Random unit directions `v` with `‖v‖_r = 1` on `like`'s grid: a Gaussian
/// vector times a constant, exponential or oscillating profile.
pub fn random_directions(like: &Segment, rate: f64, count: usize, seed: u64) -> Result<Vec<Segment>> {
    (0..count)
        .map(|k| {
            let mut g = rng::stream(seed, domain::CALIBRATE, 1 << 40 | k as u64);
            let u: Vec<f64> = (0..like.dim()).map(|_| g.sample(StandardNormal)).collect();
            let kind = k % 3;
            let freq: f64 = g.random_range(0.5..4.0);
            let v = Segment::from_fn(like.dim(), like.dt(), like.steps(), like.tail_mode(), |th, out| {
                let s = match kind {
                    0 => 1.0,
                    1 => (rate * th).exp(),
                    _ => (freq * th).cos(),
                };
                for (o, x) in out.iter_mut().zip(&u) {
                    *o = s * x;
                }
            })?;
            let n = v.weighted_norm(rate);
            Ok(v.scaled(1.0 / n))
        })
        .collect()
}

pub fn check_gradient(cs: &CouplingSpec, xi: &Segment, cfg: &GradientConfig) -> Result<CheckOutcome> {
    let m = cs.model();
    let r0 = cfg.r0.unwrap_or(m.rate() / 2.0);
    check_r0(m, r0)?;
    cfg.mc.check(m)?;
    if cfg.eps.is_empty() || cfg.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(SfdeError::config("eps values must be positive"));
    }
    let t = cfg.t.unwrap_or(((8.0 / r0) / cfg.mc.dt).round() * cfg.mc.dt);
    let steps = grid_steps(&[t], cfg.mc.dt)?[0];
    let f = TestFunction::compile(&cfg.f, m)?;
    let dirs = random_directions(xi, m.rate(), cfg.directions, cfg.mc.seed)?;
    let mut starts = vec![xi.clone()];
    for v in &dirs {
        for &e in &cfg.eps {
            starts.push(xi.combine(1.0, v, e)?);
        }
    }
    let templates: Vec<PathHistory> = starts
        .iter()
        .map(|s| PathHistory::with_min_delay(m, s, cfg.mc.dt, f.max_delay()))
        .collect::<Result<_>>()?;
    // Common random numbers: every start sees the same increments.
    let rows = par_paths(cfg.mc.n_paths, |i| {
        let mut hs = templates.clone();
        let mut st = Stepper::new(m, cfg.mc.dt);
        let mut noise = GaussianNoise::new(cfg.mc.seed, domain::REFERENCE_P, i, cfg.mc.dt);
        let mut dw = vec![0.0; m.noise_dim()];
        for _ in 0..steps {
            noise.fill(&mut dw)?;
            for h in hs.iter_mut() {
                st.coefficients(h)?;
                st.advance(h, None, &dw)?;
            }
        }
        Ok(hs.iter().map(|h| f.f(h)).collect::<Vec<f64>>())
    })?;
    let base = Moments::from_slice(&rows.iter().map(|r| r[0]).collect::<Vec<_>>());
    let sd = base.sd();
    let cal_grid: Vec<f64> = [0.125, 0.25, 0.5, 1.0]
        .iter()
        .map(|k| ((k * t) / cfg.mc.dt).round() * cfg.mc.dt)
        .collect();
    let cal_mc = McConfig { n_paths: cfg.n_cal.max(2), ..cfg.mc };
    let q = cs.clone().with_measure(Measure::Q);
    let eps_min = cfg.eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut reports = Vec::new();
    let mut out_cal = Vec::new();
    for (d, v) in dirs.iter().enumerate() {
        let cal = calibrate(&q, xi, &xi.combine(1.0, v, eps_min)?, &cal_mc, &cal_grid, r0)?;
        let bound = (2.0 * cal.c).sqrt() * sd + f.lip_f() * cal.c * (-r0 * t).exp();
        out_cal.push(cal.c);
        for (j, &e) in cfg.eps.iter().enumerate() {
            let col = 1 + d * cfg.eps.len() + j;
            let diff = Moments::from_slice(&rows.iter().map(|r| r[col] - r[0]).collect::<Vec<_>>());
            let quotient = diff.mean().abs() / e;
            let se = diff.se() / e;
            let mut meta = cfg.mc.meta(&[t]);
            meta.extra.insert("direction".into(), d as f64);
            meta.extra.insert("eps".into(), e);
            meta.extra.insert("c".into(), cal.c);
            meta.extra.insert("sd_f".into(), sd);
            let mut rep = EstimateReport::upper("fd_gradient", quotient, se, bound, meta);
            if se > quotient {
                rep = rep.mark_inconclusive("finite-difference quotient below its standard error");
            }
            reports.push(rep);
        }
    }
    let mut outc = CheckOutcome::new("gradient", m.name(), reports)
        .with_calibration("r0", r0)
        .with_calibration("t", t)
        .with_calibration("lip_f", f.lip_f())
        .with_calibration("lambda", cs.lambda());
    for (d, c) in out_cal.iter().enumerate() {
        outc = outc.with_calibration(&format!("c_direction_{d}"), *c);
    }
    Ok(outc)
}
