//! Checks of the change of measure itself.

use super::stats::Moments;
use super::{column_moments, coupled_samples, grid_steps, CheckOutcome, EstimateReport, FSpec, McConfig, TestFunction};
use crate::coupling::{CouplingSpec, Measure};
use crate::error::Result;
use crate::rng::domain;
use crate::segment::Segment;

/// `E_P R(t) = 1` at each grid time.
pub fn check_martingale(
    cs: &CouplingSpec,
    xi: &Segment,
    eta: &Segment,
    times: &[f64],
    mc: &McConfig,
) -> Result<CheckOutcome> {
    let m = cs.model();
    mc.check(m)?;
    let p = cs.clone().with_measure(Measure::P);
    let steps = grid_steps(times, mc.dt)?;
    let rows = coupled_samples(&p, xi, eta, mc, &steps, domain::SECOND_P, 0.0, |c, row| row.push(c.log_r().exp()))?;
    let cols = column_moments(&rows);
    let reports = times
        .iter()
        .zip(&cols)
        .map(|(t, c)| EstimateReport::agree("mean_density", c.mean(), c.se(), 1.0, mc.meta(times)).with_extra("t", *t))
        .collect();
    Ok(CheckOutcome::new("martingale", m.name(), reports).with_calibration("lambda", cs.lambda()))
}

/// `E_Q g(Y_t)` (unweighted) against `E_P[R(t) g(Y_t)]` (weighted), with
/// `g` the spec's log-test-function.
pub fn check_measure_consistency(
    cs: &CouplingSpec,
    xi: &Segment,
    eta: &Segment,
    f: &FSpec,
    t: f64,
    mc: &McConfig,
) -> Result<CheckOutcome> {
    let m = cs.model();
    mc.check(m)?;
    let g = TestFunction::compile(f, m)?;
    let steps = grid_steps(&[t], mc.dt)?;
    let q = cs.clone().with_measure(Measure::Q);
    let p = cs.clone().with_measure(Measure::P);
    let qr = coupled_samples(&q, xi, eta, mc, &steps, domain::COUPLED, g.max_delay(), |c, row| {
        row.push(g.log_f(c.y()))
    })?;
    let pr = coupled_samples(&p, xi, eta, mc, &steps, domain::SECOND_P, g.max_delay(), |c, row| {
        row.push(c.log_r().exp() * g.log_f(c.y()))
    })?;
    let mq = Moments::from_slice(&qr.iter().map(|r| r[0]).collect::<Vec<_>>());
    let mp = Moments::from_slice(&pr.iter().map(|r| r[0]).collect::<Vec<_>>());
    let se = (mq.se().powi(2) + mp.se().powi(2)).sqrt();
    let rep = EstimateReport::agree("q_minus_p_weighted", mq.mean() - mp.mean(), se, 0.0, mc.meta(&[t]))
        .with_extra("q_unweighted", mq.mean())
        .with_extra("p_weighted", mp.mean());
    Ok(CheckOutcome::new("measure_consistency", m.name(), vec![rep]))
}
