//! Randomized falsification of declared assumption constants.
//!
//! Each condition is a ratio of the form "left side / ‖ξ - η‖_r^k" that must
//! stay below a declared constant. The validator reports the largest ratio
//! seen and the trial that produced it. A pass means no counterexample was
//! found, nothing more.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{HistoryView, ModelKind, ModelSpec, SegmentView};
use crate::error::{Result, SfdeError};
use crate::rng;
use crate::segment::{Segment, TailMode};

/// Source of segment pairs for the validator.
pub trait PairSampler {
    fn sample(&mut self, trial: usize) -> Result<(Segment, Segment)>;
}

/// Random pairs with `‖ξ‖_r, ‖η‖_r ≤ bound` on a fixed grid.
///
/// Profiles mix constants, histories growing into the past at rates up to
/// `r` (the worst case for delays and kernels) and oscillations. Half the
/// pairs are independent draws, half are small perturbations.
#[derive(Clone, Debug)]
pub struct RandomPairs {
    pub dim: usize,
    pub rate: f64,
    pub dt: f64,
    pub steps: usize,
    pub bound: f64,
    pub seed: u64,
}

impl RandomPairs {
    pub fn for_model(model: &ModelSpec, seed: u64) -> Self {
        let dt = 0.05 / model.rate().max(1.0);
        let window = Segment::default_window(model.rate()).max(model.max_delay() + dt);
        RandomPairs {
            dim: model.dim(),
            rate: model.rate(),
            dt,
            steps: crate::segment::steps_for_window(window, dt),
            bound: 10.0,
            seed,
        }
    }

    fn profile<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim;
        let kind = rng.random_range(0..3);
        let amp: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let growth = rng.random_range(0.0..=self.rate);
        let omega = rng.random_range(0.1..4.0);
        let phase: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let mut values = vec![0.0; d * (self.steps + 1)];
        for k in 0..=self.steps {
            let theta = -(k as f64) * self.dt;
            for i in 0..d {
                values[k * d + i] = match kind {
                    0 => amp[i],
                    1 => amp[i] * (-growth * theta).exp(),
                    _ => amp[i] * (-growth * theta).exp() * (omega * theta + phase[i]).sin(),
                };
            }
        }
        values
    }

    fn finish(&self, mut values: Vec<f64>, scale: f64) -> Result<Segment> {
        for v in values.iter_mut() {
            *v *= scale;
        }
        let seg = Segment::new(self.dim, self.dt, values, TailMode::Constant)?;
        let n = seg.weighted_norm(self.rate);
        Ok(if n > self.bound { seg.scaled(self.bound / n) } else { seg })
    }
}

impl PairSampler for RandomPairs {
    fn sample(&mut self, trial: usize) -> Result<(Segment, Segment)> {
        let mut rng = rng::stream(self.seed, rng::domain::VALIDATE, trial as u64);
        let size = self.bound * rng.random_range(0.0f64..1.0).powi(2);
        let xi_vals = self.profile(&mut rng);
        let xi = self.finish(xi_vals.clone(), size)?;
        let eta = if rng.random_bool(0.5) {
            let size2 = self.bound * rng.random_range(0.0f64..1.0).powi(2);
            let v = self.profile(&mut rng);
            self.finish(v, size2)?
        } else {
            let eps = 10f64.powf(rng.random_range(-3.0..0.0));
            let pert = self.profile(&mut rng);
            let mixed = xi.values().iter().zip(&pert).map(|(a, b)| a + eps * b).collect();
            self.finish(mixed, 1.0)?
        };
        Ok((xi, eta))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub xi_norm: f64,
    pub eta_norm: f64,
    pub distance: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    pub declared: Option<f64>,
    pub max_ratio: f64,
    pub evaluated: usize,
    pub pass: bool,
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model: String,
    pub trials: usize,
    pub skipped_pairs: usize,
    pub conditions: Vec<ConditionResult>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    declared: Option<f64>,
    max: f64,
    evaluated: usize,
    witness: Option<Witness>,
    note: Option<String>,
}

impl Tally {
    fn new(name: &'static str, declared: Option<f64>) -> Self {
        Tally { name, declared, max: f64::NEG_INFINITY, evaluated: 0, witness: None, note: None }
    }

    fn push(&mut self, ratio: f64, w: impl FnOnce(f64) -> Witness) {
        self.evaluated += 1;
        if ratio > self.max || ratio.is_nan() {
            self.max = if ratio.is_nan() { f64::INFINITY } else { ratio };
            self.witness = Some(w(self.max));
        }
    }

    fn finish(self) -> ConditionResult {
        let max_ratio = if self.evaluated == 0 { 0.0 } else { self.max };
        let (pass, note) = match self.declared {
            Some(c) => (max_ratio <= c * (1.0 + 1e-9) + 1e-12, self.note),
            None => (
                true,
                self.note.or_else(|| Some("no declared constant; reported only".into())),
            ),
        };
        ConditionResult {
            name: self.name.to_string(),
            declared: self.declared,
            max_ratio,
            evaluated: self.evaluated,
            pass,
            witness: self.witness,
            note,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn block_distance(x: &Segment, y: &Segment, start: usize, len: usize, rate: f64) -> Result<f64> {
    let pick = |s: &Segment| -> Result<Segment> {
        let v = (0..=s.steps()).flat_map(|k| s.row(k)[start..start + len].to_vec()).collect();
        Segment::new(len, s.dt(), v, s.tail_mode())
    };
    Ok(pick(x)?.sub(&pick(y)?)?.weighted_norm(rate))
}

/// Check every assumption that applies to the model's kind on `trials` pairs.
pub fn validate_assumptions(
    model: &ModelSpec,
    sampler: &mut dyn PairSampler,
    trials: usize,
) -> Result<ValidationReport> {
    if trials == 0 {
        return Err(SfdeError::usage("at least one trial is needed"));
    }
    let c = model.constants();
    let kind = model.kind();
    let r = model.rate();
    let galerkin = model.galerkin();
    let mut bounded = Tally::new("bounded_drift", None);
    bounded.note = Some("largest |b(ξ)| seen".into());
    let mut sig = Tally::new("sigma_bound", c.sigma_max);
    let mut sig_inv = Tally::new("sigma_inverse_bound", c.sigma_inv_max);
    let mut h1 = Tally::new("H1", c.k1);
    let mut h2 = Tally::new("H2", c.k2);
    let mut a1 = Tally::new("A1", c.delta);
    let mut a2 = Tally::new("A2", c.l);
    let mut b2 = Tally::new("B2", c.l0);
    let mut c1 = Tally::new("C1", c.l1);
    let mut c2 = Tally::new("C2", c.l2);
    let mut skipped = 0;
    let n = model.noise_dim();
    let off = model.noise_offset();

    for trial in 0..trials {
        let (xi, eta) = sampler.sample(trial)?;
        let vx = SegmentView::new(model, &xi)?;
        let vy = SegmentView::new(model, &eta)?;
        let (nx, ny) = (vx.norm(), vy.norm());
        let bx = model.eval_drift(&vx)?;
        let by = model.eval_drift(&vy)?;
        let sx = model.eval_diffusion(&vx)?;
        let sy = model.eval_diffusion(&vy)?;
        let bnorm = bx.iter().map(|v| v * v).sum::<f64>().sqrt();
        let w = |dist: f64| move |ratio: f64| Witness { trial, xi_norm: nx, eta_norm: ny, distance: dist, ratio };
        bounded.push(bnorm, w(0.0));
        let (hi, lo) = sx.singular_range();
        sig.push(hi, w(0.0));
        sig_inv.push(if lo > 0.0 { 1.0 / lo } else { f64::INFINITY }, w(0.0));

        let dist = xi.sub(&eta)?.weighted_norm(r);
        if dist == 0.0 {
            skipped += 1;
            continue;
        }
        let d0 = diff(xi.current(), eta.current());
        let db = diff(&bx, &by);
        let ds_hs = sx.hs_distance(&sy);
        match kind {
            ModelKind::Nondegenerate | ModelKind::GalerkinSpde => {
                h1.push(2.0 * dot(&d0, &db) / (dist * dist), w(dist));
                h2.push(ds_hs * ds_hs / (dist * dist), w(dist));
                if let Some(g) = galerkin {
                    let gx = g.nonlinear.eval(&vx);
                    let gy = g.nonlinear.eval(&vy);
                    let dg = diff(&gx, &gy).iter().map(|v| v * v).sum::<f64>().sqrt();
                    b2.push((dg + ds_hs) / dist, w(dist));
                }
            }
            ModelKind::Neutral => {
                let gx = model.eval_neutral(&vx)?;
                let gy = model.eval_neutral(&vy)?;
                let dg = diff(&gx, &gy);
                let dgn = dg.iter().map(|v| v * v).sum::<f64>().sqrt();
                a1.push(dgn / dist, w(dist));
                let lhs = 2.0 * dot(&diff(&d0, &dg), &db);
                a2.push(lhs / (dist * dist), w(dist));
                h2.push(ds_hs * ds_hs / (dist * dist), w(dist));
            }
            ModelKind::Hamiltonian => {
                let beta = c.beta.unwrap_or(0.0);
                let dx = block_distance(&xi, &eta, 0, off, r)?;
                let dy = block_distance(&xi, &eta, off, n, r)?;
                let denom = dx * dx + dy * dy;
                if denom == 0.0 {
                    skipped += 1;
                    continue;
                }
                let pairing: Vec<f64> = (0..n).map(|i| beta * d0[i] + d0[off + i]).collect();
                c1.push(dot(&pairing, &db) / denom, w(dist));
                c2.push(ds_hs * ds_hs / denom, w(dist));
            }
        }
    }

    let mut conditions = vec![bounded.finish()];
    let elliptic = sig.finish();
    let elliptic_inv = sig_inv.finish();
    match kind {
        ModelKind::Nondegenerate | ModelKind::GalerkinSpde => {
            conditions.push(h1.finish());
            conditions.push(h2.finish());
            if let Some(g) = galerkin {
                conditions.push(b2.finish());
                conditions.push(ConditionResult {
                    name: "B1".into(),
                    declared: None,
                    max_ratio: g.partial_sum,
                    evaluated: g.eigenvalues.len(),
                    pass: g.eigenvalues.first().is_some_and(|l| *l > 0.0)
                        && g.eigenvalues.windows(2).all(|w| w[0] <= w[1]),
                    witness: None,
                    note: Some(format!(
                        "partial sum of λ_i^(-{}) over {} modes",
                        g.alpha,
                        g.eigenvalues.len()
                    )),
                });
            }
        }
        ModelKind::Neutral => {
            conditions.push(a1.finish());
            conditions.push(a2.finish());
            conditions.push(h2.finish());
        }
        ModelKind::Hamiltonian => {
            conditions.push(c1.finish());
            conditions.push(c2.finish());
        }
    }
    conditions.push(elliptic);
    conditions.push(elliptic_inv);
    let pass = conditions.iter().all(|c| c.pass);
    Ok(ValidationReport {
        model: model.name().to_string(),
        trials,
        skipped_pairs: skipped,
        conditions,
        pass,
    })
}
