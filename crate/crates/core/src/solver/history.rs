use super::super::models::{HistoryView, ModelSpec};
use crate::error::{Result, SfdeError};
use crate::segment::{decay_weights, euclid, segment_quadrature, Integrand, NormTracker, Segment};

/// Live history of one simulated path.
///
/// Only what the coefficients can reach is kept: a ring of the last
/// `⌈τ_max/dt⌉ + 1` grid values for delays, one running value per fading
/// kernel, and a [`NormTracker`] for `‖X_t‖_r`.
#[derive(Clone, Debug)]
pub struct PathHistory {
    dim: usize,
    dt: f64,
    step: usize,
    current: Vec<f64>,
    ring: Vec<f64>,
    lags: usize,
    head: usize,
    fading: Vec<f64>,
    tentative_fading: Vec<f64>,
    offsets: Vec<usize>,
    weights: Vec<(f64, f64)>,
    tracker: NormTracker,
}

impl PathHistory {
    /// Start from segment `seg` on a solver grid of step `dt`. Delay lags are
    /// read off the segment by interpolation; fading kernels are integrated
    /// on the segment's own grid.
    pub fn new(model: &ModelSpec, seg: &Segment, dt: f64) -> Result<Self> {
        Self::with_min_delay(model, seg, dt, 0.0)
    }

    /// Like [`PathHistory::new`], keeping enough lags for delays up to
    /// `delay` as well as the model's own.
    pub fn with_min_delay(model: &ModelSpec, seg: &Segment, dt: f64, delay: f64) -> Result<Self> {
        if seg.dim() != model.dim() {
            return Err(SfdeError::config(format!(
                "initial segment has dimension {}, model '{}' expects {}",
                seg.dim(),
                model.name(),
                model.dim()
            )));
        }
        let dim = seg.dim();
        let max_delay = model.max_delay().max(delay);
        let lags = if max_delay > 0.0 { (max_delay / dt - 1e-9).ceil() as usize + 1 } else { 0 };
        let mut ring = vec![0.0; lags * dim];
        for j in 1..=lags {
            seg.value_at(-(j as f64) * dt, &mut ring[(j - 1) * dim..j * dim])?;
        }
        let ks = model.kernels();
        let mut offsets = Vec::with_capacity(ks.len() + 1);
        let mut fading = vec![0.0; ks.total_dim()];
        let mut weights = Vec::with_capacity(ks.len());
        let mut off = 0;
        for k in ks.kernels() {
            offsets.push(off);
            let m = k.g.out_dim();
            segment_quadrature(seg, k.kappa, &k.g, &mut fading[off..off + m]);
            weights.push(decay_weights(k.kappa, dt));
            off += m;
        }
        offsets.push(off);
        Ok(PathHistory {
            dim,
            dt,
            step: 0,
            current: seg.current().to_vec(),
            ring,
            lags,
            head: 0,
            tentative_fading: fading.clone(),
            fading,
            offsets,
            weights,
            tracker: NormTracker::new(model.rate(), seg.weighted_norm(model.rate())),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn step_index(&self) -> usize {
        self.step
    }
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }
    pub fn current(&self) -> &[f64] {
        &self.current
    }
    pub fn tracker(&self) -> &NormTracker {
        &self.tracker
    }
    /// `‖X_t‖_r`.
    pub fn norm(&self) -> f64 {
        self.tracker.norm()
    }

    /// `X(t - j·dt)` for `0 ≤ j ≤ lags`.
    fn lag(&self, j: usize) -> &[f64] {
        if j == 0 {
            &self.current
        } else {
            let row = (self.head + j - 1) % self.lags;
            &self.ring[row * self.dim..(row + 1) * self.dim]
        }
    }

    fn interpolate(&self, tau: f64, shift: usize, first: &[f64], out: &mut [f64]) {
        let pos = tau / self.dt;
        let j = pos.floor() as usize;
        let s = pos - j as f64;
        let pick = |k: usize| -> &[f64] {
            if k < shift {
                first
            } else {
                self.lag(k - shift)
            }
        };
        let a = pick(j);
        if s <= 1e-12 {
            out.copy_from_slice(a);
        } else {
            let b = pick(j + 1);
            for i in 0..self.dim {
                out[i] = a[i] + s * (b[i] - a[i]);
            }
        }
    }

    /// View of the history as it would be after moving to `x_new`.
    pub fn tentative<'a>(&'a mut self, model: &ModelSpec, x_new: &'a [f64]) -> TentativeView<'a> {
        let mut gx = smallvec::SmallVec::<[f64; 8]>::new();
        for (i, k) in model.kernels().kernels().iter().enumerate() {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            gx.clear();
            gx.resize(hi - lo, 0.0);
            k.g.eval(x_new, &mut gx);
            let (e, w) = self.weights[i];
            for ((t, f), g) in
                self.tentative_fading[lo..hi].iter_mut().zip(&self.fading[lo..hi]).zip(&gx)
            {
                *t = e * f + w * g;
            }
        }
        TentativeView { hist: self, x_new }
    }

    /// Move to `x_new` at the next grid time. Returns the new `‖X_t‖_r`.
    pub fn commit(&mut self, model: &ModelSpec, x_new: &[f64]) -> Result<f64> {
        if let Some(i) = x_new.iter().position(|v| !v.is_finite()) {
            let _ = i;
            return Err(SfdeError::NonFinite { step: self.step + 1 });
        }
        let mut gx = smallvec::SmallVec::<[f64; 8]>::new();
        for (i, k) in model.kernels().kernels().iter().enumerate() {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            gx.clear();
            gx.resize(hi - lo, 0.0);
            k.g.eval(x_new, &mut gx);
            let (e, w) = self.weights[i];
            for (f, g) in self.fading[lo..hi].iter_mut().zip(&gx) {
                *f = e * *f + w * g;
            }
        }
        if self.lags > 0 {
            self.head = (self.head + self.lags - 1) % self.lags;
            let row = self.head;
            self.ring[row * self.dim..(row + 1) * self.dim].copy_from_slice(&self.current);
        }
        self.current.copy_from_slice(x_new);
        self.step += 1;
        self.tracker.advance_mut(self.step as f64 * self.dt, euclid(x_new))
    }
}

impl HistoryView for PathHistory {
    fn point(&self) -> &[f64] {
        &self.current
    }
    fn delayed(&self, tau: f64, out: &mut [f64]) {
        self.interpolate(tau, 0, &self.current, out)
    }
    fn fading(&self, slot: usize) -> &[f64] {
        &self.fading[self.offsets[slot]..self.offsets[slot + 1]]
    }
    fn norm(&self) -> f64 {
        self.tracker.norm()
    }
}

/// History with a candidate next value appended, used by the neutral solve.
pub struct TentativeView<'a> {
    hist: &'a PathHistory,
    x_new: &'a [f64],
}

impl HistoryView for TentativeView<'_> {
    fn point(&self) -> &[f64] {
        self.x_new
    }
    fn delayed(&self, tau: f64, out: &mut [f64]) {
        self.hist.interpolate(tau, 1, self.x_new, out)
    }
    fn fading(&self, slot: usize) -> &[f64] {
        &self.hist.tentative_fading[self.hist.offsets[slot]..self.hist.offsets[slot + 1]]
    }
    fn norm(&self) -> f64 {
        self.hist.tracker.norm().max(euclid(self.x_new))
    }
}
