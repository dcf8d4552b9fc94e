//! Segment states, the weighted sup-norm and fading-memory integrals.
//!
//! A [`Segment`] keeps the last `T_hist` units of history on a uniform grid
//! (row `k` is the value at `θ = -k·dt`) and describes everything older by a
//! [`TailMode`]. With the default window `e^{-r·T_hist} ≤ 1e-8`, so the tail
//! barely touches the norm.

mod fading;
mod io;
mod norm;

pub use fading::{
    decay_weights, init_fading_from_segment, segment_quadrature, FadingIntegralState, FnIntegrand,
    Identity, Integrand,
};
pub use io::{read_segment_csv, sidecar_path, write_segment_csv, write_segment_csv_to, SegmentMeta};
pub use norm::NormTracker;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfdeError};

/// Relative size of the neglected tail for [`Segment::default_window`].
pub const TAIL_WEIGHT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMode {
    /// `ξ(θ) = ξ(-T_hist)` for `θ < -T_hist`.
    #[serde(rename = "constant-extension", alias = "constant")]
    Constant,
    /// `ξ(θ) = 0` for `θ < -T_hist`.
    #[serde(rename = "zero-extension", alias = "zero")]
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    dim: usize,
    dt: f64,
    steps: usize,
    values: Vec<f64>,
    tail: TailMode,
}

pub(crate) fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Number of grid steps covering `window`, rounding up.
pub fn steps_for_window(window: f64, dt: f64) -> usize {
    (window / dt - 1e-9).ceil().max(1.0) as usize
}

impl Segment {
    /// Build from row-major samples; row `k` is `ξ(-k·dt)`.
    pub fn new(dim: usize, dt: f64, values: Vec<f64>, tail: TailMode) -> Result<Self> {
        if dim == 0 {
            return Err(SfdeError::config("segment dimension must be positive"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SfdeError::config(format!("segment step must be positive, got {dt}")));
        }
        if values.len() < 2 * dim || values.len() % dim != 0 {
            return Err(SfdeError::config(format!(
                "segment needs at least two rows of {dim} values, got {} values",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SfdeError::NonFiniteSample { index: i / dim });
        }
        let steps = values.len() / dim - 1;
        Ok(Segment { dim, dt, steps, values, tail })
    }

    pub fn constant(value: &[f64], dt: f64, steps: usize, tail: TailMode) -> Result<Self> {
        let mut values = Vec::with_capacity(value.len() * (steps + 1));
        for _ in 0..=steps {
            values.extend_from_slice(value);
        }
        Segment::new(value.len(), dt, values, tail)
    }

    /// Sample `f(θ, out)` at `θ = 0, -dt, …, -steps·dt`.
    pub fn from_fn(
        dim: usize,
        dt: f64,
        steps: usize,
        tail: TailMode,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        let mut values = vec![0.0; dim * (steps + 1)];
        for (k, row) in values.chunks_mut(dim).enumerate() {
            f(-(k as f64) * dt, row);
        }
        Segment::new(dim, dt, values, tail)
    }

    /// Window length with `e^{-r·T} ≤ 1e-8`.
    pub fn default_window(rate: f64) -> f64 {
        -TAIL_WEIGHT.ln() / rate
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn window(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn tail_mode(&self) -> TailMode {
        self.tail
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// `ξ(0)`.
    pub fn current(&self) -> &[f64] {
        self.row(0)
    }

    /// Value at `θ ≤ 0`: linear interpolation on the grid, tail rule beyond it.
    pub fn value_at(&self, theta: f64, out: &mut [f64]) -> Result<()> {
        if theta > 1e-12 * self.dt || theta.is_nan() {
            return Err(SfdeError::Domain(format!("segment evaluated at θ = {theta} > 0")));
        }
        let pos = -theta / self.dt;
        if pos >= self.steps as f64 {
            match self.tail {
                TailMode::Constant => out.copy_from_slice(self.row(self.steps)),
                TailMode::Zero if pos - self.steps as f64 <= 1e-9 => {
                    out.copy_from_slice(self.row(self.steps))
                }
                TailMode::Zero => out.fill(0.0),
            }
            return Ok(());
        }
        let k = pos.floor().max(0.0) as usize;
        let s = pos - k as f64;
        let (a, b) = (self.row(k), self.row((k + 1).min(self.steps)));
        for i in 0..self.dim {
            out[i] = a[i] + s * (b[i] - a[i]);
        }
        Ok(())
    }

    /// `sup_{θ ≤ -T_hist} e^{rθ}|ξ(θ)|` under the tail mode.
    pub fn tail_weighted_sup(&self, rate: f64) -> f64 {
        match self.tail {
            TailMode::Constant => (-rate * self.window()).exp() * euclid(self.row(self.steps)),
            TailMode::Zero => 0.0,
        }
    }

    /// `‖ξ‖_r` over the grid and the tail.
    ///
    /// Off-grid points are not searched: between neighbours the interpolant
    /// can exceed the larger grid candidate by at most a factor `e^{r·dt}`.
    pub fn weighted_norm(&self, rate: f64) -> f64 {
        let decay = (-rate * self.dt).exp();
        let mut weight = 1.0;
        let mut best = 0.0f64;
        for (k, row) in self.values.chunks(self.dim).enumerate() {
            if k > 0 && k % 64 == 0 {
                // Resync against drift in the repeated product.
                weight = (-rate * self.dt * k as f64).exp();
            }
            best = best.max(weight * euclid(row));
            weight *= decay;
        }
        best.max(self.tail_weighted_sup(rate))
    }

    fn same_grid(&self, other: &Segment) -> Result<()> {
        if self.dim != other.dim
            || self.steps != other.steps
            || (self.dt - other.dt).abs() > 1e-12 * self.dt
        {
            return Err(SfdeError::config("segments live on different grids"));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Segment {
        Segment { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// Pointwise `a·self + b·other`. The tails combine only when the modes agree.
    pub fn combine(&self, a: f64, other: &Segment, b: f64) -> Result<Segment> {
        self.same_grid(other)?;
        if self.tail != other.tail {
            return Err(SfdeError::config("cannot combine segments with different tail modes"));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Segment::new(self.dim, self.dt, values, self.tail)
    }

    pub fn add(&self, other: &Segment) -> Result<Segment> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Segment) -> Result<Segment> {
        self.combine(1.0, other, -1.0)
    }

    /// `ξ + v` for a constant vector `v` (also shifts a constant tail).
    pub fn offset(&self, v: &[f64]) -> Segment {
        let mut values = self.values.clone();
        for row in values.chunks_mut(self.dim) {
            for (x, dv) in row.iter_mut().zip(v) {
                *x += dv;
            }
        }
        Segment { values, ..self.clone() }
    }

    /// `‖self - other‖_r`, allowing different grids by sampling the finer one.
    pub fn distance(&self, other: &Segment, rate: f64) -> Result<f64> {
        if self.dim != other.dim {
            return Err(SfdeError::config("segment dimensions differ"));
        }
        if self.same_grid(other).is_ok() && self.tail == other.tail {
            return Ok(self.sub(other)?.weighted_norm(rate));
        }
        let dt = self.dt.min(other.dt);
        let window = self.window().max(other.window());
        let steps = steps_for_window(window, dt);
        let mut a = vec![0.0; self.dim];
        let mut b = vec![0.0; self.dim];
        let mut best = 0.0f64;
        for k in 0..=steps {
            let theta = -(k as f64) * dt;
            self.value_at(theta, &mut a)?;
            other.value_at(theta, &mut b)?;
            let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            best = best.max((rate * theta).exp() * d);
        }
        // Beyond both windows the tails are constant (or zero) vectors.
        let theta = -(steps as f64) * dt;
        self.value_at(theta - dt, &mut a)?;
        other.value_at(theta - dt, &mut b)?;
        let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        Ok(best.max((rate * theta).exp() * d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(values: &[f64]) -> Segment {
        Segment::new(1, 1.0, values.to_vec(), TailMode::Zero).unwrap()
    }

    #[test]
    fn zero_path_has_zero_norm() {
        let s = Segment::constant(&[0.0, 0.0], 0.1, 50, TailMode::Constant).unwrap();
        assert_eq!(s.weighted_norm(2.0), 0.0);
    }

    #[test]
    fn weight_cancels_growth() {
        let r = 0.7;
        let s = Segment::from_fn(1, 0.05, 400, TailMode::Constant, |t, o| o[0] = (-r * t).exp())
            .unwrap();
        assert!((s.weighted_norm(r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_sample_example() {
        let s = seg(&[1.0, 2.0, 10.0]);
        let oracle = [1.0, 2.0 * (-1.0f64).exp(), 10.0 * (-2.0f64).exp()]
            .into_iter()
            .fold(0.0, f64::max);
        assert!((s.weighted_norm(1.0) - oracle).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_with_row() {
        let err = Segment::new(2, 0.1, vec![0.0, 0.0, 1.0, f64::NAN, 0.0, 0.0], TailMode::Zero)
            .unwrap_err();
        assert!(matches!(err, SfdeError::NonFiniteSample { index: 1 }));
    }

    #[test]
    fn interpolation_and_tail() {
        let s = seg(&[0.0, 2.0, 4.0]);
        let mut out = [0.0];
        s.value_at(-0.5, &mut out).unwrap();
        assert_eq!(out[0], 1.0);
        s.value_at(-7.0, &mut out).unwrap();
        assert_eq!(out[0], 0.0);
        let c = Segment::new(1, 1.0, vec![0.0, 2.0, 4.0], TailMode::Constant).unwrap();
        c.value_at(-7.0, &mut out).unwrap();
        assert_eq!(out[0], 4.0);
        assert!(s.value_at(0.5, &mut out).is_err());
    }

    #[test]
    fn tail_sup_rules() {
        let c = Segment::new(1, 1.0, vec![0.0, 0.0, -3.0], TailMode::Constant).unwrap();
        assert!((c.tail_weighted_sup(0.5) - 3.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(seg(&[0.0, 0.0, 3.0]).tail_weighted_sup(0.5), 0.0);
    }

    #[test]
    fn distance_across_grids() {
        let a = Segment::constant(&[1.0], 0.1, 100, TailMode::Constant).unwrap();
        let b = Segment::constant(&[0.25], 0.05, 300, TailMode::Constant).unwrap();
        assert!((a.distance(&b, 1.0).unwrap() - 0.75).abs() < 1e-12);
    }
}
