use crate::error::{Result, SfdeError};

use super::euclid;

/// Running `‖X_t‖_r` along a forward path.
///
/// Keeps `m = sup_{0<s≤t}(r·s + ln|X(s)|)` so nothing of size `e^{rs}` is
/// ever formed. The norm at time `t` is `max(e^{-rt}·‖X_0‖_r, e^{m - rt})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormTracker {
    rate: f64,
    time: f64,
    log_running_max: f64,
    init_norm: f64,
}

impl NormTracker {
    pub fn new(rate: f64, init_norm: f64) -> Self {
        NormTracker { rate, time: 0.0, log_running_max: f64::NEG_INFINITY, init_norm }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn log_running_max(&self) -> f64 {
        self.log_running_max
    }

    pub fn init_norm(&self) -> f64 {
        self.init_norm
    }

    /// `‖X_t‖_r` at the tracker's current time.
    pub fn norm(&self) -> f64 {
        let rt = self.rate * self.time;
        let head = (-rt).exp() * self.init_norm;
        head.max((self.log_running_max - rt).exp())
    }

    pub fn advance(&self, t_new: f64, x_new: &[f64]) -> Result<(NormTracker, f64)> {
        let mut next = *self;
        let norm = next.advance_mut(t_new, euclid(x_new))?;
        Ok((next, norm))
    }

    /// In-place form of [`advance`](Self::advance) taking `|x_new|`.
    pub fn advance_mut(&mut self, t_new: f64, abs_x: f64) -> Result<f64> {
        if t_new < self.time {
            return Err(SfdeError::TimeRegression { t_current: self.time, t_new });
        }
        self.time = t_new;
        if abs_x > 0.0 {
            self.log_running_max = self.log_running_max.max(self.rate * t_new + abs_x.ln());
        }
        Ok(self.norm())
    }
}
