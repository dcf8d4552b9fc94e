use std::io::Write;

use serde::Serialize;

use super::{CoupledPath, Measure};
use crate::error::{Result, SfdeError};

/// Recorded samples of a coupled pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledTrajectory {
    pub dim: usize,
    pub noise_dim: usize,
    pub measure: Measure,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `h` from the step leading into each sample (zero at `t = 0`).
    pub h: Vec<f64>,
    pub log_r: Vec<f64>,
    pub entropy: Vec<f64>,
    pub z_norm: Vec<f64>,
    pub stopped: bool,
    pub stop_time: Option<f64>,
}

impl CoupledTrajectory {
    pub fn new(dim: usize, noise_dim: usize, measure: Measure) -> Self {
        CoupledTrajectory {
            dim,
            noise_dim,
            measure,
            times: vec![],
            x: vec![],
            y: vec![],
            h: vec![],
            log_r: vec![],
            entropy: vec![],
            z_norm: vec![],
            stopped: false,
            stop_time: None,
        }
    }

    pub(super) fn record(&mut self, p: &CoupledPath) {
        self.times.push(p.time());
        self.x.extend_from_slice(p.x().current());
        self.y.extend_from_slice(p.y().current());
        if self.times.len() == 1 {
            self.h.extend(std::iter::repeat_n(0.0, self.noise_dim));
        } else {
            self.h.extend_from_slice(p.h());
        }
        self.log_r.push(p.log_r());
        self.entropy.push(p.entropy());
        self.z_norm.push(p.z_norm());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y_at(&self, i: usize) -> &[f64] {
        &self.y[i * self.dim..(i + 1) * self.dim]
    }

    pub fn h_at(&self, i: usize) -> &[f64] {
        &self.h[i * self.noise_dim..(i + 1) * self.noise_dim]
    }

    /// Columns `t, x_*, y_*, h_norm, logR, z_norm_r`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x_{i}")));
        header.extend((1..=self.dim).map(|i| format!("y_{i}")));
        header.extend(["h_norm", "logR", "z_norm_r"].map(String::from));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let hn: f64 = self.h_at(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut row = vec![self.times[i].to_string()];
            row.extend(self.x_at(i).iter().map(|v| v.to_string()));
            row.extend(self.y_at(i).iter().map(|v| v.to_string()));
            row.push(hn.to_string());
            row.push(self.log_r[i].to_string());
            row.push(self.z_norm[i].to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| SfdeError::io("<csv>", e))?;
        Ok(())
    }
}
