use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Result, SfdeError};

const MAGIC: &[u8; 5] = b"SFDE1";

/// Recorded grid samples of one path.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Row-major, `dim` values per recorded time.
    pub states: Vec<f64>,
    pub norms: Vec<f64>,
    pub stopped: bool,
    pub stop_time: Option<f64>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Trajectory { dim, ..Default::default() }
    }

    pub fn push(&mut self, t: f64, x: &[f64], norm: f64) {
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.norms.push(norm);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Columns `t, x_1..x_d, norm_r, stopped`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x_{i}")));
        header.push("norm_r".into());
        header.push("stopped".into());
        w.write_record(&header)?;
        let n = self.len();
        for i in 0..n {
            let mut row = vec![self.times[i].to_string()];
            row.extend(self.state(i).iter().map(|v| v.to_string()));
            row.push(self.norms[i].to_string());
            row.push(u8::from(self.stopped && i + 1 == n).to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| SfdeError::io("<csv>", e))?;
        Ok(())
    }

    /// Little-endian dump: magic, `dim: u64`, `len: u64`, `stopped: u8`,
    /// `stop_time: f64` (NaN if none), then `t, x.., norm` per sample.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| SfdeError::io("<binary>", e);
        out.write_all(MAGIC).map_err(io)?;
        out.write_all(&(self.dim as u64).to_le_bytes()).map_err(io)?;
        out.write_all(&(self.len() as u64).to_le_bytes()).map_err(io)?;
        out.write_all(&[u8::from(self.stopped)]).map_err(io)?;
        out.write_all(&self.stop_time.unwrap_or(f64::NAN).to_le_bytes()).map_err(io)?;
        for i in 0..self.len() {
            out.write_all(&self.times[i].to_le_bytes()).map_err(io)?;
            for v in self.state(i) {
                out.write_all(&v.to_le_bytes()).map_err(io)?;
            }
            out.write_all(&self.norms[i].to_le_bytes()).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut inp: R) -> Result<Self> {
        let io = |e| SfdeError::io("<binary>", e);
        let mut magic = [0u8; 5];
        inp.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(SfdeError::config("not an SFDE1 trajectory dump"));
        }
        let mut b8 = [0u8; 8];
        let mut u64_ = |inp: &mut R| -> Result<u64> {
            inp.read_exact(&mut b8).map_err(io)?;
            Ok(u64::from_le_bytes(b8))
        };
        let dim = u64_(&mut inp)? as usize;
        let n = u64_(&mut inp)? as usize;
        let mut b1 = [0u8; 1];
        inp.read_exact(&mut b1).map_err(io)?;
        let f = |inp: &mut R| -> Result<f64> {
            let mut b = [0u8; 8];
            inp.read_exact(&mut b).map_err(io)?;
            Ok(f64::from_le_bytes(b))
        };
        let st = f(&mut inp)?;
        let mut tr = Trajectory::new(dim);
        tr.stopped = b1[0] != 0;
        tr.stop_time = if st.is_nan() { None } else { Some(st) };
        let mut x = vec![0.0; dim];
        for _ in 0..n {
            let t = f(&mut inp)?;
            for v in x.iter_mut() {
                *v = f(&mut inp)?;
            }
            let norm = f(&mut inp)?;
            tr.push(t, &x, norm);
        }
        Ok(tr)
    }
}
