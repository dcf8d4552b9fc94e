use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SfdeError};
use crate::rng;

/// Supplier of Brownian increments, one vector per step.
pub trait NoiseSource {
    fn fill(&mut self, dw: &mut [f64]) -> Result<()>;
}

/// `N(0, dt·I)` increments from a keyed ChaCha stream.
#[derive(Clone, Debug)]
pub struct GaussianNoise {
    rng: ChaCha8Rng,
    sd: f64,
}

impl GaussianNoise {
    pub fn new(seed: u64, domain: u64, path: u64, dt: f64) -> Self {
        GaussianNoise { rng: rng::stream(seed, domain, path), sd: dt.sqrt() }
    }
}

impl NoiseSource for GaussianNoise {
    fn fill(&mut self, dw: &mut [f64]) -> Result<()> {
        for v in dw.iter_mut() {
            let z: f64 = self.rng.sample(StandardNormal);
            *v = self.sd * z;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn fill(&mut self, dw: &mut [f64]) -> Result<()> {
        dw.fill(0.0);
        Ok(())
    }
}

/// Replays a fixed increment sequence.
#[derive(Clone, Debug)]
pub struct RecordedNoise {
    data: Vec<f64>,
    pos: usize,
}

impl RecordedNoise {
    pub fn new(data: Vec<f64>) -> Self {
        RecordedNoise { data, pos: 0 }
    }
}

impl NoiseSource for RecordedNoise {
    fn fill(&mut self, dw: &mut [f64]) -> Result<()> {
        let end = self.pos + dw.len();
        if end > self.data.len() {
            return Err(SfdeError::usage("recorded noise exhausted"));
        }
        dw.copy_from_slice(&self.data[self.pos..end]);
        self.pos = end;
        Ok(())
    }
}

/// Increments on a grid `m` times finer, summed in blocks of `m`. Feeding
/// the fine stream to one solver and this to another gives both the same
/// Brownian path.
pub struct Aggregated<'a, N: NoiseSource> {
    inner: &'a mut N,
    factor: usize,
    buf: Vec<f64>,
}

impl<'a, N: NoiseSource> Aggregated<'a, N> {
    pub fn new(inner: &'a mut N, factor: usize) -> Self {
        Aggregated { inner, factor, buf: Vec::new() }
    }
}

impl<N: NoiseSource> NoiseSource for Aggregated<'_, N> {
    fn fill(&mut self, dw: &mut [f64]) -> Result<()> {
        dw.fill(0.0);
        self.buf.resize(dw.len(), 0.0);
        for _ in 0..self.factor {
            self.inner.fill(&mut self.buf)?;
            for (a, b) in dw.iter_mut().zip(&self.buf) {
                *a += b;
            }
        }
        Ok(())
    }
}
