//! `σ(ξ) = Σ_k s_k(ξ)·M_k` with scalar functionals `s_k` and fixed square `M_k`.

use nalgebra::DMatrix;

use super::expr::{Functional, HistoryView};
use crate::error::{Result, SfdeError};

#[derive(Clone, Debug)]
pub struct DiffusionTerm {
    scalar: Functional,
    size: usize,
    matrix: Vec<f64>,
    /// `Some(a)` when `M = a·I`.
    identity_multiple: Option<f64>,
}

impl DiffusionTerm {
    pub fn new(scalar: Functional, size: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != size * size || matrix.iter().any(|v| !v.is_finite()) {
            return Err(SfdeError::config(format!("diffusion matrix must be {size}x{size} and finite")));
        }
        let a = matrix[0];
        let is_multiple = (0..size).all(|i| {
            (0..size).all(|j| matrix[i * size + j] == if i == j { a } else { 0.0 })
        });
        Ok(DiffusionTerm { scalar, size, matrix, identity_multiple: is_multiple.then_some(a) })
    }

    pub fn scalar(&self) -> &Functional {
        &self.scalar
    }
    pub fn size(&self) -> usize {
        self.size
    }
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }
    pub fn frobenius(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// An evaluated diffusion matrix, kept as `s·I` when possible.
#[derive(Clone, Debug)]
pub struct DiffusionValue {
    size: usize,
    scalar: Option<f64>,
    dense: Vec<f64>,
}

impl DiffusionValue {
    pub fn new(size: usize) -> Self {
        DiffusionValue { size, scalar: Some(0.0), dense: Vec::new() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `Some(s)` when the value is `s·I`.
    pub fn as_scalar(&self) -> Option<f64> {
        self.scalar
    }

    pub fn is_finite(&self) -> bool {
        match self.scalar {
            Some(s) => s.is_finite(),
            None => self.dense.iter().all(|v| v.is_finite()),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self.scalar {
            Some(s) => DMatrix::identity(self.size, self.size) * s,
            None => DMatrix::from_row_slice(self.size, self.size, &self.dense),
        }
    }

    /// `out = σ·v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self.scalar {
            Some(s) => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = s * x;
                }
            }
            None => {
                for (o, row) in out.iter_mut().zip(self.dense.chunks(self.size)) {
                    *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// `out = σ^{-1}·v`.
    pub fn solve(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        match self.scalar {
            Some(s) => {
                if s == 0.0 {
                    return Err(SfdeError::DiffusionSingular);
                }
                for (o, x) in out.iter_mut().zip(v) {
                    *o = x / s;
                }
            }
            None => {
                let lu = self.to_matrix().lu();
                let rhs = nalgebra::DVector::from_column_slice(v);
                let x = lu.solve(&rhs).ok_or(SfdeError::DiffusionSingular)?;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(SfdeError::DiffusionSingular);
                }
                out.copy_from_slice(x.as_slice());
            }
        }
        Ok(())
    }

    /// Largest and smallest singular values.
    pub fn singular_range(&self) -> (f64, f64) {
        match self.scalar {
            Some(s) => (s.abs(), s.abs()),
            None => {
                let sv = self.to_matrix().singular_values();
                let hi = sv.iter().cloned().fold(0.0, f64::max);
                let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
                (hi, lo)
            }
        }
    }

    /// `‖self - other‖_HS`.
    pub fn hs_distance(&self, other: &DiffusionValue) -> f64 {
        match (self.scalar, other.scalar) {
            (Some(a), Some(b)) => (a - b).abs() * (self.size as f64).sqrt(),
            _ => (self.to_matrix() - other.to_matrix()).norm(),
        }
    }
}

pub(super) fn evaluate(
    terms: &[DiffusionTerm],
    view: &dyn HistoryView,
    out: &mut DiffusionValue,
) -> Result<()> {
    let mut s = [0.0];
    if terms.iter().all(|t| t.identity_multiple.is_some()) {
        let mut total = 0.0;
        for t in terms {
            t.scalar.eval_into(view, &mut s);
            total += s[0] * t.identity_multiple.unwrap_or(0.0);
        }
        out.scalar = Some(total);
        return Ok(());
    }
    let n = out.size;
    out.scalar = None;
    out.dense.clear();
    out.dense.resize(n * n, 0.0);
    for t in terms {
        t.scalar.eval_into(view, &mut s);
        for (d, m) in out.dense.iter_mut().zip(&t.matrix) {
            *d += s[0] * m;
        }
    }
    Ok(())
}

/// `(‖σ‖_∞, ‖σ^{-1}‖_∞)` for a single term `s(ξ)·a·I` whose scalar range
/// stays away from zero. `None` when the bounds cannot be read off.
pub(super) fn scalar_bounds(terms: &[DiffusionTerm]) -> Option<(f64, f64)> {
    if terms.len() != 1 {
        return None;
    }
    let t = &terms[0];
    let a = t.identity_multiple?.abs();
    let (lo, hi) = t.scalar.range()[0];
    if !(lo.is_finite() && hi.is_finite()) || (lo <= 0.0 && hi >= 0.0) || a == 0.0 {
        return None;
    }
    let max = lo.abs().max(hi.abs()) * a;
    let min = lo.abs().min(hi.abs()) * a;
    Some((max, 1.0 / min))
}
