//! Constants of the stochastic Hamiltonian coupling.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, SfdeError};

const LN2: f64 = std::f64::consts::LN_2;

fn check_domain(p: f64, alpha: f64) -> Result<()> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(SfdeError::Domain(format!("p must exceed 2, got {p}")));
    }
    if !(alpha > 1.0 / p && alpha < 0.5) {
        return Err(SfdeError::Domain(format!("alpha must lie in (1/p, 1/2), got {alpha} with p = {p}")));
    }
    Ok(())
}

/// `log Λ_{p,α}` where
/// `Λ = (p^{1+p}/(2(p-1)^{p-1}))^{p/2} (Γ(1-2α)/2^{1-2α})^{p/2} (1-1/p)^{pα-1} Γ((pα-1)/(p-1))^{p-1}`.
pub fn log_lambda_p_alpha(p: f64, alpha: f64) -> Result<f64> {
    check_domain(p, alpha)?;
    let a = (1.0 + p) * p.ln() - LN2 - (p - 1.0) * (p - 1.0).ln();
    let b = ln_gamma(1.0 - 2.0 * alpha) - (1.0 - 2.0 * alpha) * LN2;
    let c = (p * alpha - 1.0) * (1.0 - 1.0 / p).ln();
    let d = (p - 1.0) * ln_gamma((p * alpha - 1.0) / (p - 1.0));
    Ok(0.5 * p * (a + b) + c + d)
}

pub fn lambda_p_alpha(p: f64, alpha: f64) -> Result<f64> {
    Ok(log_lambda_p_alpha(p, alpha)?.exp())
}

/// `c_β = (1 + β + 2β²)/2`.
pub fn c_beta(beta: f64) -> f64 {
    (1.0 + beta + 2.0 * beta * beta) / 2.0
}

/// `V(x, y) = (1/2 + β²)|x|² + |y|²/2 + β⟨x, y⟩`.
pub fn lyapunov_v(x: &[f64], y: &[f64], beta: f64) -> f64 {
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (0.5 + beta * beta) * xx + 0.5 * yy + beta * xy
}

/// Grid for the `(p, α)` search: `p - 2` log-spaced on `[p_min - 2, p_max - 2]`,
/// `α` uniform over the open interval `(1/p, 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub p_points: usize,
    pub alpha_points: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid { p_min: 2.001, p_max: 40.0, p_points: 80, alpha_points: 80 }
    }
}

impl SearchGrid {
    fn p_values(&self) -> Vec<f64> {
        let lo = (self.p_min.max(2.0) - 2.0).max(1e-12).ln();
        let hi = (self.p_max - 2.0).ln();
        let n = self.p_points;
        (0..n)
            .map(|i| 2.0 + (lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64).exp())
            .collect()
    }

    fn alpha_values(&self, p: f64) -> impl Iterator<Item = f64> {
        let (lo, m) = (1.0 / p, self.alpha_points);
        (0..m).map(move |j| lo + (0.5 - lo) * (j as f64 + 0.5) / m as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianConstants {
    pub p0: f64,
    pub alpha0: f64,
    pub log_lambda: f64,
    pub lambda: f64,
    pub mu: f64,
    pub threshold: f64,
    pub beta: f64,
    pub c_beta: f64,
    pub l1: f64,
    pub l2: f64,
    pub r: f64,
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden<F: FnMut(f64) -> f64>(mut a: f64, mut b: f64, tol: f64, mut f: F) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + c.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn profile(p: f64) -> (f64, f64) {
    let lo = 1.0 / p;
    let eps = 1e-12;
    golden(lo + eps, 0.5 - eps, 1e-13, |a| log_lambda_p_alpha(p, a).unwrap_or(f64::INFINITY))
}

/// `(p₀, α₀)` minimizing `Λ_{p,α}`: grid search, then golden-section on the
/// profile `p ↦ min_α log Λ`.
pub fn minimize_lambda(grid: &SearchGrid) -> Result<(f64, f64, f64)> {
    if !(grid.p_max > grid.p_min.max(2.0)) || grid.p_points < 3 || grid.alpha_points < 1 {
        return Err(SfdeError::config("empty (p, alpha) search grid"));
    }
    let ps = grid.p_values();
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, &p) in ps.iter().enumerate() {
        for a in grid.alpha_values(p) {
            if let Ok(v) = log_lambda_p_alpha(p, a) {
                if v.is_finite() && v < best.1 {
                    best = (i, v);
                }
            }
        }
    }
    if best.0 == usize::MAX {
        return Err(SfdeError::config("no finite value of Lambda on the search grid"));
    }
    let i = best.0;
    let lo = if i == 0 { ps[0].max(2.0 + 1e-12) } else { ps[i - 1] };
    let hi = ps[(i + 1).min(ps.len() - 1)];
    let (p0, v) = golden(lo, hi, 1e-12, |p| profile(p).1);
    let (a0, _) = profile(p0);
    Ok((p0, a0, v))
}

/// `μ_{p₀} = 2^{3p₀-1}((L₁ + L₂/2)^{p₀}(1-1/p₀)^{p₀-1} + Λ L₂^{p₀/2})`.
pub fn mu_p0(p0: f64, lambda: f64, l1: f64, l2: f64) -> f64 {
    2f64.powf(3.0 * p0 - 1.0)
        * ((l1 + l2 / 2.0).powf(p0) * (1.0 - 1.0 / p0).powf(p0 - 1.0) + lambda * l2.powf(p0 / 2.0))
}

/// `r + ((1+β+2β²)/(2β)) (μ/(2p₀r))^{2/(p₀-2)}`.
pub fn lambda_threshold(p0: f64, mu: f64, beta: f64, r: f64) -> f64 {
    r + (1.0 + beta + 2.0 * beta * beta) / (2.0 * beta) * (mu / (2.0 * p0 * r)).powf(2.0 / (p0 - 2.0))
}

pub fn hamiltonian_constants(
    l1: f64,
    l2: f64,
    beta: f64,
    r: f64,
    grid: &SearchGrid,
) -> Result<HamiltonianConstants> {
    if !(l1 >= 0.0 && l2 >= 0.0 && beta > 0.0 && r > 0.0) || ![l1, l2, beta, r].iter().all(|v| v.is_finite()) {
        return Err(SfdeError::config(format!(
            "need L1, L2 >= 0 and beta, r > 0 (got {l1}, {l2}, {beta}, {r})"
        )));
    }
    let (p0, alpha0, log_lambda) = minimize_lambda(grid)?;
    let lambda = log_lambda.exp();
    let mu = mu_p0(p0, lambda, l1, l2);
    Ok(HamiltonianConstants {
        p0,
        alpha0,
        log_lambda,
        lambda,
        mu,
        threshold: lambda_threshold(p0, mu, beta, r),
        beta,
        c_beta: c_beta(beta),
        l1,
        l2,
        r,
    })
}
