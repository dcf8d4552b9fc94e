//! Built-in example models. Each comes as a [`ModelDef`] (the same JSON
//! that ships under `configs/models/`) with analytic constants declared.

use super::config::{DiffusionTermDef, GalerkinModes, ModelDef};
use super::expr::Expr;
use super::galerkin::EigenSequence;
use super::{DeclaredConstants, ModelKind, ModelSpec};
use crate::error::Result;

fn sigma_scalar(sigma0: f64, eps: f64) -> Expr {
    if eps == 0.0 {
        Expr::constant(vec![sigma0])
    } else {
        Expr::sum(vec![
            Expr::constant(vec![sigma0]),
            Expr::scale(eps, Expr::tanh(Expr::slice(0, 1, Expr::point()))),
        ])
    }
}

/// `b(ξ) = -a·ξ(0) + c·I_κ(ξ)`, `σ(ξ) = (σ₀ + ε·tanh(ξ(0)_1))·I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearParams {
    pub dim: usize,
    pub rate: f64,
    pub a: f64,
    pub c: f64,
    pub kappa: f64,
    pub sigma0: f64,
    pub eps: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        LinearParams { dim: 2, rate: 1.0, a: 1.0, c: 0.5, kappa: 2.0, sigma0: 1.0, eps: 0.0 }
    }
}

impl LinearParams {
    pub fn multiplicative() -> Self {
        LinearParams { eps: 0.5, ..Default::default() }
    }
}

pub fn linear_def(name: &str, p: LinearParams) -> ModelDef {
    let mut terms = vec![Expr::scale(-p.a, Expr::point())];
    if p.c != 0.0 {
        terms.push(Expr::scale(p.c, Expr::fading(p.kappa, Expr::point())));
    }
    let drift = if terms.len() == 1 { terms.pop().unwrap() } else { Expr::sum(terms) };
    let lip = p.a.abs() + p.c.abs() / (p.kappa - p.rate);
    ModelDef {
        name: name.to_string(),
        kind: ModelKind::Nondegenerate,
        dim: Some(p.dim),
        rate: p.rate,
        drift: Some(drift),
        diffusion: vec![DiffusionTermDef::scalar(sigma_scalar(p.sigma0, p.eps))],
        neutral: None,
        constants: DeclaredConstants {
            k1: Some(2.0 * lip),
            k2: Some(p.dim as f64 * p.eps * p.eps),
            sigma_max: Some(p.sigma0 + p.eps.abs()),
            sigma_inv_max: Some(1.0 / (p.sigma0 - p.eps.abs())),
            ..Default::default()
        },
        galerkin: None,
        ergodic: true,
    }
}

pub fn linear(p: LinearParams) -> Result<ModelSpec> {
    linear_def("linear", p).build()
}

/// Linear drift and constant `σ₀` with neutral term `G = g·κ·I_κ`,
/// whose Lipschitz constant is `δ = |g|·κ/(κ - r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeutralParams {
    pub dim: usize,
    pub rate: f64,
    pub a: f64,
    pub c: f64,
    pub kappa: f64,
    pub sigma0: f64,
    pub g: f64,
}

impl Default for NeutralParams {
    fn default() -> Self {
        NeutralParams { dim: 1, rate: 1.0, a: 1.0, c: 0.5, kappa: 2.0, sigma0: 1.0, g: 0.25 }
    }
}

impl NeutralParams {
    pub fn delta(&self) -> f64 {
        self.g.abs() * self.kappa / (self.kappa - self.rate)
    }
}

pub fn neutral_def(name: &str, p: NeutralParams) -> ModelDef {
    let mut def = linear_def(
        name,
        LinearParams {
            dim: p.dim,
            rate: p.rate,
            a: p.a,
            c: p.c,
            kappa: p.kappa,
            sigma0: p.sigma0,
            eps: 0.0,
        },
    );
    let delta = p.delta();
    let lip_b = p.a.abs() + p.c.abs() / (p.kappa - p.rate);
    def.kind = ModelKind::Neutral;
    def.neutral = Some(Expr::scale(p.g * p.kappa, Expr::fading(p.kappa, Expr::point())));
    def.constants = DeclaredConstants {
        delta: Some(delta),
        l: Some(2.0 * (1.0 + delta) * lip_b),
        k2: Some(0.0),
        sigma_max: Some(p.sigma0),
        sigma_inv_max: Some(1.0 / p.sigma0),
        ..Default::default()
    };
    def
}

pub fn neutral(p: NeutralParams) -> Result<ModelSpec> {
    neutral_def("neutral", p).build()
}

/// The shipped neutral model with its neutral term rescaled to Lipschitz
/// constant `true_delta`, while still declaring the shipped `δ`.
pub fn neutral_injected_def(true_delta: f64) -> ModelDef {
    let p = NeutralParams::default();
    let mut def = neutral_def("neutral-injected", p);
    let g = true_delta * (p.kappa - p.rate) / p.kappa;
    def.neutral = Some(Expr::scale(g * p.kappa, Expr::fading(p.kappa, Expr::point())));
    def
}

/// `N` modes, `λ_i = i²`, `b_N = c·tanh(κ·I_κ(x))`, `σ = σ₀·I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GalerkinParams {
    pub modes: usize,
    pub rate: f64,
    pub c: f64,
    pub kappa: f64,
    pub sigma0: f64,
    pub alpha: f64,
}

impl Default for GalerkinParams {
    fn default() -> Self {
        GalerkinParams { modes: 4, rate: 1.0, c: 0.5, kappa: 2.0, sigma0: 1.0, alpha: 0.6 }
    }
}

pub fn galerkin_def(name: &str, p: GalerkinParams) -> ModelDef {
    let l0 = p.c.abs() * p.kappa / (p.kappa - p.rate);
    ModelDef {
        name: name.to_string(),
        kind: ModelKind::GalerkinSpde,
        dim: None,
        rate: p.rate,
        drift: None,
        diffusion: vec![DiffusionTermDef::scalar(Expr::constant(vec![p.sigma0]))],
        neutral: None,
        constants: DeclaredConstants {
            l0: Some(l0),
            k1: Some(2.0 * l0),
            k2: Some(0.0),
            sigma_max: Some(p.sigma0),
            sigma_inv_max: Some(1.0 / p.sigma0),
            ..Default::default()
        },
        galerkin: Some(GalerkinModes {
            modes: p.modes,
            eigenvalues: EigenSequence::Power { scale: 1.0, exponent: 2.0 },
            alpha: p.alpha,
            nonlinear: Expr::scale(
                p.c,
                Expr::tanh(Expr::scale(p.kappa, Expr::fading(p.kappa, Expr::point()))),
            ),
        }),
        ergodic: true,
    }
}

pub fn galerkin(p: GalerkinParams) -> Result<ModelSpec> {
    galerkin_def("galerkin", p).build()
}

/// `dX = λ·Y dt`,
/// `dY = (-βγ·X(0) - γ·Y(0) + c·tanh(κ·I_κ(X))) dt + σ₀ dW` on `R^n × R^n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianParams {
    pub n: usize,
    pub rate: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
    pub kappa: f64,
    pub sigma0: f64,
    pub lambda: f64,
}

impl Default for HamiltonianParams {
    fn default() -> Self {
        HamiltonianParams {
            n: 1,
            rate: 1.0,
            beta: 1.0,
            gamma: 1.0,
            c: 0.1,
            kappa: 2.0,
            sigma0: 1.0,
            lambda: 1.5,
        }
    }
}

impl HamiltonianParams {
    /// `L₁`: the linear part is monotone for the `(β, 1)` pairing, and the
    /// memory term costs `|c|κ/(κ-r)·(β + 1/2)`.
    pub fn l1(&self) -> f64 {
        self.c.abs() * self.kappa / (self.kappa - self.rate) * (self.beta + 0.5)
    }
}

pub fn hamiltonian_def(name: &str, p: HamiltonianParams) -> ModelDef {
    let n = p.n;
    let lin: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; 2 * n];
            row[i] = -p.beta * p.gamma;
            row[n + i] = -p.gamma;
            row
        })
        .collect();
    let memory = Expr::scale(
        p.c,
        Expr::tanh(Expr::scale(p.kappa, Expr::fading(p.kappa, Expr::slice(0, n, Expr::point())))),
    );
    ModelDef {
        name: name.to_string(),
        kind: ModelKind::Hamiltonian,
        dim: Some(2 * n),
        rate: p.rate,
        drift: Some(Expr::sum(vec![Expr::linear(lin, Expr::point()), memory])),
        diffusion: vec![DiffusionTermDef::scalar(Expr::constant(vec![p.sigma0]))],
        neutral: None,
        constants: DeclaredConstants {
            l1: Some(p.l1()),
            l2: Some(0.0),
            beta: Some(p.beta),
            lambda: Some(p.lambda),
            sigma_max: Some(p.sigma0),
            sigma_inv_max: Some(1.0 / p.sigma0),
            ..Default::default()
        },
        galerkin: None,
        ergodic: true,
    }
}

pub fn hamiltonian(p: HamiltonianParams) -> Result<ModelSpec> {
    hamiltonian_def("hamiltonian", p).build()
}

/// `b ≡ 0`, `σ ≡ 0`: every path is constant.
pub fn zero_def(dim: usize, rate: f64) -> ModelDef {
    ModelDef {
        name: "zero".to_string(),
        kind: ModelKind::Nondegenerate,
        dim: Some(dim),
        rate,
        drift: Some(Expr::constant(vec![0.0; dim])),
        diffusion: vec![DiffusionTermDef::scalar(Expr::constant(vec![0.0]))],
        neutral: None,
        constants: DeclaredConstants::default(),
        galerkin: None,
        ergodic: false,
    }
}

/// Everything under `configs/models/`, keyed by file stem.
pub fn shipped() -> Vec<(&'static str, ModelDef)> {
    vec![
        ("linear", linear_def("linear", LinearParams::default())),
        ("linear_mult", linear_def("linear_mult", LinearParams::multiplicative())),
        ("linear_additive", linear_def("linear_additive", LinearParams { dim: 1, c: 0.0, ..Default::default() })),
        ("neutral", neutral_def("neutral", NeutralParams::default())),
        ("galerkin", galerkin_def("galerkin", GalerkinParams::default())),
        ("hamiltonian", hamiltonian_def("hamiltonian", HamiltonianParams::default())),
        ("zero", zero_def(1, 1.0)),
    ]
}
