//! Coefficient expressions.
//!
//! Every coefficient is a tree over the history `ξ`: the present value,
//! finitely many delays, fading integrals `∫ e^{κθ} g(ξ(θ)) dθ` with
//! `κ > r`, and globally Lipschitz outer maps. Each node has a closed-form
//! Lipschitz constant with respect to `‖·‖_r`, which is what the declared
//! model constants are derived from and checked against.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Result, SfdeError};
use crate::segment::Integrand;

type Buf = SmallVec<[f64; 8]>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    /// `ξ(0)`.
    Point,
    /// `ξ(-τ)`.
    Delay { tau: f64 },
    /// `∫_{-∞}^0 e^{κθ} g(ξ(θ)) dθ`; `g` may only use `point`.
    Fading {
        kappa: f64,
        #[serde(default = "point_box")]
        g: Box<Expr>,
    },
    Const { value: Vec<f64> },
    /// Matrix (given as rows) times the argument.
    Linear { matrix: Vec<Vec<f64>>, arg: Box<Expr> },
    Scale { factor: f64, arg: Box<Expr> },
    Sum { terms: Vec<Expr> },
    /// Componentwise `tanh`.
    Tanh { arg: Box<Expr> },
    Slice { start: usize, len: usize, arg: Box<Expr> },
}

fn point_box() -> Box<Expr> {
    Box::new(Expr::Point)
}

// Small constructors; builtin models read better with them.
impl Expr {
    pub fn point() -> Expr {
        Expr::Point
    }
    pub fn delay(tau: f64) -> Expr {
        Expr::Delay { tau }
    }
    pub fn fading(kappa: f64, g: Expr) -> Expr {
        Expr::Fading { kappa, g: Box::new(g) }
    }
    pub fn constant(value: Vec<f64>) -> Expr {
        Expr::Const { value }
    }
    pub fn linear(matrix: Vec<Vec<f64>>, arg: Expr) -> Expr {
        Expr::Linear { matrix, arg: Box::new(arg) }
    }
    pub fn scale(factor: f64, arg: Expr) -> Expr {
        Expr::Scale { factor, arg: Box::new(arg) }
    }
    pub fn sum(terms: Vec<Expr>) -> Expr {
        Expr::Sum { terms }
    }
    pub fn tanh(arg: Expr) -> Expr {
        Expr::Tanh { arg: Box::new(arg) }
    }
    pub fn slice(start: usize, len: usize, arg: Expr) -> Expr {
        Expr::Slice { start, len, arg: Box::new(arg) }
    }
}

/// Read access to a history, as needed by the expression evaluator.
pub trait HistoryView {
    fn point(&self) -> &[f64];
    /// `ξ(-τ)`, linearly interpolated off grid.
    fn delayed(&self, tau: f64, out: &mut [f64]);
    /// Current value of fading kernel `slot`.
    fn fading(&self, slot: usize) -> &[f64];
    /// `‖ξ‖_r`, for diagnostics only.
    fn norm(&self) -> f64;
}

#[derive(Clone, Debug)]
enum Op {
    Point,
    Delay(f64),
    Fading(usize),
    Const(Vec<f64>),
    Linear { cols: usize, m: Vec<f64>, arg: Box<Node> },
    Scale(f64, Box<Node>),
    Sum(Vec<Node>),
    Tanh(Box<Node>),
    Slice { start: usize, arg: Box<Node> },
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    dim: usize,
}

/// A fading kernel shared by all coefficients of a model.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub kappa: f64,
    pub g: PointFn,
    expr: Expr,
}

/// Deduplicated fading kernels; slot `i` is `kernels()[i]`.
#[derive(Clone, Debug, Default)]
pub struct KernelSet {
    kernels: Vec<Kernel>,
}

impl KernelSet {
    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    /// Total length of all kernel outputs.
    pub fn total_dim(&self) -> usize {
        self.kernels.iter().map(|k| k.g.out_dim).sum::<usize>()
    }

    fn intern(&mut self, kappa: f64, g: &Expr, g_fn: PointFn) -> usize {
        if let Some(i) = self
            .kernels
            .iter()
            .position(|k| k.kappa.to_bits() == kappa.to_bits() && &k.expr == g)
        {
            return i;
        }
        self.kernels.push(Kernel { kappa, g: g_fn, expr: g.clone() });
        self.kernels.len() - 1
    }
}

/// A compiled history functional.
#[derive(Clone, Debug)]
pub struct Functional {
    root: Node,
    lipschitz: f64,
    max_delay: f64,
    point_only: bool,
    range: Vec<(f64, f64)>,
}

/// A compiled point map `R^d → R^m`, usable as a fading integrand.
#[derive(Clone, Debug)]
pub struct PointFn {
    root: Node,
    in_dim: usize,
    out_dim: usize,
    lipschitz: f64,
}

struct PointView<'a>(&'a [f64]);

impl HistoryView for PointView<'_> {
    fn point(&self) -> &[f64] {
        self.0
    }
    fn delayed(&self, _: f64, _: &mut [f64]) {
        unreachable!("point maps have no delays")
    }
    fn fading(&self, _: usize) -> &[f64] {
        unreachable!("point maps have no kernels")
    }
    fn norm(&self) -> f64 {
        crate::segment::euclid(self.0)
    }
}

impl Integrand for PointFn {
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.root.eval(&PointView(x), out);
    }
}

impl PointFn {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

struct Compiled {
    node: Node,
    lip: f64,
    max_delay: f64,
    point_only: bool,
    range: Vec<(f64, f64)>,
}

fn spectral_norm(rows: usize, cols: usize, m: &[f64]) -> f64 {
    let mat = nalgebra::DMatrix::from_row_slice(rows, cols, m);
    mat.singular_values().iter().cloned().fold(0.0, f64::max)
}

fn compile(
    e: &Expr,
    in_dim: usize,
    rate: f64,
    kernels: &mut KernelSet,
    allow_history: bool,
) -> Result<Compiled> {
    let unbounded = |d: usize| vec![(f64::NEG_INFINITY, f64::INFINITY); d];
    Ok(match e {
        Expr::Point => Compiled {
            node: Node { op: Op::Point, dim: in_dim },
            lip: 1.0,
            max_delay: 0.0,
            point_only: true,
            range: unbounded(in_dim),
        },
        Expr::Delay { tau } => {
            if !allow_history {
                return Err(SfdeError::config("delays are not allowed inside a pointwise map"));
            }
            if !(*tau >= 0.0) || !tau.is_finite() {
                return Err(SfdeError::config(format!("delay must be nonnegative, got {tau}")));
            }
            Compiled {
                node: Node { op: Op::Delay(*tau), dim: in_dim },
                lip: (rate * tau).exp(),
                max_delay: *tau,
                point_only: false,
                range: unbounded(in_dim),
            }
        }
        Expr::Fading { kappa, g } => {
            if !allow_history {
                return Err(SfdeError::config("nested fading kernels are not supported"));
            }
            if !(*kappa > rate) || !kappa.is_finite() {
                return Err(SfdeError::KernelRate { kappa: *kappa, rate });
            }
            let inner = compile(g, in_dim, rate, kernels, false)?;
            let g_fn = PointFn {
                root: inner.node.clone(),
                in_dim,
                out_dim: inner.node.dim,
                lipschitz: inner.lip,
            };
            let slot = kernels.intern(*kappa, g, g_fn);
            Compiled {
                node: Node { op: Op::Fading(slot), dim: inner.node.dim },
                lip: inner.lip / (kappa - rate),
                max_delay: 0.0,
                point_only: false,
                range: inner.range.iter().map(|&(lo, hi)| (lo / kappa, hi / kappa)).collect(),
            }
        }
        Expr::Const { value } => {
            if value.is_empty() || value.iter().any(|v| !v.is_finite()) {
                return Err(SfdeError::config("constant must be a nonempty finite vector"));
            }
            Compiled {
                node: Node { op: Op::Const(value.clone()), dim: value.len() },
                lip: 0.0,
                max_delay: 0.0,
                point_only: true,
                range: value.iter().map(|&v| (v, v)).collect(),
            }
        }
        Expr::Linear { matrix, arg } => {
            let a = compile(arg, in_dim, rate, kernels, allow_history)?;
            let rows = matrix.len();
            let cols = a.node.dim;
            if rows == 0 || matrix.iter().any(|r| r.len() != cols) {
                return Err(SfdeError::config(format!(
                    "linear map needs {cols} columns in every row"
                )));
            }
            let m: Vec<f64> = matrix.iter().flatten().cloned().collect();
            if m.iter().any(|v| !v.is_finite()) {
                return Err(SfdeError::config("linear map has non-finite entries"));
            }
            let range = (0..rows)
                .map(|i| {
                    let (mut lo, mut hi) = (0.0, 0.0);
                    for j in 0..cols {
                        let c = m[i * cols + j];
                        if c == 0.0 {
                            continue;
                        }
                        let (l, h) = a.range[j];
                        let (p, q) = (c * l, c * h);
                        lo += p.min(q);
                        hi += p.max(q);
                    }
                    (lo, hi)
                })
                .collect();
            Compiled {
                lip: spectral_norm(rows, cols, &m) * a.lip,
                max_delay: a.max_delay,
                point_only: a.point_only,
                range,
                node: Node { op: Op::Linear { cols, m, arg: Box::new(a.node) }, dim: rows },
            }
        }
        Expr::Scale { factor, arg } => {
            let a = compile(arg, in_dim, rate, kernels, allow_history)?;
            let range = a
                .range
                .iter()
                .map(|&(l, h)| {
                    if *factor == 0.0 {
                        (0.0, 0.0)
                    } else {
                        let (p, q) = (factor * l, factor * h);
                        (p.min(q), p.max(q))
                    }
                })
                .collect();
            Compiled {
                lip: factor.abs() * a.lip,
                max_delay: a.max_delay,
                point_only: a.point_only,
                range,
                node: Node { dim: a.node.dim, op: Op::Scale(*factor, Box::new(a.node)) },
            }
        }
        Expr::Sum { terms } => {
            if terms.is_empty() {
                return Err(SfdeError::config("empty sum"));
            }
            let parts: Vec<Compiled> = terms
                .iter()
                .map(|t| compile(t, in_dim, rate, kernels, allow_history))
                .collect::<Result<_>>()?;
            let dim = parts[0].node.dim;
            if parts.iter().any(|p| p.node.dim != dim) {
                return Err(SfdeError::config("sum terms have different dimensions"));
            }
            let mut range = vec![(0.0, 0.0); dim];
            for p in &parts {
                for (r, q) in range.iter_mut().zip(&p.range) {
                    r.0 += q.0;
                    r.1 += q.1;
                }
            }
            Compiled {
                lip: parts.iter().map(|p| p.lip).sum(),
                max_delay: parts.iter().map(|p| p.max_delay).fold(0.0, f64::max),
                point_only: parts.iter().all(|p| p.point_only),
                range,
                node: Node { op: Op::Sum(parts.into_iter().map(|p| p.node).collect()), dim },
            }
        }
        Expr::Tanh { arg } => {
            let a = compile(arg, in_dim, rate, kernels, allow_history)?;
            Compiled {
                lip: a.lip,
                max_delay: a.max_delay,
                point_only: a.point_only,
                range: a.range.iter().map(|&(l, h)| (l.tanh(), h.tanh())).collect(),
                node: Node { dim: a.node.dim, op: Op::Tanh(Box::new(a.node)) },
            }
        }
        Expr::Slice { start, len, arg } => {
            let a = compile(arg, in_dim, rate, kernels, allow_history)?;
            if *len == 0 || start + len > a.node.dim {
                return Err(SfdeError::config(format!(
                    "slice {start}..{} out of range for dimension {}",
                    start + len,
                    a.node.dim
                )));
            }
            Compiled {
                lip: a.lip,
                max_delay: a.max_delay,
                point_only: a.point_only,
                range: a.range[*start..start + len].to_vec(),
                node: Node { dim: *len, op: Op::Slice { start: *start, arg: Box::new(a.node) } },
            }
        }
    })
}

impl Node {
    fn eval(&self, view: &dyn HistoryView, out: &mut [f64]) {
        match &self.op {
            Op::Point => out.copy_from_slice(view.point()),
            Op::Delay(tau) => view.delayed(*tau, out),
            Op::Fading(slot) => out.copy_from_slice(view.fading(*slot)),
            Op::Const(v) => out.copy_from_slice(v),
            Op::Linear { cols, m, arg } => {
                let mut tmp: Buf = SmallVec::from_elem(0.0, *cols);
                arg.eval(view, &mut tmp);
                for (o, row) in out.iter_mut().zip(m.chunks(*cols)) {
                    *o = row.iter().zip(&tmp).map(|(a, b)| a * b).sum();
                }
            }
            Op::Scale(c, arg) => {
                arg.eval(view, out);
                for o in out.iter_mut() {
                    *o *= c;
                }
            }
            Op::Sum(terms) => {
                terms[0].eval(view, out);
                let mut tmp: Buf = SmallVec::from_elem(0.0, self.dim);
                for t in &terms[1..] {
                    t.eval(view, &mut tmp);
                    for (o, v) in out.iter_mut().zip(&tmp) {
                        *o += v;
                    }
                }
            }
            Op::Tanh(arg) => {
                arg.eval(view, out);
                for o in out.iter_mut() {
                    *o = o.tanh();
                }
            }
            Op::Slice { start, arg } => {
                let mut tmp: Buf = SmallVec::from_elem(0.0, arg.dim);
                arg.eval(view, &mut tmp);
                out.copy_from_slice(&tmp[*start..start + self.dim]);
            }
        }
    }
}

impl Functional {
    /// Compile `e` for histories in `R^in_dim`, registering kernels in `kernels`.
    pub fn compile(e: &Expr, in_dim: usize, rate: f64, kernels: &mut KernelSet) -> Result<Self> {
        let c = compile(e, in_dim, rate, kernels, true)?;
        Ok(Functional {
            root: c.node,
            lipschitz: c.lip,
            max_delay: c.max_delay,
            point_only: c.point_only,
            range: c.range,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.root.dim
    }

    /// Lipschitz constant with respect to `‖·‖_r`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn max_delay(&self) -> f64 {
        self.max_delay
    }

    /// Uses only `ξ(0)`.
    pub fn point_only(&self) -> bool {
        self.point_only
    }

    /// Componentwise bounds on the output (infinite when unbounded).
    pub fn range(&self) -> &[(f64, f64)] {
        &self.range
    }

    /// Uses any fading kernel.
    pub fn uses_fading(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match &n.op {
                Op::Fading(_) => true,
                Op::Point | Op::Delay(_) | Op::Const(_) => false,
                Op::Linear { arg, .. } | Op::Scale(_, arg) | Op::Tanh(arg) | Op::Slice { arg, .. } => {
                    walk(arg)
                }
                Op::Sum(t) => t.iter().any(walk),
            }
        }
        walk(&self.root)
    }

    pub fn eval_into(&self, view: &dyn HistoryView, out: &mut [f64]) {
        self.root.eval(view, out)
    }

    pub fn eval(&self, view: &dyn HistoryView) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim()];
        self.eval_into(view, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let e = Expr::sum(vec![
            Expr::scale(-1.0, Expr::point()),
            Expr::fading(2.0, Expr::tanh(Expr::point())),
        ]);
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(
            s,
            r#"{"op":"sum","terms":[{"op":"scale","factor":-1.0,"arg":{"op":"point"}},{"op":"fading","kappa":2.0,"g":{"op":"tanh","arg":{"op":"point"}}}]}"#
        );
        let back: Expr = serde_json::from_str(r#"{"op":"fading","kappa":3}"#).unwrap();
        assert_eq!(back, Expr::fading(3.0, Expr::point()));
    }

    #[test]
    fn lipschitz_rules() {
        let mut ks = KernelSet::default();
        let r = 0.5;
        let f = Functional::compile(
            &Expr::sum(vec![
                Expr::scale(-2.0, Expr::point()),
                Expr::delay(1.0),
                Expr::fading(1.5, Expr::point()),
                Expr::linear(vec![vec![3.0, 0.0], vec![0.0, -4.0]], Expr::tanh(Expr::point())),
            ]),
            2,
            r,
            &mut ks,
        )
        .unwrap();
        let expected = 2.0 + (0.5f64).exp() + 1.0 / (1.5 - 0.5) + 4.0;
        assert!((f.lipschitz() - expected).abs() < 1e-12);
        assert_eq!(f.max_delay(), 1.0);
        assert!(!f.point_only());
        assert_eq!(ks.len(), 1);
    }

    #[test]
    fn kernels_are_shared() {
        let mut ks = KernelSet::default();
        let e = Expr::fading(2.0, Expr::point());
        Functional::compile(&e, 1, 1.0, &mut ks).unwrap();
        Functional::compile(&Expr::scale(3.0, e.clone()), 1, 1.0, &mut ks).unwrap();
        Functional::compile(&Expr::fading(2.5, Expr::point()), 1, 1.0, &mut ks).unwrap();
        assert_eq!(ks.len(), 2);
    }

    #[test]
    fn rejects_bad_trees() {
        let mut ks = KernelSet::default();
        let slow = Expr::fading(0.5, Expr::point());
        assert!(matches!(
            Functional::compile(&slow, 1, 1.0, &mut ks),
            Err(SfdeError::KernelRate { .. })
        ));
        let nested = Expr::fading(2.0, Expr::delay(0.1));
        assert!(Functional::compile(&nested, 1, 1.0, &mut ks).is_err());
        let ragged = Expr::linear(vec![vec![1.0]], Expr::point());
        assert!(Functional::compile(&ragged, 2, 1.0, &mut ks).is_err());
    }

    #[test]
    fn ranges() {
        let mut ks = KernelSet::default();
        let e = Expr::sum(vec![
            Expr::constant(vec![1.0]),
            Expr::scale(-0.5, Expr::tanh(Expr::slice(0, 1, Expr::point()))),
        ]);
        let f = Functional::compile(&e, 3, 1.0, &mut ks).unwrap();
        assert_eq!(f.range(), &[(0.5, 1.5)]);
        let g = Functional::compile(&Expr::fading(2.0, Expr::tanh(Expr::point())), 1, 1.0, &mut ks)
            .unwrap();
        assert_eq!(g.range(), &[(-0.5, 0.5)]);
    }
}
