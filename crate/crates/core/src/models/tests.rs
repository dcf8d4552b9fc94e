use super::builtin::*;
use super::validate::RandomPairs;
use super::*;
use crate::segment::{Segment, TailMode};

fn constant(v: &[f64]) -> Segment {
    Segment::constant(v, 0.05, 400, TailMode::Constant).unwrap()
}

#[test]
fn linear_drift_without_memory() {
    let m = linear(LinearParams { dim: 1, c: 0.0, ..Default::default() }).unwrap();
    let s = constant(&[2.0]);
    assert_eq!(m.eval_drift(&m.view(&s).unwrap()).unwrap(), vec![-2.0]);
}

#[test]
fn linear_drift_on_constant_segment() {
    let p = LinearParams { dim: 1, a: 1.3, c: 0.7, kappa: 2.5, ..Default::default() };
    let m = linear(p).unwrap();
    let u = 1.7;
    let b = m.eval_drift(&m.view(&constant(&[u])).unwrap()).unwrap();
    let oracle = -p.a * u + p.c * u / p.kappa;
    assert!((b[0] - oracle).abs() < 1e-13);
}

#[test]
fn hamiltonian_position_drift_is_lambda_y() {
    let p = HamiltonianParams { n: 2, lambda: 2.0, ..Default::default() };
    let m = hamiltonian(p).unwrap();
    let s = constant(&[0.3, -0.4, 1.0, -0.25]);
    let mut out = vec![0.0; 4];
    m.full_drift_into(&m.view(&s).unwrap(), &mut out).unwrap();
    assert_eq!(&out[..2], &[2.0, -0.5]);
    assert_eq!(m.noise_dim(), 2);
    assert_eq!(m.noise_offset(), 2);
}

#[test]
fn constant_diffusion_ignores_segment() {
    let m = linear(LinearParams { sigma0: 0.8, ..Default::default() }).unwrap();
    for v in [[0.0, 0.0], [5.0, -3.0]] {
        let s = m.eval_diffusion(&m.view(&constant(&v)).unwrap()).unwrap();
        assert_eq!(s.as_scalar(), Some(0.8));
    }
}

#[test]
fn multiplicative_diffusion_stays_in_band() {
    let p = LinearParams::multiplicative();
    let m = linear(p).unwrap();
    for x in [-50.0, -1.0, 0.0, 0.3, 40.0] {
        let s = m.eval_diffusion(&m.view(&constant(&[x, 1.0])).unwrap()).unwrap();
        let (hi, lo) = s.singular_range();
        assert!(hi <= p.sigma0 + p.eps && lo >= p.sigma0 - p.eps);
    }
}

#[test]
fn neutral_term_on_constant_segment() {
    let p = NeutralParams { g: 0.3, ..Default::default() };
    let m = neutral(p).unwrap();
    let g = m.eval_neutral(&m.view(&constant(&[2.0])).unwrap()).unwrap();
    assert!((g[0] - 0.6).abs() < 1e-13);
}

#[test]
fn neutral_only_on_neutral_kind() {
    let m = linear(LinearParams::default()).unwrap();
    let s = constant(&[1.0, 1.0]);
    assert!(matches!(m.eval_neutral(&m.view(&s).unwrap()), Err(crate::SfdeError::Usage(_))));
}

#[test]
fn delay_neutral_lipschitz() {
    let r = 0.5;
    let (g, tau) = (0.4, 1.2);
    let mut def = neutral_def("delay", NeutralParams { rate: r, ..Default::default() });
    def.neutral = Some(Expr::scale(g, Expr::delay(tau)));
    def.constants.delta = None;
    def.constants.l = None;
    let m = def.build().unwrap();
    let lip = m.neutral_functional().unwrap().lipschitz();
    assert!((lip - g * (r * tau).exp()).abs() < 1e-14);
    assert_eq!(m.constants().delta, Some(lip));
    assert!(m.derived_constants().iter().any(|n| n == "delta"));
}

#[test]
fn neutral_rejects_delta_at_least_one() {
    let mut def = neutral_def("bad", NeutralParams::default());
    def.constants.delta = Some(1.0);
    assert!(def.build().is_err());
}

#[test]
fn galerkin_single_mode_is_ou() {
    let spec = GalerkinSpec {
        name: "ou".into(),
        rate: 1.0,
        modes: 1,
        eigenvalues: EigenSequence::List(vec![1.0]),
        alpha: 0.5,
        nonlinear: Expr::constant(vec![0.0]),
        diffusion: vec![DiffusionTermDef::scalar(Expr::constant(vec![1.0]))],
        constants: Default::default(),
        ergodic: true,
    };
    let m = galerkin_truncate(&spec).unwrap();
    assert_eq!(m.kind(), ModelKind::Nondegenerate);
    let b = m.eval_drift(&m.view(&constant(&[3.0])).unwrap()).unwrap();
    assert_eq!(b, vec![-3.0]);
    assert_eq!(m.constants().sigma_max, Some(1.0));
}

#[test]
fn galerkin_rejects_bad_spectra() {
    let mut spec = GalerkinSpec {
        name: "g".into(),
        rate: 1.0,
        modes: 3,
        eigenvalues: EigenSequence::List(vec![1.0, 0.0, 2.0]),
        alpha: 0.6,
        nonlinear: Expr::constant(vec![0.0; 3]),
        diffusion: vec![DiffusionTermDef::scalar(Expr::constant(vec![1.0]))],
        constants: Default::default(),
        ergodic: false,
    };
    assert!(galerkin_truncate(&spec).is_err());
    spec.eigenvalues = EigenSequence::Power { scale: 1.0, exponent: 1.0 };
    assert!(galerkin_truncate(&spec).is_err(), "Σ i^-0.6 diverges");
    spec.eigenvalues = EigenSequence::Power { scale: 1.0, exponent: 2.0 };
    assert!(galerkin_truncate(&spec).is_ok());
}

#[test]
fn galerkin_l0_does_not_grow_with_modes() {
    let mut l0 = Vec::new();
    for modes in [2, 4, 8, 16] {
        let mut def = galerkin_def("g", GalerkinParams { modes, ..Default::default() });
        def.constants = Default::default();
        l0.push(def.build().unwrap().constants().l0.unwrap());
    }
    assert!(l0.windows(2).all(|w| w[0] == w[1]), "{l0:?}");
}

#[test]
fn shipped_models_build_and_validate() {
    for (name, def) in shipped() {
        let m = def.build().unwrap();
        let mut sampler = RandomPairs::for_model(&m, 11);
        let rep = validate_assumptions(&m, &mut sampler, 400).unwrap();
        assert!(rep.pass, "{name}: {rep:#?}");
    }
}

#[test]
fn injected_neutral_violation_is_found() {
    let m = neutral_injected_def(1.5).build().unwrap();
    let mut sampler = RandomPairs::for_model(&m, 3);
    let rep = validate_assumptions(&m, &mut sampler, 200).unwrap();
    let a1 = rep.condition("A1").unwrap();
    assert!(!a1.pass);
    assert!(a1.max_ratio > 0.5);
    let w = a1.witness.as_ref().unwrap();
    let (xi, eta) = sampler.sample(w.trial).unwrap();
    let gx = m.eval_neutral(&m.view(&xi).unwrap()).unwrap();
    let gy = m.eval_neutral(&m.view(&eta).unwrap()).unwrap();
    let d = xi.sub(&eta).unwrap().weighted_norm(m.rate());
    assert!(((gx[0] - gy[0]).abs() / d - w.ratio).abs() < 1e-12);
}

struct Same;

impl PairSampler for Same {
    fn sample(&mut self, _: usize) -> crate::Result<(Segment, Segment)> {
        let s = constant(&[1.0, 2.0]);
        Ok((s.clone(), s))
    }
}

#[test]
fn identical_pairs_are_skipped() {
    let m = linear(LinearParams::default()).unwrap();
    let rep = validate_assumptions(&m, &mut Same, 5).unwrap();
    assert_eq!(rep.skipped_pairs, 5);
    assert_eq!(rep.condition("H1").unwrap().evaluated, 0);
    assert!(rep.pass);
}

#[test]
fn json_round_trip_of_shipped_defs() {
    for (_, def) in shipped() {
        let text = serde_json::to_string_pretty(&def).unwrap();
        assert_eq!(ModelDef::from_json(&text).unwrap(), def);
    }
}
