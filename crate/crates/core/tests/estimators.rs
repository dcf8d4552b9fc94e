use sfde::coupling::{simulate_coupled, CouplingSpec, Measure};
use sfde::estimators::alh::{check_alh, AlhConfig};
use sfde::estimators::decay::{estimate_decay, even_grid, offset_scaling};
use sfde::estimators::girsanov::{check_martingale, check_measure_consistency};
use sfde::estimators::gradient::{check_gradient, GradientConfig};
use sfde::estimators::heat_kernel::{check_heat_kernel, HeatKernelConfig};
use sfde::estimators::irreducibility::{check_irreducibility, IrreducibilityConfig};
use sfde::estimators::moments::{check_moments, envelope_constant, MomentConfig};
use sfde::estimators::strong_order::{check_strong_order, StrongOrderConfig};
use sfde::estimators::{FSpec, McConfig};
use sfde::models::builtin::{self, LinearParams};
use sfde::segment::{Segment, TailMode};
use sfde::solver::{SolverConfig, ZeroNoise};
use sfde::SfdeError;

fn seg(v: &[f64], dt: f64) -> Segment {
    Segment::constant(v, dt, (20.0 / dt) as usize, TailMode::Constant).unwrap()
}

fn mc(n: usize, dt: f64) -> McConfig {
    McConfig { n_paths: n, dt, seed: 11 }
}

fn additive_no_memory() -> sfde::models::ModelSpec {
    builtin::linear(LinearParams { dim: 1, c: 0.0, ..Default::default() }).unwrap()
}

#[test]
fn decay_rate_is_pinned_at_r() {
    let m = additive_no_memory();
    let cs = CouplingSpec::new(&m, Some(3.0), Measure::Q).unwrap();
    let dt = 1e-3;
    let (xi, eta) = (seg(&[1.0], dt), seg(&[0.0], dt));
    let grid = even_grid(6.0, 12, dt);
    let fit = estimate_decay(&cs, &xi, &eta, 2.0, &grid, &mc(20, dt), 0.5).unwrap();
    assert!((fit.rate - 1.0).abs() < 0.05 * 1.0, "{}", fit.rate);
    assert!(fit.report.pass);
    // ‖Z_t‖_r = e^{-rt}‖Z_0‖_r exactly once |Z(t)| decays faster than e^{-rt}.
    for (t, mo) in grid.iter().zip(&fit.moments) {
        assert!((mo / (-2.0 * t).exp() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn pointwise_difference_decays_at_a_plus_lambda() {
    let m = additive_no_memory();
    let cs = CouplingSpec::new(&m, Some(3.0), Measure::Q).unwrap();
    let cfg = SolverConfig { dt: 1e-3, horizon: 2.0, record_stride: 500, ..Default::default() };
    let tr = simulate_coupled(&cs, &seg(&[1.0], 1e-3), &seg(&[0.0], 1e-3), &cfg, &mut ZeroNoise).unwrap();
    for i in 1..tr.len() {
        let z = tr.x_at(i)[0] - tr.y_at(i)[0];
        let rate = -z.ln() / tr.times[i];
        assert!((rate - 4.0).abs() < 0.05 * 4.0, "{rate}");
    }
}

#[test]
fn decay_scales_with_offset_and_rejects_diagonal() {
    let m = builtin::linear(LinearParams { dim: 1, ..Default::default() }).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    let dt = 0.01;
    let (xi, eta) = (seg(&[1.0], dt), seg(&[0.0], dt));
    let (q, rep) = offset_scaling(&cs, &xi, &eta, &[0.5, 1.0, 2.0], 2.0, 3.0, &mc(20, dt), 0.1).unwrap();
    assert!((q - 2.0).abs() < 1e-9, "{q}");
    assert!(rep.pass);
    let err = estimate_decay(&cs, &xi, &xi, 2.0, &even_grid(4.0, 8, dt), &mc(10, dt), 0.5).unwrap_err();
    assert!(matches!(err, SfdeError::DegenerateFit(_)));
}

#[test]
fn alh_special_cases() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    let dt = 0.02;
    let (xi, eta) = (seg(&[0.5, -0.2], dt), seg(&[0.3, 0.1], dt));
    let cfg = AlhConfig { f: FSpec::constant(0.7), mc: mc(200, dt), ..Default::default() };
    let out = check_alh(&cs, &xi, &eta, &cfg).unwrap();
    for r in &out.reports {
        assert!((r.estimate - 0.7).abs() < 1e-12);
        let before = r.metadata.extra["log_pt_f_xi"];
        assert!((before - 0.7).abs() < 1e-12);
        assert!(r.margin >= 0.0);
    }
    let cfg = AlhConfig { mc: mc(2000, dt), ..Default::default() };
    let out = check_alh(&cs, &xi, &xi, &cfg).unwrap();
    assert!(out.pass);
    assert_eq!(out.calibration["c"], 0.0);
    let out = check_alh(&cs, &xi, &eta, &cfg).unwrap();
    assert!(out.pass, "{out:#?}");
    assert!(out.calibration["c"] > 0.0);
    let p = cs.clone().with_measure(Measure::P);
    assert!(check_alh(&p, &xi, &eta, &cfg).is_err());
}

#[test]
fn test_functions_must_be_bounded_and_local() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    let xi = seg(&[0.5, 0.5], 0.02);
    let unbounded = FSpec { g: sfde::models::Expr::slice(0, 1, sfde::models::Expr::point()), lipschitz: None };
    let cfg = AlhConfig { f: unbounded, mc: mc(10, 0.02), ..Default::default() };
    assert!(matches!(check_alh(&cs, &xi, &xi, &cfg), Err(SfdeError::Usage(_))));
    let under = FSpec { lipschitz: Some(0.5), ..FSpec::default() };
    let cfg = AlhConfig { f: under, mc: mc(10, 0.02), ..Default::default() };
    assert!(matches!(check_alh(&cs, &xi, &xi, &cfg), Err(SfdeError::Usage(_))));
}

#[test]
fn gradient_checks() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    let dt = 0.02;
    let xi = seg(&[0.5, -0.5], dt);
    let cfg = GradientConfig {
        f: FSpec::constant(0.3),
        directions: 2,
        n_cal: 50,
        mc: mc(50, dt),
        ..Default::default()
    };
    let out = check_gradient(&cs, &xi, &cfg).unwrap();
    assert!(out.pass);
    assert!(out.reports.iter().all(|r| r.estimate == 0.0));

    // At a short horizon the quotients are resolved and consistent in ε.
    let cfg = GradientConfig { t: Some(0.5), directions: 3, n_cal: 200, mc: mc(2000, dt), ..Default::default() };
    let out = check_gradient(&cs, &xi, &cfg).unwrap();
    assert!(out.pass, "{out:#?}");
    for d in 0..3 {
        let q: Vec<f64> = out.reports[3 * d..3 * d + 3].iter().map(|r| r.estimate).collect();
        let se = out.reports[3 * d + 2].stderr;
        assert!((q[1] - q[2]).abs() <= 0.1 * q[2] + 3.0 * se, "{q:?}");
    }
}

#[test]
fn irreducibility_cases() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    let dt = 0.02;
    let (xi, eta) = (seg(&[1.0, 0.0], dt), seg(&[0.0, 0.5], dt));
    let whole = IrreducibilityConfig { radius: 1e9, n_cal: 50, mc: mc(100, dt), ..Default::default() };
    let out = check_irreducibility(&cs, &xi, &eta, &whole).unwrap();
    for r in &out.reports {
        assert_eq!(r.estimate, 1.0);
        assert!(r.bound >= 1.0);
    }
    let same = IrreducibilityConfig { n_cal: 50, mc: mc(1000, dt), ..Default::default() };
    assert!(check_irreducibility(&cs, &xi, &xi, &same).unwrap().pass);
    let ball = IrreducibilityConfig {
        t_grid: Some(vec![4.0, 8.0]),
        n_cal: 500,
        mc: mc(4000, dt),
        ..Default::default()
    };
    let out = check_irreducibility(&cs, &xi, &eta, &ball).unwrap();
    assert!(out.pass, "{out:#?}");
    assert!(out.reports.iter().all(|r| !r.inconclusive));
}

#[test]
fn heat_kernel_cases() {
    let m = builtin::linear(LinearParams { dim: 1, ..Default::default() }).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    let dt = 0.02;
    let xi = seg(&[0.8], dt);
    let cfg = HeatKernelConfig { f: FSpec::constant(0.4), samples: 200, n_cal: 50, mc: mc(100, dt), ..Default::default() };
    let out = check_heat_kernel(&cs, &xi, &cfg).unwrap();
    let r = &out.reports[0];
    assert!((r.estimate - 0.4).abs() < 1e-12 && r.bound >= 0.4 - 1e-12);
    let zero = HeatKernelConfig { phi_zero: true, samples: 300, mc: mc(500, dt), ..Default::default() };
    let out = check_heat_kernel(&cs, &xi, &zero).unwrap();
    let r = &out.reports[0];
    assert!((r.bound - r.metadata.extra["mu_f"].ln()).abs() < 1e-12);
    let full = HeatKernelConfig { samples: 1000, n_cal: 300, mc: mc(2000, dt), ..Default::default() };
    let out = check_heat_kernel(&cs, &xi, &full).unwrap();
    assert!(out.pass, "{out:#?}");
    assert!(out.notes.iter().any(|n| n.contains("invariant measure")));
    let bad = HeatKernelConfig { long_run: Some(10.0), ..Default::default() };
    assert!(matches!(check_heat_kernel(&cs, &xi, &bad), Err(SfdeError::Config(_))));
    let z = builtin::zero_def(1, 1.0).build().unwrap();
    let zc = CouplingSpec::uncoupled(&z, Measure::Q);
    assert!(check_heat_kernel(&zc, &xi, &HeatKernelConfig::default()).is_err());
}

#[test]
fn envelope_bisection() {
    let ts = [0.0, 1.0, 2.0];
    let ys = [1.0, 3.0, 10.0];
    let c = envelope_constant(&ts, &ys, 2.0);
    assert!(ts.iter().zip(&ys).all(|(t, y)| c * (c * t).exp() * 2.0 >= *y));
    let c2 = c * (1.0 - 1e-9);
    assert!(ts.iter().zip(&ys).any(|(t, y)| c2 * (c2 * t).exp() * 2.0 < *y));
}

#[test]
fn moments_of_linear_model() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    let cfg = MomentConfig { mc: mc(200, 0.02), ..Default::default() };
    let out = check_moments(&m, &seg(&[1.0, 1.0], 0.02), &cfg).unwrap();
    assert!(out.pass, "{out:#?}");
}

#[test]
fn strong_order_additive_quick() {
    let m = builtin::linear(LinearParams { dim: 1, ..Default::default() }).unwrap();
    let cfg = StrongOrderConfig { n_paths: 100, band: (0.8, 1.2), ..Default::default() };
    let out = check_strong_order(&m, &seg(&[1.0], 1.0 / 256.0), &cfg).unwrap();
    assert!(out.pass, "{out:#?}");
}

#[test]
fn girsanov_quick() {
    let m = builtin::linear(LinearParams::multiplicative()).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    let dt = 0.02;
    let (xi, eta) = (seg(&[0.5, 0.0], dt), seg(&[0.0, 0.2], dt));
    let out = check_martingale(&cs, &xi, &eta, &[1.0, 2.0], &mc(5000, dt)).unwrap();
    assert!(out.pass, "{out:#?}");
    let out = check_measure_consistency(&cs, &xi, &eta, &FSpec::default(), 2.0, &mc(5000, dt)).unwrap();
    assert!(out.pass, "{out:#?}");
}

#[test]
fn estimators_are_deterministic() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    let (xi, eta) = (seg(&[0.5, 0.0], 0.02), seg(&[0.0, 0.2], 0.02));
    let cfg = AlhConfig { mc: mc(300, 0.02), ..Default::default() };
    let a = serde_json::to_string(&check_alh(&cs, &xi, &eta, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&check_alh(&cs, &xi, &eta, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}
