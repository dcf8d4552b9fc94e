use super::*;
use crate::models::builtin::{self, HamiltonianParams, LinearParams};
use crate::segment::TailMode;
use crate::solver::{GaussianNoise, ZeroNoise};

fn seg(v: &[f64], dt: f64) -> Segment {
    Segment::constant(v, dt, (20.0 / dt) as usize, TailMode::Constant).unwrap()
}

/// `Z' = -(a+λ)Z + c·I`, `I' = Z - κI`, RK4 with a fine step.
fn z_oracle(a: f64, lam: f64, c: f64, kappa: f64, z0: f64, t_end: f64) -> (f64, f64) {
    let f = |z: f64, i: f64| (-(a + lam) * z + c * i, z - kappa * i);
    let (mut z, mut i) = (z0, z0 / kappa);
    let h = 1e-4;
    let n = (t_end / h).round() as usize;
    let mut zz_int = 0.0;
    for _ in 0..n {
        let (k1z, k1i) = f(z, i);
        let (k2z, k2i) = f(z + 0.5 * h * k1z, i + 0.5 * h * k1i);
        let (k3z, k3i) = f(z + 0.5 * h * k2z, i + 0.5 * h * k2i);
        let (k4z, k4i) = f(z + h * k3z, i + h * k3i);
        let zn = z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        zz_int += 0.5 * h * (z * z + zn * zn);
        z = zn;
        i += h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
    }
    (z, zz_int)
}

#[test]
fn diagonal_start_stays_diagonal() {
    for measure in [Measure::Q, Measure::P] {
        let m = builtin::linear(LinearParams::multiplicative()).unwrap();
        let cs = CouplingSpec::new(&m, None, measure).unwrap();
        let cfg = SolverConfig { horizon: 3.0, ..Default::default() };
        let xi = seg(&[0.4, -1.0], cfg.dt);
        let mut n = GaussianNoise::new(1, 2, 0, cfg.dt);
        let tr = simulate_coupled(&cs, &xi, &xi, &cfg, &mut n).unwrap();
        assert_eq!(tr.x, tr.y);
        assert!(tr.log_r.iter().all(|v| *v == 0.0));
        assert!(tr.z_norm.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn uncoupled_has_unit_density() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    let cs = CouplingSpec::uncoupled(&m, Measure::Q);
    let cfg = SolverConfig { horizon: 2.0, ..Default::default() };
    let mut n = GaussianNoise::new(1, 2, 0, cfg.dt);
    let tr = simulate_coupled(&cs, &seg(&[1.0, 0.0], cfg.dt), &seg(&[0.0, 1.0], cfg.dt), &cfg, &mut n)
        .unwrap();
    assert!(tr.h.iter().all(|v| *v == 0.0));
    assert!(tr.log_r.iter().all(|v| *v == 0.0));
    // Additive noise cancels in the difference: Z follows the uncoupled ODE.
    let last = tr.len() - 1;
    let z: f64 = tr.x_at(last)[0] - tr.y_at(last)[0];
    let (zo, _) = z_oracle(1.0, 0.0, 0.5, 2.0, 1.0, 2.0);
    assert!((z - zo).abs() < 1e-2 * zo.abs(), "{z} vs {zo}");
}

#[test]
fn lambda_must_exceed_rate() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    assert!(CouplingSpec::new(&m, Some(1.0), Measure::Q).is_err());
    assert!(CouplingSpec::new(&m, Some(1.01), Measure::Q).is_ok());
    assert_eq!(CouplingSpec::new(&m, None, Measure::Q).unwrap().lambda(), 6.0);
}

#[test]
fn hamiltonian_lambda_is_the_model_lambda() {
    let m = builtin::hamiltonian(HamiltonianParams::default()).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    assert_eq!(cs.lambda(), 1.5);
    assert!(cs.warnings().is_empty(), "{:?}", cs.warnings());
    assert!(CouplingSpec::new(&m, Some(3.0), Measure::Q).is_err());
    let slow = builtin::hamiltonian(HamiltonianParams { lambda: 1.0, ..Default::default() }).unwrap();
    assert_eq!(CouplingSpec::new(&slow, None, Measure::Q).unwrap().warnings().len(), 1);
}

#[test]
fn drift_examples() {
    let m = builtin::linear(LinearParams { sigma0: 2.0, c: 0.0, ..Default::default() }).unwrap();
    let cs = CouplingSpec::new(&m, Some(3.0), Measure::Q).unwrap();
    let (x, y) = (seg(&[1.0, 2.0], 0.01), seg(&[0.5, -1.0], 0.01));
    let d = coupled_drift(&cs, &x, &y).unwrap();
    assert_eq!(d.h, vec![0.75, 4.5]);
    assert_eq!(d.drift_x, vec![-1.0 - 1.5, -2.0 - 9.0]);
    assert_eq!(d.drift_y, vec![-0.5, 1.0]);
    let dp = coupled_drift(&cs.clone().with_measure(Measure::P), &x, &y).unwrap();
    assert_eq!(dp.drift_x, vec![-1.0, -2.0]);
    assert_eq!(dp.drift_y, vec![-0.5 + 1.5, 1.0 + 9.0]);
    let same = coupled_drift(&cs, &x, &x).unwrap();
    assert_eq!(same.h, vec![0.0, 0.0]);
    assert_eq!(same.drift_x, same.drift_y);

    let hm = builtin::hamiltonian(HamiltonianParams { sigma0: 0.5, ..Default::default() }).unwrap();
    let hc = CouplingSpec::new(&hm, None, Measure::Q).unwrap();
    let d = coupled_drift(&hc, &seg(&[1.0, 0.2], 0.01), &seg(&[0.4, -0.3], 0.01)).unwrap();
    // σ⁻¹(λΔx + 2λβΔy) = 2·(1.5·0.6 + 3·0.5)
    assert!((d.h[0] - 4.8).abs() < 1e-14);
    assert_eq!(d.drift_x[0], 1.5 * 0.2);
}

#[test]
fn difference_follows_ode_oracle() {
    let (a, c, kappa) = (1.0, 0.5, 2.0);
    let m = builtin::linear(LinearParams { dim: 1, a, c, kappa, ..Default::default() }).unwrap();
    let lam = 3.0;
    let cs = CouplingSpec::new(&m, Some(lam), Measure::Q).unwrap();
    let cfg = SolverConfig { dt: 1e-3, horizon: 2.0, record_stride: 100, ..Default::default() };
    let mut n = GaussianNoise::new(3, 2, 0, cfg.dt);
    let xi = seg(&[1.5], cfg.dt);
    let eta = seg(&[0.5], cfg.dt);
    let tr = simulate_coupled(&cs, &xi, &eta, &cfg, &mut n).unwrap();
    let last = tr.len() - 1;
    let z = tr.x_at(last)[0] - tr.y_at(last)[0];
    let (zo, int) = z_oracle(a, lam, c, kappa, 1.0, 2.0);
    assert!((z - zo).abs() < 1e-2 * zo.abs(), "{z} vs {zo}");
    let ent = entropy_along_path(&tr).unwrap();
    let want = 0.5 * lam * lam * int;
    assert!((ent - want).abs() < 2e-3 * want, "{ent} vs {want}");

    let eta2 = seg(&[-0.5], cfg.dt);
    let mut n = GaussianNoise::new(3, 2, 0, cfg.dt);
    let tr2 = simulate_coupled(&cs, &xi, &eta2, &cfg, &mut n).unwrap();
    let ratio = entropy_along_path(&tr2).unwrap() / ent;
    assert!((ratio - 4.0).abs() < 1e-9);
}

#[test]
fn entropy_needs_q() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    let cs = CouplingSpec::new(&m, None, Measure::P).unwrap();
    let cfg = SolverConfig { horizon: 0.1, ..Default::default() };
    let tr = simulate_coupled(&cs, &seg(&[1.0, 0.0], 0.01), &seg(&[0.0, 0.0], 0.01), &cfg, &mut ZeroNoise)
        .unwrap();
    assert!(entropy_along_path(&tr).is_err());
}

/// Feeding the P run with `dW = dW̃ - h dt` reproduces the Q run step by step.
#[test]
fn measures_agree_pathwise() {
    let m = builtin::linear(LinearParams::multiplicative()).unwrap();
    let q = CouplingSpec::new(&m, None, Measure::Q).unwrap();
    let p = q.clone().with_measure(Measure::P);
    let dt = 0.01;
    let (xi, eta) = (seg(&[1.0, -0.5], dt), seg(&[-0.2, 0.3], dt));
    let mut pq = CoupledPath::new(&q, &xi, &eta, dt).unwrap();
    let mut pp = CoupledPath::new(&p, &xi, &eta, dt).unwrap();
    let mut noise = GaussianNoise::new(8, 2, 0, dt);
    for _ in 0..200 {
        let mut dwt = [0.0; 2];
        noise.fill(&mut dwt).unwrap();
        let h = pp.h().to_vec();
        let mut rec = crate::solver::RecordedNoise::new(dwt.to_vec());
        pq.step(&mut rec).unwrap();
        let hq = pq.h().to_vec();
        let dw: Vec<f64> = dwt.iter().zip(&hq).map(|(w, h)| w - h * dt).collect();
        let _ = h;
        let mut rec = crate::solver::RecordedNoise::new(dw);
        pp.step(&mut rec).unwrap();
        for i in 0..2 {
            assert!((pq.x().current()[i] - pp.x().current()[i]).abs() < 1e-12);
            assert!((pq.y().current()[i] - pp.y().current()[i]).abs() < 1e-12);
        }
        assert!((pq.log_r() - pp.log_r()).abs() < 1e-9);
    }
}
