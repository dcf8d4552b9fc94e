use rayon::prelude::*;

use sfde::models::builtin::{self, LinearParams};
use sfde::rng::domain;
use sfde::segment::{Segment, TailMode};
use sfde::solver::{simulate_path, GaussianNoise, SolverConfig, ZeroNoise};

#[test]
fn ou_variance_matches_the_exact_formula() {
    let (a, s0) = (1.0, 1.0);
    let m = builtin::linear(LinearParams { dim: 1, c: 0.0, a, sigma0: s0, ..Default::default() }).unwrap();
    let dt = 1e-3;
    let xi = Segment::constant(&[0.0], dt, 20_000, TailMode::Constant).unwrap();
    let cfg = SolverConfig { dt, horizon: 1.0, record_stride: 250, ..Default::default() };
    let n = 10_000;
    let finals: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|p| {
            let tr = simulate_path(&m, &xi, &cfg, &mut GaussianNoise::new(3, domain::SIMULATE, p, dt)).unwrap();
            (1..tr.len()).map(|i| tr.state(i)[0]).collect()
        })
        .collect();
    let times = [0.25, 0.5, 0.75, 1.0];
    for (j, t) in times.iter().enumerate() {
        let xs: Vec<f64> = finals.iter().map(|v| v[j]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let c2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let var = c2.iter().sum::<f64>() / (n - 1) as f64;
        let m4 = c2.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let se = ((m4 - var * var) / n as f64).sqrt();
        let exact = s0 * s0 / (2.0 * a) * (1.0 - (-2.0 * a * t).exp());
        assert!((var - exact).abs() <= 3.0 * se, "t={t}: {var} vs {exact} (se {se})");
    }
}

#[test]
fn stopping_radius_below_the_initial_norm_is_rejected() {
    let m = builtin::linear(LinearParams::default()).unwrap();
    let xi = Segment::constant(&[3.0, 4.0], 0.01, 2000, TailMode::Constant).unwrap();
    let cfg = SolverConfig { r_stop: 4.0, ..Default::default() };
    assert!(simulate_path(&m, &xi, &cfg, &mut ZeroNoise).is_err());
}

#[test]
fn explosion_guard_stops_instead_of_failing() {
    let mut def = builtin::linear_def("grow", LinearParams { dim: 1, a: -3.0, c: 0.0, sigma0: 0.0, ..Default::default() });
    def.constants = Default::default();
    let m = def.build().unwrap();
    let xi = Segment::constant(&[1.0], 0.01, 2000, TailMode::Constant).unwrap();
    let cfg = SolverConfig { r_stop: 50.0, horizon: 10.0, ..Default::default() };
    let tr = simulate_path(&m, &xi, &cfg, &mut ZeroNoise).unwrap();
    assert!(tr.stopped);
    let t = tr.stop_time.unwrap();
    // |X| = (1+3dt)^k first exceeds 50 at k = ceil(ln 50 / ln 1.03).
    let k = (50f64.ln() / 1.03f64.ln()).ceil();
    assert!((t - k * 0.01).abs() < 1e-9, "{t}");
    assert!(*tr.norms.last().unwrap() >= 50.0);
}
