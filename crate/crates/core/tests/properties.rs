use std::path::Path;

use proptest::prelude::*;

use sfde::cli::{resolve, ExperimentConfig};
use sfde::coupling::{CouplingSpec, CoupledPath, Measure};
use sfde::models::builtin::{self, HamiltonianParams};
use sfde::models::validate::RandomPairs;
use sfde::models::{DiffusionValue, PairSampler};
use sfde::rng::domain;
use sfde::segment::{FadingIntegralState, Identity, NormTracker, Segment, TailMode};
use sfde::solver::{simulate_path, GaussianNoise, SolverConfig};

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn segment() -> impl Strategy<Value = Segment> {
    segment_in(1..4)
}

fn segment_in(dims: std::ops::Range<usize>) -> impl Strategy<Value = Segment> {
    (dims, prop::sample::select(vec![0.01, 0.05, 0.1]), 1usize..150, any::<bool>()).prop_flat_map(
        |(dim, dt, steps, zero)| {
            prop::collection::vec(-10.0f64..10.0, dim * (steps + 1)).prop_map(move |v| {
                let tail = if zero { TailMode::Zero } else { TailMode::Constant };
                Segment::new(dim, dt, v, tail).unwrap()
            })
        },
    )
}

fn pair() -> impl Strategy<Value = (Segment, Segment)> {
    segment().prop_flat_map(|a| {
        let (dim, dt, steps, tail) = (a.dim(), a.dt(), a.steps(), a.tail_mode());
        prop::collection::vec(-10.0f64..10.0, dim * (steps + 1))
            .prop_map(move |v| (a.clone(), Segment::new(dim, dt, v, tail).unwrap()))
    })
}

proptest! {
    #[test]
    fn norm_dominates_every_sample(seg in segment(), r in 0.05f64..3.0) {
        let n = seg.weighted_norm(r);
        for k in 0..=seg.steps() {
            let w = (-r * k as f64 * seg.dt()).exp() * euclid(seg.row(k));
            prop_assert!(w <= n * (1.0 + 1e-14), "{w} > {n}");
        }
    }

    #[test]
    fn norm_is_homogeneous(seg in segment(), r in 0.05f64..3.0, c in -50.0f64..50.0) {
        let lhs = seg.scaled(c).weighted_norm(r);
        let rhs = c.abs() * seg.weighted_norm(r);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn triangle_inequality((a, b) in pair(), r in 0.05f64..3.0) {
        let lhs = a.add(&b).unwrap().weighted_norm(r);
        prop_assert!(lhs <= (a.weighted_norm(r) + b.weighted_norm(r)) * (1.0 + 1e-14));
    }

    #[test]
    fn tracker_equals_brute_force(
        init in 0.0f64..5.0,
        r in 0.05f64..2.0,
        dt in 0.001f64..0.1,
        xs in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 2), 1..300),
    ) {
        let mut tr = NormTracker::new(r, init);
        for (k, x) in xs.iter().enumerate() {
            let t = (k + 1) as f64 * dt;
            let (next, got) = tr.advance(t, x).unwrap();
            tr = next;
            let mut want = init * (-r * t).exp();
            for (j, y) in xs[..=k].iter().enumerate() {
                want = want.max((-r * (t - (j + 1) as f64 * dt)).exp() * euclid(y));
            }
            prop_assert!((got - want).abs() <= 1e-12 * want.max(f64::MIN_POSITIVE), "{got} vs {want}");
        }
    }

    /// The recursion treats the integrand as constant on each step, so its
    /// error against the exact integral is at most `sup|x'|·dt/κ`.
    #[test]
    fn fading_recursion_tracks_the_exact_integral(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        omega in 0.1f64..5.0,
        kappa in 0.6f64..6.0,
        dt in prop::sample::select(vec![1e-3, 1e-2, 5e-2]),
        n in 10usize..2000,
    ) {
        let rate = 0.5;
        let mut st = FadingIntegralState::new(kappa, rate, Identity(1), vec![a / kappa]).unwrap();
        for k in 1..=n {
            let s = k as f64 * dt;
            st.step_mut(&[a + b * (omega * s).sin()], dt);
        }
        let t = n as f64 * dt;
        let e = (-kappa * t).exp();
        let exact = a / kappa
            + b * (kappa * (omega * t).sin() - omega * (omega * t).cos() + omega * e) / (kappa * kappa + omega * omega);
        let err = (st.value()[0] - exact).abs();
        prop_assert!(err <= b.abs() * omega * dt / kappa + 1e-13, "{err}");
    }

    #[test]
    fn diffusion_stays_within_declared_bounds(seed in any::<u64>(), trial in 0usize..50) {
        for (name, def) in builtin::shipped() {
            let m = def.build().unwrap();
            let c = m.constants().clone();
            let (x, _) = RandomPairs::for_model(&m, seed).sample(trial).unwrap();
            let mut d = DiffusionValue::new(m.noise_dim());
            m.diffusion_into(&m.view(&x).unwrap(), &mut d).unwrap();
            let mat = d.to_matrix();
            let sv = mat.singular_values();
            let hi = sv.max();
            let lo = sv.min();
            if let Some(s) = c.sigma_max {
                prop_assert!(hi <= s * (1.0 + 1e-12), "{name}: {hi} > {s}");
            }
            if let Some(s) = c.sigma_inv_max {
                prop_assert!(1.0 / lo <= s * (1.0 + 1e-12), "{name}: {} > {s}", 1.0 / lo);
            }
        }
    }

    #[test]
    fn hamiltonian_position_drift_is_lambda_times_velocity(seg in segment_in(2..3), noise in -1.0f64..1.0) {
        let m = builtin::hamiltonian(HamiltonianParams::default()).unwrap();
        prop_assert_eq!(seg.dim(), m.dim());
        let mut out = vec![0.0; m.dim()];
        m.full_drift_into(&m.view(&seg).unwrap(), &mut out).unwrap();
        let off = m.noise_offset();
        for i in 0..off {
            prop_assert_eq!(out[i], m.position_speed() * seg.current()[off + i]);
        }
        // Changing the past leaves the position drift alone.
        let mut v = seg.values().to_vec();
        for x in v[m.dim()..].iter_mut() {
            *x += noise;
        }
        let moved = Segment::new(seg.dim(), seg.dt(), v, seg.tail_mode()).unwrap();
        let mut out2 = vec![0.0; m.dim()];
        m.full_drift_into(&m.view(&moved).unwrap(), &mut out2).unwrap();
        prop_assert_eq!(&out[..off], &out2[..off]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn diagonal_start_stays_on_the_diagonal(
        seed in any::<u64>(),
        which in 0usize..4,
        v in prop::collection::vec(-2.0f64..2.0, 2),
        q in any::<bool>(),
    ) {
        let name = ["linear", "linear_mult", "neutral", "hamiltonian"][which];
        let def = builtin::shipped().into_iter().find(|(n, _)| *n == name).unwrap().1;
        let m = def.build().unwrap();
        let dt = 0.01;
        let xi = Segment::constant(&v[..m.dim()], dt, 2000, TailMode::Constant).unwrap();
        let measure = if q { Measure::Q } else { Measure::P };
        let cs = CouplingSpec::new(&m, None, measure).unwrap();
        let mut path = CoupledPath::new(&cs, &xi, &xi, dt).unwrap();
        let mut noise = GaussianNoise::new(seed, domain::COUPLED, 0, dt);
        for _ in 0..200 {
            path.step(&mut noise).unwrap();
            prop_assert_eq!(path.x().current(), path.y().current());
            prop_assert_eq!(path.log_r(), 0.0);
        }
    }

    #[test]
    fn same_seed_same_path(seed in any::<u64>(), x0 in -2.0f64..2.0) {
        let m = builtin::linear(builtin::LinearParams::multiplicative()).unwrap();
        let xi = Segment::constant(&[x0, -x0], 0.01, 2000, TailMode::Constant).unwrap();
        let cfg = SolverConfig { dt: 0.01, horizon: 2.0, seed, ..Default::default() };
        let run = || simulate_path(&m, &xi, &cfg, &mut GaussianNoise::new(seed, domain::SIMULATE, 0, 0.01)).unwrap();
        let (a, b) = (run(), run());
        prop_assert_eq!(a.states, b.states);
        prop_assert_eq!(a.norms, b.norms);
    }

    #[test]
    fn config_hash_separates_distinct_path_counts(n1 in 2usize..10_000, n2 in 2usize..10_000, s1 in 1u64..100, s2 in 1u64..100) {
        let cfg = |n: usize, s: u64| {
            ExperimentConfig::from_json(&format!(
                r#"{{"model": "linear", "xi": {{"constant": [1, 0]}}, "eta": {{"constant": [0, 0]}},
                    "seed": {s}, "checks": [{{"kind": "alh", "mc": {{"n_paths": {n}}}}}]}}"#
            ))
            .unwrap()
        };
        let h1 = resolve(cfg(n1, s1), Path::new(".")).unwrap().hash;
        let h2 = resolve(cfg(n2, s2), Path::new(".")).unwrap().hash;
        prop_assert_eq!(h1 == h2, n1 == n2 && s1 == s2);
    }
}
