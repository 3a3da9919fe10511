use std::f64::consts::PI;

use num_complex::Complex64;
use odd_walk::{
    build_zero_mode, closure_check, count_between, draw_profile, evolve_phase, transfer_at, AngleProfile, BoundaryKind,
    DisorderSpec, WalkOperator, WalkState,
};
use proptest::prelude::*;

fn boundary() -> impl Strategy<Value = BoundaryKind> {
    (0usize..4).prop_map(|i| BoundaryKind::ALL[i])
}

fn profile(max_n: usize) -> impl Strategy<Value = AngleProfile> {
    (boundary(), prop::collection::vec(-1.5f64..1.5, 1..=max_n))
        .prop_map(|(b, bulk)| AngleProfile::from_bulk(&bulk, b).unwrap())
}

fn standard_profile(max_n: usize) -> impl Strategy<Value = AngleProfile> {
    (1..=max_n, -0.4f64..0.4, 0.0f64..1.1, any::<u64>()).prop_map(|(n, mean, delta, seed)| {
        draw_profile(&DisorderSpec::new(n, mean, delta, seed), BoundaryKind::standard(), 0).unwrap()
    })
}

fn random_state(dim: usize, seed: u64) -> WalkState {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut amps: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    amps[0] = Complex64::new(0.0, 0.0);
    amps[dim - 1] = Complex64::new(0.0, 0.0);
    let mut s = WalkState::from_amplitudes(amps).unwrap();
    s.normalize();
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn live_block_is_orthogonal(p in profile(30)) {
        prop_assert!(WalkOperator::new(p).unitarity_defect() < 1e-12);
    }

    #[test]
    fn matrix_free_step_agrees_with_dense(p in profile(25), seed in any::<u64>()) {
        let u = WalkOperator::new(p);
        let psi = random_state(u.dim(), seed);
        let a = u.apply(&psi).unwrap();
        let d = u.apply_dense(&psi).unwrap();
        let diff = a.amplitudes().iter().zip(d.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-13);
        prop_assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transfer_matrices_are_unimodular(theta in -1.56f64..1.56, omega in -PI..PI) {
        let det = transfer_at(theta, omega).unwrap().det();
        prop_assert!((det - Complex64::new(1.0, 0.0)).norm() < 1e-11 * (1.0 + 1.0 / theta.cos().powi(2)));
    }

    #[test]
    fn spectrum_is_closed_under_conjugation(p in profile(16)) {
        let phases = WalkOperator::new(p).eigenphases();
        for &w in &phases {
            let mirror = phases
                .iter()
                .map(|&v| {
                    let d = (v + w).rem_euclid(2.0 * PI);
                    d.min(2.0 * PI - d)
                })
                .fold(f64::INFINITY, f64::min);
            prop_assert!(mirror < 1e-10, "no partner for {w}");
        }
    }

    #[test]
    fn counting_covers_the_whole_circle(p in standard_profile(60)) {
        let total = count_between(&p, -PI, PI).unwrap();
        let live = 2 * (p.n_bulk() as i64 + 1);
        // Counting runs over (−π, π]; one state sits at ω = 0 for (R−, R+).
        prop_assert_eq!(total, live);
    }

    #[test]
    fn node_count_is_monotone(p in standard_profile(80), a in -PI..PI, b in -PI..PI) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let count = |w: f64| evolve_phase(&p, w).unwrap().count_index(w);
        prop_assert!(count(lo) <= count(hi));
    }

    #[test]
    fn zero_mode_solves_the_eigenproblem(p in standard_profile(150)) {
        let psi = build_zero_mode(&p).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        prop_assert!(WalkOperator::new(p.clone()).eigenresidual(&psi, 0.0).unwrap() < 1e-10);
        prop_assert!(closure_check(&p, 0.0).unwrap().norm < 1e-10);
    }
}
