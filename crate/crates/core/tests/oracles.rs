//! Library results against independent computations: dense diagonalization,
//! a different quadrature, and explicit transfer-matrix products.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector2;
use num_complex::Complex64;
use odd_walk::transfer::lyapunov_profile;
use odd_walk::winding::sigma_squared;
use odd_walk::{
    count_between, draw_profile, find_quasienergy, half_pi_mode_exists, transfer_at, AngleProfile, BoundaryKind,
    DisorderSpec, WalkOperator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_profile(rng: &mut ChaCha8Rng, max_n: usize) -> AngleProfile {
    let n = rng.random_range(1..=max_n);
    let mean = rng.random_range(-0.6..0.6);
    let width = rng.random_range(0.0..0.9);
    let bulk: Vec<f64> = (0..n).map(|_| mean + rng.random_range(-width..=width)).collect();
    let b = BoundaryKind::ALL[rng.random_range(0..4)];
    AngleProfile::from_bulk(&bulk, b).unwrap()
}

/// `σ²` via `u = ln tan ϑ = −artanh(sin θ)`, `dθ = sech u du`, midpoint rule in `u`.
fn sigma_squared_in_u(theta_mean: f64, delta: f64) -> f64 {
    let u = |theta: f64| -(theta.sin()).atanh();
    let (a, b) = (u(theta_mean + delta), u(theta_mean - delta));
    let panels = 400_000;
    let h = (b - a) / panels as f64;
    let integral: f64 = (0..panels)
        .map(|i| {
            let x = a + (i as f64 + 0.5) * h;
            4.0 * x * x / x.cosh()
        })
        .sum::<f64>()
        * h;
    2.0 * integral / (2.0 * delta)
}

#[test]
fn sigma_squared_matches_second_quadrature() {
    for &(m, d) in &[(0.0, 0.2), (0.0, 0.4), (0.0, 0.8), (0.0, 1.0), (0.15, 0.5), (-0.3, 0.7)] {
        let a = sigma_squared(m, d);
        let b = sigma_squared_in_u(m, d);
        assert!((a / b - 1.0).abs() < 1e-8, "θ̃={m} Δ={d}: {a} vs {b}");
    }
}

#[test]
fn sigma_squared_small_box_limit() {
    // ln tan² ϑ ≈ −2θ, so σ² → 8Δ²/3 as Δ → 0.
    let d: f64 = 1e-3;
    assert!((sigma_squared(0.0, d) / (8.0 * d * d / 3.0) - 1.0).abs() < 1e-5);
}

#[test]
fn bisected_quasienergies_match_dense_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..60 {
        let p = random_profile(&mut rng, 24);
        let dense: Vec<f64> = WalkOperator::new(p.clone()).eigenphases().into_iter().filter(|&w| w > 1e-9).collect();
        for (k, &w) in dense.iter().enumerate() {
            let found = find_quasienergy(&p, k + 1).unwrap();
            assert!((found - w).abs() < 1e-9, "{}: k={} {found} vs {w}", p.boundary(), k + 1);
        }
        assert!(find_quasienergy(&p, dense.len() + 1).is_err());
    }
}

#[test]
fn window_counts_match_dense_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut checked = 0;
    while checked < 300 {
        let p = random_profile(&mut rng, 30);
        let dense = WalkOperator::new(p.clone()).eigenphases();
        let a = rng.random_range(-PI..PI);
        let b = rng.random_range(-PI..PI);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if dense.iter().any(|w| (w - lo).abs() < 1e-7 || (w - hi).abs() < 1e-7) {
            continue;
        }
        let expected = dense.iter().filter(|&&w| w > lo && w <= hi).count() as i64;
        assert_eq!(count_between(&p, lo, hi).unwrap(), expected, "{} ({lo}, {hi}]", p.boundary());
        checked += 1;
    }
}

#[test]
fn half_pi_table_agrees_with_dense_spectrum() {
    for (seed, n) in (0..).zip([6usize, 7, 12, 13, 20, 21]) {
        let spec = DisorderSpec::new(n, 0.3, 1.0, 900 + seed);
        for b in BoundaryKind::ALL {
            for idx in 0..5 {
                let p = draw_profile(&spec, b, idx).unwrap();
                let phases = WalkOperator::new(p).eigenphases();
                let has = |w: f64| phases.iter().any(|v| (v - w).abs() < 1e-8);
                assert_eq!(has(FRAC_PI_2), half_pi_mode_exists(b, n), "{b} N={n}");
                assert_eq!(has(-FRAC_PI_2), half_pi_mode_exists(b, n), "{b} N={n}");
            }
        }
    }
}

#[test]
fn standard_chain_always_has_a_zero_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let n = rng.random_range(1..=40);
        let spec = DisorderSpec::new(n, rng.random_range(-0.5..0.5), rng.random_range(0.0..1.0), rng.random());
        let phases = WalkOperator::new(draw_profile(&spec, BoundaryKind::standard(), 0).unwrap()).eigenphases();
        assert!(phases.iter().any(|w| w.abs() < 1e-9));
    }
}

#[test]
fn lyapunov_matches_complex_transfer_product() {
    let spec = DisorderSpec::new(5000, 0.05, 0.6, 17);
    let p = draw_profile(&spec, BoundaryKind::standard(), 0).unwrap();
    for &w in &[1e-4, 1e-2, 0.5] {
        let mut v = Vector2::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let mut acc = 0.0;
        for &theta in p.bulk() {
            v = transfer_at(theta, w).unwrap().entries * v;
            let r = v.norm();
            acc += r.ln();
            v.unscale_mut(r);
        }
        let reference = acc / p.n_bulk() as f64;
        let got = lyapunov_profile(&p, w).unwrap();
        // Different start vectors only change an O(1/N) transient.
        assert!((got - reference).abs() < 5e-3 * reference.max(1e-2), "ω={w}: {got} vs {reference}");
    }
}
