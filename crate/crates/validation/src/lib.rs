//! End-to-end acceptance criteria for the `odd-walk` library.
//!
//! Each criterion is a plain function returning an [`Outcome`]; the
//! `acceptance` test target runs them in order and prints one line each.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use odd_walk::adiabatic::{fidelity_ensemble, lambda_for_duration, ProtocolRun, ProtocolSpec};
use odd_walk::disorder::{draw_profile, AngleProfile, BoundaryKind, DisorderSpec};
use odd_walk::ensemble::{
    compare_sources, correlation_curve, fit_power_law, CorrelationSource, FitWindow, ProbabilityConvention,
};
use odd_walk::modes::{check_half_pi_table, half_pi_mode_exists};
use odd_walk::transfer::{basis_transform_check, build_zero_mode, lyapunov, transfer_at};
use odd_walk::walk::{WalkOperator, WalkState};
use odd_walk::winding::{
    count_between, dos_estimate, dos_fit, dyson_density, evolve_phase, find_quasienergy,
    inverse_localization_closed_form, sigma_squared,
};

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dense_residual(profile: &AngleProfile, psi: &WalkState) -> f64 {
    let u = WalkOperator::new(profile.clone()).to_dense().map(|x| Complex64::new(x, 0.0));
    let v = DVector::from_column_slice(psi.amplitudes());
    (u * &v - &v).norm()
}

fn zero_mode_exactness() -> Outcome {
    let deltas = [0.2, 0.4, 1.0];
    let mut worst: f64 = 0.0;
    for idx in 0..100u64 {
        let delta = deltas[(idx % 3) as usize];
        let n = 1 + (idx as usize * 37) % 200;
        let spec = DisorderSpec::new(n, 0.0, delta, 1000 + idx);
        let p = draw_profile(&spec, BoundaryKind::standard(), idx).unwrap();
        let psi = build_zero_mode(&p).unwrap();
        worst = worst.max(dense_residual(&p, &psi));
    }
    outcome(worst < 1e-10, format!("max dense residual {worst:.2e} over 100 profiles (limit 1e-10)"))
}

fn integrated_dos_fit() -> Outcome {
    let delta = 0.8;
    let spec = DisorderSpec::new(30_000, 0.0, delta, 7);
    let p = draw_profile(&spec, BoundaryKind::standard(), 0).unwrap();
    let fit = dos_fit(&p, 1.0, 2.0, 41).unwrap();
    let expected = (sigma_squared(0.0, delta) / 8.0).ln();
    let slope_ok = (fit.slope + 2.0).abs() <= 0.15;
    let icpt_ok = (fit.intercept - expected).abs() <= 0.2;
    outcome(
        slope_ok && icpt_ok,
        format!(
            "N=30000 Δ={delta}: slope {:.3} (want -2 ± 0.15, {}), intercept {:.3} vs ln(σ²/8) = {:.3} (± 0.2, {})",
            fit.slope,
            if slope_ok { "ok" } else { "out" },
            fit.intercept,
            expected,
            if icpt_ok { "ok" } else { "out" }
        ),
    )
}

fn dyson_ratio() -> Outcome {
    let delta = 0.8;
    let spec = DisorderSpec::new(30_000, 0.0, delta, 11);
    let r = std::f64::consts::SQRT_2;
    let grid = [1e-4 / r, 1e-4 * r, 1e-3 / r, 1e-3 * r];
    let est = dos_estimate(&spec, &grid, 64).unwrap();
    let measured = est.rho[0] / est.rho[2];
    let s2 = sigma_squared(0.0, delta);
    let predicted = dyson_density(s2, est.centers[0]) / dyson_density(s2, est.centers[2]);
    let rel = (measured / predicted - 1.0).abs();
    outcome(
        rel <= 0.3,
        format!(
            "ρ(1e-4)/ρ(1e-3) = {measured:.3} vs {predicted:.3} (rel. dev {:.1}%, limit 30%; counts {:?})",
            100.0 * rel,
            est.interval_counts
        ),
    )
}

fn localization_length() -> Outcome {
    let delta = 0.4;
    let omega = 1e-3;
    let spec = DisorderSpec::new(1, 0.0, delta, 5);
    let measured = lyapunov(&spec, omega, 1_000_000).unwrap();
    let predicted = inverse_localization_closed_form(sigma_squared(0.0, delta), omega);
    let rel = (measured / predicted - 1.0).abs();
    outcome(
        rel <= 0.25,
        format!(
            "ω=1e-3 Δ=0.4 chain 1e6: ℓ⁻¹ = {measured:.5} vs {predicted:.5} (rel. dev {:.1}%, limit 25%)",
            100.0 * rel
        ),
    )
}

fn exact_slope(n: usize, delta: f64, realizations: usize, seed: u64) -> f64 {
    let spec = DisorderSpec::new(n, 0.0, delta, seed);
    let c = correlation_curve(&spec, realizations, CorrelationSource::ExactZeroMode, ProbabilityConvention::PerSite)
        .unwrap();
    fit_power_law(&c, FitWindow::default()).unwrap().slope
}

fn large_chain_exponents() -> Outcome {
    let cases = [(2000, 0.4, 2000, -1.53, 0.15), (200, 1.0, 10_000, -1.55, 0.15), (200, 0.2, 10_000, -0.86, 0.12)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &(n, delta, r, want, tol)) in cases.iter().enumerate() {
        let s = exact_slope(n, delta, r, 500 + i as u64);
        let ok = (s - want).abs() <= tol;
        pass &= ok;
        parts.push(format!("N={n} Δ={delta}: {s:.3} vs {want} ± {tol} {}", if ok { "ok" } else { "out" }));
    }
    outcome(pass, parts.join("; "))
}

fn small_chain_exponents() -> Outcome {
    let cases = [(10, -0.45), (20, -0.59), (30, -0.65), (40, -0.77)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &(n, want)) in cases.iter().enumerate() {
        let s = exact_slope(n, 0.4, 1000, 600 + i as u64);
        let ok = (s - want).abs() <= 0.08;
        pass &= ok;
        parts.push(format!("N+2={}: {s:.3} vs {want} {}", n + 2, if ok { "ok" } else { "out" }));
    }
    outcome(pass, parts.join("; "))
}

fn adiabatic_fidelity() -> Outcome {
    let disorder = DisorderSpec::new(18, 0.0, 0.7, 2024);
    let spec = ProtocolSpec::exponential(disorder, 90, 0.0562);
    let rows = fidelity_ensemble(&spec, 50).unwrap();
    let positive: Vec<_> = rows.iter().filter(|r| r.mean_delta > 0.05).collect();
    let good = positive.iter().filter(|r| r.final_overlap > 0.99).count();
    let frac = good as f64 / positive.len().max(1) as f64;
    let ensemble_ok = !positive.is_empty() && frac >= 0.9;

    let negative = rows.iter().find(|r| r.mean_delta < -0.05).expect("a negative-mean realization");
    let mut finals = Vec::new();
    for t in [90, 120, 150, 180, 210, 240] {
        let s = ProtocolSpec::exponential(disorder, t, lambda_for_duration(t));
        let run = ProtocolRun::new(&s, negative.realization).unwrap();
        let psi = run.final_state().unwrap();
        let zero = build_zero_mode(&run.angles_at(t).unwrap()).unwrap();
        finals.push(zero.fidelity(&psi).unwrap());
    }
    let monotone = finals.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        ensemble_ok && monotone,
        format!(
            "<δ> > 0.05: {good}/{} above 0.99 ({:.0}%, need ≥ 90%); realization {} (<δ> = {:.3}) final overlaps for T=90..240: {} ({})",
            positive.len(),
            100.0 * frac,
            negative.realization,
            negative.mean_delta,
            finals.iter().map(|f| format!("{f:.3}")).collect::<Vec<_>>().join(" "),
            if monotone { "nondecreasing" } else { "not monotone" }
        ),
    )
}

fn prepared_vs_exact() -> Outcome {
    let disorder = DisorderSpec::new(30, 0.0, 1.0, 808);
    let spec = ProtocolSpec::exponential(disorder, 400, lambda_for_duration(400));
    let cmp = compare_sources(&spec, 1000, ProbabilityConvention::PerSite, FitWindow::default()).unwrap();
    let (e, a) = (cmp.exact.slope, cmp.adiabatic.slope);
    let in_band = |s: f64| (-1.7..=-1.2).contains(&s);
    let pass = in_band(e) && in_band(a) && cmp.slope_difference.abs() <= 0.2;
    outcome(
        pass,
        format!(
            "exact {e:.3}, prepared {a:.3}, difference {:.3} (band [-1.7, -1.2], |diff| ≤ 0.2)",
            cmp.slope_difference
        ),
    )
}

fn half_pi_table() -> Outcome {
    let spec = DisorderSpec::new(2, 0.3, 1.0, 77);
    let cells = check_half_pi_table(&spec, 20, 21, 50).unwrap();
    let disagreements: usize = cells.iter().map(|c| c.disagreements).sum();
    let rule_ok = cells.iter().all(|c| half_pi_mode_exists(c.row.boundary, c.n_bulk) == c.row.exists);
    let summary: Vec<String> = cells
        .iter()
        .map(|c| format!("{}/{}:{}", c.row.boundary, c.row.n_bulk_parity, if c.row.exists { "Y" } else { "N" }))
        .collect();
    outcome(
        disagreements == 0 && rule_ok,
        format!("{} cells × 50 profiles, {disagreements} disagreements [{}]", cells.len(), summary.join(" ")),
    )
}

fn oracle_profiles() -> Vec<AngleProfile> {
    let mut out = Vec::new();
    for b in BoundaryKind::ALL {
        for &(n, th) in &[(1, 0.0), (5, 0.0), (20, FRAC_PI_4), (30, 1.2), (17, -0.6)] {
            out.push(AngleProfile::clean(n, th, b).unwrap());
        }
        for (i, &(n, mean, delta)) in
            [(8, 0.0, 0.4), (21, 0.0, 1.0), (30, 0.3, 0.9), (30, 0.0, 0.2), (13, -0.2, 1.2)].iter().enumerate()
        {
            let spec = DisorderSpec::new(n, mean, delta, 90 + i as u64);
            out.push(draw_profile(&spec, b, 0).unwrap());
        }
    }
    out
}

fn dense_oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count_mismatch = 0;
    let mut roots = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in oracle_profiles() {
        let phases = WalkOperator::new(p.clone()).eigenphases();
        let available = count_between(&p, 0.0, PI).unwrap() as usize;
        for k in 1..=available {
            let w = find_quasienergy(&p, k).unwrap();
            let d = phases.iter().map(|e| (e - w).abs()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
            roots += 1;
        }
        for _ in 0..20 {
            let a = rng.random_range(-PI..PI);
            let b = rng.random_range(-PI..PI);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let dense = phases.iter().filter(|&&e| e > lo && e <= hi).count() as i64;
            if dense != count_between(&p, lo, hi).unwrap() {
                count_mismatch += 1;
            }
        }
        if count_between(&p, -PI, PI).unwrap() != phases.len() as i64 {
            count_mismatch += 1;
        }
    }
    outcome(
        worst < 1e-8 && count_mismatch == 0,
        format!("{roots} quasi-energies, max distance to dense eigenphase {worst:.2e}; {count_mismatch} interval count mismatches"),
    )
}

fn random_profile(rng: &mut ChaCha8Rng, max_n: usize) -> AngleProfile {
    let n = rng.random_range(1..=max_n);
    let mean = rng.random_range(-0.5..0.5);
    let delta = rng.random_range(0.0..1.0);
    let b = BoundaryKind::ALL[rng.random_range(0..4)];
    let spec = DisorderSpec::new(n, mean, delta, rng.random());
    draw_profile(&spec, b, rng.random_range(0..1000)).unwrap()
}

fn property_suite() -> Outcome {
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(12345);
    let mut failures = Vec::new();

    for _ in 0..CASES {
        let p = random_profile(&mut rng, 40);
        let u = WalkOperator::new(p.clone());
        if u.unitarity_defect() >= 1e-12 {
            failures.push("unitarity");
        }
        let mut amps: Vec<Complex64> =
            (0..u.dim()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let last = amps.len() - 1;
        amps[0] = Complex64::new(0.0, 0.0);
        amps[last] = Complex64::new(0.0, 0.0);
        let mut psi = WalkState::from_amplitudes(amps).unwrap();
        psi.normalize();
        let mut out = psi.clone();
        for _ in 0..10 {
            out = u.apply(&out).unwrap();
        }
        if (out.norm() - 1.0).abs() >= 1e-12 {
            failures.push("norm");
        }
    }
    for _ in 0..CASES {
        let theta = rng.random_range(-1.55..1.55);
        let omega = rng.random_range(-PI..PI);
        let det = transfer_at(theta, omega).unwrap().det();
        if (det - Complex64::new(1.0, 0.0)).norm() >= 1e-12 {
            failures.push("det");
        }
    }
    for _ in 0..CASES {
        let p = random_profile(&mut rng, 60);
        let a = rng.random_range(-PI..PI);
        let b = rng.random_range(-PI..PI);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (tl, th) = (evolve_phase(&p, lo).unwrap(), evolve_phase(&p, hi).unwrap());
        if th.phi + hi < tl.phi + lo || th.count_index(hi) < tl.count_index(lo) {
            failures.push("winding monotonicity");
        }
    }
    for _ in 0..CASES {
        let n = rng.random_range(1..=60);
        let spec = DisorderSpec::new(n, rng.random_range(-0.5..0.5), rng.random_range(0.0..1.2), rng.random());
        let p = draw_profile(&spec, BoundaryKind::standard(), 0).unwrap();
        let w = rng.random_range(1e-6..PI - 1e-6);
        let above = count_between(&p, 0.0, w).unwrap();
        let below = count_between(&p, -w, 0.0).unwrap() - 1;
        if above != below {
            failures.push("particle-hole counting");
        }
    }
    for _ in 0..CASES {
        let n = rng.random_range(1..=30);
        let spec = DisorderSpec::new(n, rng.random_range(-0.3..0.3), rng.random_range(0.0..1.0), rng.random());
        let p = draw_profile(&spec, BoundaryKind::standard(), 0).unwrap();
        let omega = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(-PI..PI) };
        if basis_transform_check(&p, omega).unwrap() >= 1e-10 {
            failures.push("basis transform");
        }
    }
    failures.dedup();
    outcome(
        failures.is_empty(),
        format!(
            "6 properties × {CASES} randomized cases; failures: {}",
            if failures.is_empty() { "none".into() } else { failures.join(", ") }
        ),
    )
}

pub type Criterion = (&'static str, fn() -> Outcome);

/// All criteria, in reporting order.
pub fn criteria() -> [Criterion; 11] {
    [
        ("zero-mode exactness", zero_mode_exactness),
        ("integrated DOS scaling", integrated_dos_fit),
        ("Dyson divergence ratio", dyson_ratio),
        ("localization length", localization_length),
        ("large-chain correlation exponents", large_chain_exponents),
        ("small-chain correlation exponents", small_chain_exponents),
        ("adiabatic fidelity", adiabatic_fidelity),
        ("prepared vs exact correlation", prepared_vs_exact),
        ("half-pi mode table", half_pi_table),
        ("dense oracle equivalence", dense_oracle_equivalence),
        ("property suite", property_suite),
    ]
}
