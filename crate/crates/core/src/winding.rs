//! Quasi-energy counting by phase winding.
//!
//! Conjugating the transfer chain with `P = (σ_x + σ_z)/√2` and a diagonal
//! phase turns every `T_n` into a rotation by `ω` followed by the real
//! scaling `diag(tan ϑ_n, cot ϑ_n)`. A real 2-vector started on the left
//! boundary direction therefore only ever turns counter-clockwise as `ω`
//! grows, and each half-turn it completes beyond the right boundary direction
//! is one eigenvalue. The angle is kept as a principal value plus an integer
//! number of full turns so the count is exact.
//!
//! A site with `tan ϑ_n < 0` (coin beyond `π/2`) contributes an extra, `ω`
//! independent half-turn. Those are tracked separately and removed from the count.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;

use crate::disorder::{draw_profile, half_angle, AngleProfile, BoundaryKind, DisorderSpec, Reflector, SINGULAR_COS};
use crate::error::{Error, Result};
use crate::stats::{ols, simpson, LinearFit};
use crate::transfer::phase_cs;

/// End point of the rotating vector after the `N` bulk sites.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct WindingTrace {
    /// Unwrapped angle `φ_{N+1}`.
    pub phi: f64,
    /// `ln` of the accumulated stretch of the vector.
    pub log_norm: f64,
    /// Number of coordinate axes crossed.
    pub quadrant_crossings: u64,
    /// Sites processed.
    pub step: usize,
    /// Sites with `tan ϑ_n < 0`.
    pub sign_flips: u64,
    angle: f64,
    turns: i64,
    target: f64,
}

impl WindingTrace {
    /// `J(ω)`: with `(R−, R+)` ends, the number of quasi-energies in `(0, ω]`
    /// for `ω > 0` (minus the number in `(ω, 0]` for `ω < 0`). Differences of
    /// `J` count states in any window for every boundary kind.
    pub fn count_index(&self, omega: f64) -> i64 {
        2 * self.turns - self.sign_flips as i64 + ((self.angle + omega - self.target) / PI).floor() as i64
    }

    /// Continuous version of [`count_index`](Self::count_index).
    pub fn level(&self, omega: f64) -> f64 {
        (2 * self.turns - self.sign_flips as i64) as f64 + (self.angle + omega - self.target) / PI
    }
}

fn start_angle(boundary: BoundaryKind) -> f64 {
    match boundary.left {
        Reflector::Minus => 0.0,
        Reflector::Plus => FRAC_PI_2,
    }
}

fn target_angle(boundary: BoundaryKind) -> f64 {
    match boundary.right {
        Reflector::Plus => 0.0,
        Reflector::Minus => FRAC_PI_2,
    }
}

fn quadrant(angle: f64, turns: i64) -> i64 {
    4 * turns + (2.0 * angle / PI).floor() as i64
}

/// Runs the rotate-then-stretch recursion through all bulk sites.
pub fn evolve_phase(profile: &AngleProfile, omega: f64) -> Result<WindingTrace> {
    let boundary = profile.boundary();
    let (c, s) = phase_cs(omega);
    let start = start_angle(boundary);
    let (mut x, mut y) = if start == 0.0 { (1.0, 0.0) } else { (0.0, 1.0) };
    let mut angle = start;
    let mut turns = 0_i64;
    let mut flips = 0_u64;
    let mut crossings = 0_u64;
    let mut log_norm = 0.0;
    let mut q = quadrant(angle, turns);
    for (i, (&a, &theta)) in profile.tan_half_angles().iter().zip(profile.bulk()).enumerate() {
        if a == 0.0 || !a.is_finite() || theta.cos().abs() < SINGULAR_COS {
            return Err(Error::SingularCoin { site: i + 1, theta });
        }
        let (rx, ry) = (c * x - s * y, s * x + c * y);
        let mut mid = angle + omega;
        if a < 0.0 {
            mid += PI;
            flips += 1;
        }
        let (sx, sy) = (rx * a, ry / a);
        let r = sx.hypot(sy);
        log_norm += r.ln();
        x = sx / r;
        y = sy / r;
        let next = y.atan2(x);
        turns += ((mid - next) / TAU).round() as i64;
        angle = next;
        let q_next = quadrant(angle, turns);
        crossings += q_next.abs_diff(q);
        q = q_next;
    }
    Ok(WindingTrace {
        phi: angle + TAU * turns as f64,
        log_norm,
        quadrant_crossings: crossings,
        step: profile.n_bulk(),
        sign_flips: flips,
        angle,
        turns,
        target: target_angle(boundary),
    })
}

/// Counting result at one quasi-energy.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CountResult {
    pub omega: f64,
    /// States in `(0, ω]`.
    pub j: i64,
    /// `N_I(ω) = 1/2 + j/(N+1)`.
    pub n_i: f64,
    pub phi: f64,
}

fn count_at_zero(profile: &AngleProfile) -> Result<i64> {
    Ok(evolve_phase(profile, 0.0)?.count_index(0.0))
}

pub fn integrated_dos(profile: &AngleProfile, omega: f64) -> Result<CountResult> {
    if !(omega > 0.0 && omega <= PI) {
        return Err(Error::InvalidGrid(format!("omega = {omega} outside (0, π]")));
    }
    let trace = evolve_phase(profile, omega)?;
    let j = trace.count_index(omega) - count_at_zero(profile)?;
    Ok(CountResult { omega, j, n_i: 0.5 + j as f64 / (profile.n_bulk() + 1) as f64, phi: trace.phi })
}

/// Number of quasi-energies in `(lo, hi]`, with `−π ≤ lo ≤ hi ≤ π`.
pub fn count_between(profile: &AngleProfile, lo: f64, hi: f64) -> Result<i64> {
    if !(-PI..=PI).contains(&lo) || !(-PI..=PI).contains(&hi) || lo > hi {
        return Err(Error::InvalidGrid(format!("window ({lo}, {hi}] not inside [−π, π]")));
    }
    Ok(evolve_phase(profile, hi)?.count_index(hi) - evolve_phase(profile, lo)?.count_index(lo))
}

const BISECTION_RTOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// `k`-th quasi-energy in `(0, π]`, `k = 1, 2, …` in increasing order.
pub fn find_quasienergy(profile: &AngleProfile, k: usize) -> Result<f64> {
    let base = evolve_phase(profile, 0.0)?.level(0.0).floor();
    let available = (evolve_phase(profile, PI)?.level(PI).floor() - base).max(0.0) as usize;
    if k == 0 || k > available {
        return Err(Error::QuasiEnergyOutOfRange { k, available });
    }
    let target = base + k as f64;
    let (mut lo, mut hi) = (0.0_f64, PI);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= BISECTION_RTOL * hi {
            break;
        }
        if evolve_phase(profile, mid)?.level(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest positive quasi-energy of a chain with `(R−, R+)` ends.
pub fn gap_above_zero(profile: &AngleProfile) -> Result<f64> {
    let found = profile.boundary();
    if found != BoundaryKind::standard() {
        return Err(Error::BoundaryMismatch {
            expected: BoundaryKind::standard().to_string(),
            found: found.to_string(),
        });
    }
    find_quasienergy(profile, 1)
}

/// `σ² = 2⟨(ln tan² ϑ)²⟩` for `θ` uniform on `[θ̃ − Δ, θ̃ + Δ]`.
pub fn sigma_squared(theta_mean: f64, delta_max: f64) -> f64 {
    let g = |theta: f64| {
        let l = 2.0 * half_angle(theta).tan().abs().ln();
        l * l
    };
    if delta_max == 0.0 {
        return 2.0 * g(theta_mean);
    }
    let integral = simpson(g, theta_mean - delta_max, theta_mean + delta_max, 4096);
    2.0 * integral / (2.0 * delta_max)
}

/// `N_I(ω) ≈ (1 + σ²/(4 ln² tan ω))/2` near the band centre.
pub fn integrated_dos_closed_form(sigma2: f64, omega: f64) -> f64 {
    let l = omega.tan().ln();
    0.5 * (1.0 + sigma2 / (4.0 * l * l))
}

/// Dyson form `ρ(ω) ≈ −σ²/(4 ω ln³ ω)`.
pub fn dyson_density(sigma2: f64, omega: f64) -> f64 {
    let l = omega.ln();
    -sigma2 / (4.0 * omega * l * l * l)
}

/// `ℓ⁻¹(ω) ≈ −σ²/(4 ln ω)`.
pub fn inverse_localization_closed_form(sigma2: f64, omega: f64) -> f64 {
    -sigma2 / (4.0 * omega.ln())
}

/// Finite-difference density of states averaged over an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct DosEstimate {
    /// Geometric midpoints of consecutive grid points.
    pub centers: Vec<f64>,
    pub rho: Vec<f64>,
    /// Total number of states found in each grid interval, summed over realizations.
    pub interval_counts: Vec<i64>,
    /// Ensemble mean of `N_I` at every grid point.
    pub mean_n_i: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Interval counts below this trigger a resolution warning.
pub const MIN_INTERVAL_COUNT: i64 = 50;

pub fn dos_estimate(spec: &DisorderSpec, omegas: &[f64], realizations: usize) -> Result<DosEstimate> {
    spec.validate()?;
    if omegas.len() < 2 {
        return Err(Error::InvalidGrid("need at least two grid points".into()));
    }
    let upper = (-1.0_f64).exp();
    if omegas.iter().any(|&w| !(w > 0.0 && w < upper)) {
        return Err(Error::InvalidGrid(format!("grid must lie inside (0, {upper:.4})")));
    }
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    if realizations == 0 {
        return Err(Error::InvalidGrid("need at least one realization".into()));
    }
    let per_realization: Vec<Vec<i64>> = (0..realizations as u64)
        .into_par_iter()
        .map(|idx| {
            let profile = draw_profile(spec, BoundaryKind::standard(), idx)?;
            omegas.iter().map(|&w| Ok(evolve_phase(&profile, w)?.count_index(w))).collect()
        })
        .collect::<Result<_>>()?;
    let mut totals = vec![0_i64; omegas.len()];
    for row in &per_realization {
        for (t, j) in totals.iter_mut().zip(row) {
            *t += j;
        }
    }
    let scale = (realizations * (spec.n_bulk + 1)) as f64;
    let mean_n_i: Vec<f64> = totals.iter().map(|&t| 0.5 + t as f64 / scale).collect();
    let mut estimate = DosEstimate {
        centers: Vec::new(),
        rho: Vec::new(),
        interval_counts: Vec::new(),
        mean_n_i,
        warnings: Vec::new(),
    };
    for i in 0..omegas.len() - 1 {
        let (a, b) = (omegas[i], omegas[i + 1]);
        let count = totals[i + 1] - totals[i];
        estimate.centers.push((a * b).sqrt());
        estimate.rho.push((estimate.mean_n_i[i + 1] - estimate.mean_n_i[i]) / (b - a));
        estimate.interval_counts.push(count);
        if count < MIN_INTERVAL_COUNT {
            estimate.warnings.push(format!("interval ({a:.3e}, {b:.3e}] holds only {count} states; density is noisy"));
        }
        if b / a > 4.0 {
            estimate.warnings.push(format!(
                "interval ({a:.3e}, {b:.3e}] spans a factor {:.1}; grid too coarse to resolve the log singularity",
                b / a
            ));
        }
    }
    Ok(estimate)
}

/// One sample of the integrated-DOS scan.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DosSample {
    /// `ln |ln tan ω|`.
    pub loglog: f64,
    pub count: CountResult,
}

/// Fit of `ln(N_I − 1/2)` against `ln |ln tan ω|`.
#[derive(Clone, Debug, PartialEq)]
pub struct DosFit {
    pub slope: f64,
    pub intercept: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub r2: f64,
    pub samples: Vec<DosSample>,
}

/// Scans `points` values of `L = ln|ln tan ω|` uniformly over `[lo, hi]` and
/// fits a line through the samples with at least one state.
pub fn dos_fit(profile: &AngleProfile, lo: f64, hi: f64, points: usize) -> Result<DosFit> {
    if !(lo < hi) || points < 2 {
        return Err(Error::InvalidGrid(format!("fit window [{lo}, {hi}] with {points} points")));
    }
    let samples: Vec<DosSample> = (0..points)
        .into_par_iter()
        .map(|i| {
            let loglog = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let omega = (-loglog.exp()).exp().atan();
            Ok(DosSample { loglog, count: integrated_dos(profile, omega)? })
        })
        .collect::<Result<_>>()?;
    let (x, y): (Vec<f64>, Vec<f64>) =
        samples.iter().filter(|s| s.count.j > 0).map(|s| (s.loglog, (s.count.n_i - 0.5).ln())).unzip();
    if x.len() < 2 {
        return Err(Error::DegenerateWindow { points: x.len(), required: 2 });
    }
    let LinearFit { slope, intercept, r_squared, .. } = ols(&x, &y)?;
    Ok(DosFit { slope, intercept, window_lo: lo, window_hi: hi, r2: r_squared, samples })
}

impl DosFit {
    pub fn write_samples_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "omega,N_I,j,phi")?;
        for s in &self.samples {
            let c = s.count;
            writeln!(out, "{:.17e},{:.17e},{},{:.17e}", c.omega, c.n_i, c.j, c.phi)?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "slope,intercept,window_lo,window_hi,r2")?;
        writeln!(out, "{:.10},{:.10},{},{},{:.10}", self.slope, self.intercept, self.window_lo, self.window_hi, self.r2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::draw_profile;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn zero_energy_does_not_wind() {
        let spec = DisorderSpec::new(500, 0.0, 0.9, 1);
        let p = draw_profile(&spec, BoundaryKind::standard(), 0).unwrap();
        let t = evolve_phase(&p, 0.0).unwrap();
        assert_eq!(t.phi, 0.0);
        assert_eq!(t.count_index(0.0), 0);
    }

    #[test]
    fn clean_chain_is_pure_rotation() {
        let p = AngleProfile::clean(40, 0.0, BoundaryKind::standard()).unwrap();
        let w = 0.01;
        let t = evolve_phase(&p, w).unwrap();
        assert!((t.phi - 40.0 * w).abs() < 1e-12);
    }

    #[test]
    fn clean_spectrum_is_equally_spaced() {
        let n = 9;
        let p = AngleProfile::clean(n, 0.0, BoundaryKind::standard()).unwrap();
        for k in 1..=n + 1 {
            let w = find_quasienergy(&p, k).unwrap();
            let expect = k as f64 * PI / (n + 1) as f64;
            assert!((w - expect).abs() < 1e-11, "k={k} {w} {expect}");
        }
        assert!(find_quasienergy(&p, n + 2).is_err());
    }

    #[test]
    fn total_count_is_live_dimension() {
        let spec = DisorderSpec::new(25, 0.3, 0.8, 2);
        for b in BoundaryKind::ALL {
            let p = draw_profile(&spec, b, 1).unwrap();
            assert_eq!(count_between(&p, -PI, PI).unwrap(), 52);
        }
    }

    #[test]
    fn sigma_squared_limits() {
        assert!(sigma_squared(0.0, 0.0) < 1e-30);
        let s = sigma_squared(0.0, 0.8);
        assert!((s.ln() - 8f64.ln() + 1.40).abs() < 0.01, "{s}");
    }

    #[test]
    fn clean_gap_is_large() {
        let p = AngleProfile::clean(6, 1.4, BoundaryKind::standard()).unwrap();
        assert!(gap_above_zero(&p).unwrap() > 0.5 * (FRAC_PI_2 - FRAC_PI_4));
    }

    #[test]
    fn dos_grid_is_validated() {
        let spec = DisorderSpec::new(10, 0.0, 0.4, 1);
        assert!(dos_estimate(&spec, &[0.1], 1).is_err());
        assert!(dos_estimate(&spec, &[0.2, 0.1], 1).is_err());
        assert!(dos_estimate(&spec, &[0.1, 0.5], 1).is_err());
        let est = dos_estimate(&spec, &[0.01, 0.2], 2).unwrap();
        assert!(!est.warnings.is_empty());
    }
}
