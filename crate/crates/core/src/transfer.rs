//! Transfer matrices linking regrouped spinors `(β_{n−1}, α_n)`.
//!
//! An eigenstate `U ψ = e^{iω} ψ` satisfies `(β_n, α_{n+1}) = T_n (β_{n−1}, α_n)`
//! with
//!
//! ```text
//! T_n = | e^{iω} sec θ_n     −tan θ_n        |
//!       | −tan θ_n           e^{−iω} sec θ_n |
//! ```
//!
//! The reflecting ends fix the first spinor to `∝ (e^{iω}, −sin θ_0)` and the
//! last to `∝ (sin θ_{N+1}, e^{iω})`. All long products are carried as a unit
//! vector plus an accumulated log-norm.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::disorder::{cos_sin, AngleProfile, BoundaryKind, DisorderSpec, SINGULAR_COS};
use crate::error::{Error, Result};
use crate::walk::WalkState;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// `(cos ω, sin ω)`, exact at multiples of π/2.
pub(crate) fn phase_cs(omega: f64) -> (f64, f64) {
    if omega == 0.0 {
        (1.0, 0.0)
    } else if omega == FRAC_PI_2 {
        (0.0, 1.0)
    } else if omega == -FRAC_PI_2 {
        (0.0, -1.0)
    } else if omega == PI || omega == -PI {
        (-1.0, 0.0)
    } else {
        let (s, c) = omega.sin_cos();
        (c, s)
    }
}

pub(crate) fn cis(omega: f64) -> C {
    let (c, s) = phase_cs(omega);
    C::new(c, s)
}

/// `(sec θ, tan θ)` of a bulk coin.
fn sec_tan(site: usize, theta: f64) -> Result<(f64, f64)> {
    let (c, s) = cos_sin(theta);
    if c.abs() < SINGULAR_COS {
        return Err(Error::SingularCoin { site, theta });
    }
    Ok((1.0 / c, s / c))
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub entries: Matrix2<C>,
    pub omega: f64,
    pub theta: f64,
}

impl TransferMatrix {
    pub fn det(&self) -> C {
        self.entries.determinant()
    }
}

pub fn transfer_at(theta: f64, omega: f64) -> Result<TransferMatrix> {
    transfer_at_site(0, theta, omega)
}

fn transfer_at_site(site: usize, theta: f64, omega: f64) -> Result<TransferMatrix> {
    let (sec, tan) = sec_tan(site, theta)?;
    let e = cis(omega);
    let entries = Matrix2::new(e * sec, C::from(-tan), C::from(-tan), e.conj() * sec);
    Ok(TransferMatrix { entries, omega, theta })
}

/// `λ₊ = ∏ tan ϑ_n` in log form.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroModeProduct {
    /// `ln |λ₊|`.
    pub log_lambda_plus: f64,
    pub sign: f64,
    /// `ln |a_k|` for spinors `k = 1..=N+1`, with `a_1 = 1` and `a_{k+1} = a_k tan ϑ_k`.
    pub per_site_partial_logs: Vec<f64>,
    /// Signs of the `a_k`.
    pub signs: Vec<f64>,
}

impl ZeroModeProduct {
    pub fn lambda_plus(&self) -> f64 {
        self.sign * self.log_lambda_plus.exp()
    }

    pub fn lambda_minus(&self) -> f64 {
        self.sign * (-self.log_lambda_plus).exp()
    }
}

/// Running products of `tan ϑ_n`. A coin at exactly `θ = π/2` gives a hard
/// zero when `allow_zero` is set; every other reflecting coin is rejected.
fn partial_products(profile: &AngleProfile, allow_zero: bool) -> Result<ZeroModeProduct> {
    let n = profile.n_bulk();
    let mut logs = Vec::with_capacity(n + 1);
    let mut signs = Vec::with_capacity(n + 1);
    let (mut acc, mut sign) = (0.0_f64, 1.0_f64);
    logs.push(acc);
    signs.push(sign);
    for (i, (&t, &theta)) in profile.tan_half_angles().iter().zip(profile.bulk()).enumerate() {
        if t == 0.0 && allow_zero {
            acc = f64::NEG_INFINITY;
        } else {
            sec_tan(i + 1, theta)?;
            acc += t.abs().ln();
            sign *= t.signum();
        }
        logs.push(acc);
        signs.push(sign);
    }
    Ok(ZeroModeProduct { log_lambda_plus: acc, sign, per_site_partial_logs: logs, signs })
}

pub fn zero_mode_product(profile: &AngleProfile) -> Result<ZeroModeProduct> {
    partial_products(profile, false)
}

fn require_standard(profile: &AngleProfile) -> Result<()> {
    let found = profile.boundary();
    if found != BoundaryKind::standard() {
        return Err(Error::BoundaryMismatch {
            expected: BoundaryKind::standard().to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

/// Fills spinor `k` with `(β_{k−1}, α_k) = a_k (1, 1)` and normalizes.
fn state_from_logs(n_bulk: usize, logs: &[f64], signs: &[f64]) -> WalkState {
    let top = logs.iter().copied().filter(|l| l.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let mut state = WalkState::zeros(n_bulk);
    let amps = state.amplitudes_mut();
    for (k0, (&l, &s)) in logs.iter().zip(signs).enumerate() {
        let a = if l.is_finite() { s * (l - top).exp() } else { 0.0 };
        amps[2 * k0 + 1] = C::from(a);
        amps[2 * k0 + 2] = C::from(a);
    }
    state.normalize();
    state
}

/// The exact `ω = 0` eigenstate of a chain with boundaries `(R−, R+)`.
///
/// A bulk coin at exactly `θ = π/2` cuts the chain; the mode then lives on the
/// segment to its left, which covers the pinned start of the adiabatic protocols.
pub fn build_zero_mode(profile: &AngleProfile) -> Result<WalkState> {
    require_standard(profile)?;
    let p = partial_products(profile, true)?;
    Ok(state_from_logs(profile.n_bulk(), &p.per_site_partial_logs, &p.signs))
}

/// Same eigenstate, seeded from the right boundary spinor `(1, 1)` and
/// propagated backwards with `a_k = a_{k+1} / tan ϑ_k`.
pub fn build_zero_mode_from_right(profile: &AngleProfile) -> Result<WalkState> {
    require_standard(profile)?;
    let n = profile.n_bulk();
    let mut logs = vec![0.0; n + 1];
    let mut signs = vec![1.0; n + 1];
    for k in (0..n).rev() {
        let t = profile.tan_half_angles()[k];
        let theta = profile.bulk()[k];
        sec_tan(k + 1, theta)?;
        if t == 0.0 {
            return Err(Error::SingularCoin { site: k + 1, theta });
        }
        logs[k] = logs[k + 1] - t.abs().ln();
        signs[k] = signs[k + 1] * t.signum();
    }
    Ok(state_from_logs(n, &logs, &signs))
}

/// Part of the propagated left spinor orthogonal to the required right spinor.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ClosureMismatch {
    pub components: [C; 2],
    pub norm: f64,
    /// `ln ‖T_N ⋯ T_1 ℓ‖` for the unit left spinor `ℓ`.
    pub log_growth: f64,
}

pub fn left_spinor(boundary: BoundaryKind, omega: f64) -> Vector2<C> {
    Vector2::new(cis(omega), C::from(-boundary.left.sign()))
}

pub fn right_spinor(boundary: BoundaryKind, omega: f64) -> Vector2<C> {
    Vector2::new(C::from(boundary.right.sign()), cis(omega))
}

/// Propagates the left boundary spinor through every `T_n` and measures how
/// far it lands from the right boundary spinor. Zero iff `ω` is a quasi-energy.
pub fn closure_check(profile: &AngleProfile, omega: f64) -> Result<ClosureMismatch> {
    let boundary = profile.boundary();
    let mut v = left_spinor(boundary, omega).normalize();
    let mut log_growth = 0.0;
    for (i, &theta) in profile.bulk().iter().enumerate() {
        v = transfer_at_site(i + 1, theta, omega)?.entries * v;
        let n = v.norm();
        log_growth += n.ln();
        v /= C::from(n);
    }
    let r = right_spinor(boundary, omega).normalize();
    let proj = r.dotc(&v);
    let m = v - r * proj;
    Ok(ClosureMismatch { components: [m[0], m[1]], norm: m.norm(), log_growth })
}

/// `P = (σ_x + σ_z)/√2`.
pub fn basis_change() -> Matrix2<C> {
    let h = C::from(FRAC_1_SQRT_2);
    Matrix2::new(h, h, h, -h)
}

/// Compares the conjugated end-to-end product `P D(ω/2) T_N⋯T_1 D(ω/2) P`
/// with `R̃ C̃_N R̃ ⋯ C̃_1 R̃`, where `R̃ = cos ω + i sin ω σ_x` and
/// `C̃_n = diag(tan ϑ_n, cot ϑ_n)`. Returns the max-norm difference relative
/// to the larger of 1 and the max entry of the direct product.
pub fn basis_transform_check(profile: &AngleProfile, omega: f64) -> Result<f64> {
    let p = basis_change();
    let half = cis(omega / 2.0);
    let d_half = Matrix2::new(half, ZERO, ZERO, half.conj());
    let mut chain = Matrix2::<C>::identity();
    for (i, &theta) in profile.bulk().iter().enumerate() {
        chain = transfer_at_site(i + 1, theta, omega)?.entries * chain;
    }
    let lhs = p * d_half * chain * d_half * p;

    let (c, s) = phase_cs(omega);
    let rot = Matrix2::new(C::from(c), I * s, I * s, C::from(c));
    let mut rhs = rot;
    for &t in profile.tan_half_angles() {
        let scale = Matrix2::new(C::from(t), ZERO, ZERO, C::from(1.0 / t));
        rhs = rot * scale * rhs;
    }
    let scale = max_abs(&rhs).max(1.0);
    Ok(max_abs(&(lhs - rhs)) / scale)
}

pub(crate) fn max_abs(m: &Matrix2<C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Inverse localization length: growth rate per site of the transfer product
/// at quasi-energy `ω`, averaged over one chain of `n_sites` bulk sites.
pub fn lyapunov(spec: &DisorderSpec, omega: f64, n_sites: usize) -> Result<f64> {
    let profile_spec = spec.with_n_bulk(n_sites);
    let deltas = profile_spec.draw_deltas(0)?;
    let tans = deltas.iter().map(|d| {
        let theta = spec.theta_mean + d;
        (theta, crate::disorder::half_angle(theta).tan())
    });
    lyapunov_from(tans, omega, n_sites)
}

/// [`lyapunov`] on an explicit profile.
pub fn lyapunov_profile(profile: &AngleProfile, omega: f64) -> Result<f64> {
    let tans = profile.bulk().iter().copied().zip(profile.tan_half_angles().iter().copied());
    lyapunov_from(tans, omega, profile.n_bulk())
}

fn lyapunov_from(sites: impl Iterator<Item = (f64, f64)>, omega: f64, n_sites: usize) -> Result<f64> {
    if n_sites == 0 {
        return Err(Error::EmptyChain);
    }
    let (c, s) = phase_cs(omega);
    let (mut x, mut y) = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    let mut acc = 0.0;
    for (i, (theta, a)) in sites.enumerate() {
        sec_tan(i + 1, theta)?;
        let (rx, ry) = (c * x - s * y, s * x + c * y);
        let (sx, sy) = (rx * a, ry / a);
        let r = sx.hypot(sy);
        acc += r.ln();
        x = sx / r;
        y = sy / r;
    }
    Ok(acc / n_sites as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::draw_profile;
    use crate::walk::WalkOperator;
    use std::f64::consts::FRAC_PI_4;

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn clean_transfer_matrices() {
        let t = transfer_at(0.0, 0.0).unwrap();
        assert_eq!(t.entries, Matrix2::identity());
        let w = 0.37;
        let t = transfer_at(0.0, w).unwrap().entries;
        assert!(close(t[(0, 0)], C::from_polar(1.0, w), 1e-15));
        assert!(close(t[(1, 1)], C::from_polar(1.0, -w), 1e-15));
        assert_eq!(t[(0, 1)], ZERO);
    }

    #[test]
    fn omega_zero_form() {
        let th: f64 = 0.61;
        let t = transfer_at(th, 0.0).unwrap().entries;
        let expect = Matrix2::new(1.0 / th.cos(), -th.tan(), -th.tan(), 1.0 / th.cos());
        assert!((t.map(|z| z.re) - expect).amax() < 1e-15);
        assert!(t.map(|z| z.im).amax() == 0.0);
    }

    #[test]
    fn singular_coin_rejected() {
        assert!(matches!(transfer_at(FRAC_PI_2, 0.1), Err(Error::SingularCoin { .. })));
        assert!(matches!(transfer_at(-FRAC_PI_2, 0.1), Err(Error::SingularCoin { .. })));
    }

    #[test]
    fn clean_zero_mode_is_uniform() {
        let p = AngleProfile::clean(6, 0.0, BoundaryKind::standard()).unwrap();
        assert!((zero_mode_product(&p).unwrap().lambda_plus() - 1.0).abs() < 1e-14);
        let psi = build_zero_mode(&p).unwrap();
        let expect = 1.0 / (14.0f64).sqrt();
        for site in 0..=6 {
            assert!((psi.beta(site).re - expect).abs() < 1e-14);
            assert!((psi.alpha(site + 1).re - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn three_site_product_against_matrix_product() {
        let bulk = [0.1, -0.2, 0.3];
        let p = AngleProfile::from_bulk(&bulk, BoundaryKind::standard()).unwrap();
        let z = zero_mode_product(&p).unwrap();
        let mut m = Matrix2::<f64>::identity();
        for &t in &bulk {
            let t: f64 = t;
            m = Matrix2::new(1.0 / t.cos(), -t.tan(), -t.tan(), 1.0 / t.cos()) * m;
        }
        // (1,1) is an eigenvector of every factor; its eigenvalue is the product.
        let v = m * Vector2::new(1.0, 1.0);
        assert!((v[0] - v[1]).abs() < 1e-14);
        assert!((z.log_lambda_plus - v[0].ln()).abs() < 1e-12);
    }

    #[test]
    fn near_reflecting_bulk_drives_log_to_minus_infinity() {
        let p = AngleProfile::clean(50, FRAC_PI_2 - 1e-6, BoundaryKind::standard()).unwrap();
        assert!(zero_mode_product(&p).unwrap().log_lambda_plus < -600.0);
    }

    #[test]
    fn zero_mode_is_eigenstate_of_dense_operator() {
        let spec = DisorderSpec::new(100, 0.0, 0.4, 21);
        for idx in 0..5 {
            let p = draw_profile(&spec, BoundaryKind::standard(), idx).unwrap();
            let psi = build_zero_mode(&p).unwrap();
            let u = WalkOperator::new(p.clone());
            assert!(u.eigenresidual(&psi, 0.0).unwrap() < 1e-10);
            assert!((u.eigenresidual(&psi, PI).unwrap() - 2.0).abs() < 1e-10);
            let right = build_zero_mode_from_right(&p).unwrap();
            assert!((psi.fidelity(&right).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pinned_first_coin_gives_localized_mode() {
        let p = AngleProfile::from_bulk(&[FRAC_PI_2, 0.2, -0.1], BoundaryKind::standard()).unwrap();
        let psi = build_zero_mode(&p).unwrap();
        let pinned = WalkState::pinned_initial(3);
        assert!((psi.fidelity(&pinned).unwrap() - 1.0).abs() < 1e-15);
        assert!(psi.amplitudes()[3..].iter().all(|a| a.norm() == 0.0));
        assert!(zero_mode_product(&p).is_err());
    }

    #[test]
    fn zero_mode_needs_standard_boundaries() {
        let b = BoundaryKind::new(crate::disorder::Reflector::Plus, crate::disorder::Reflector::Plus);
        let p = AngleProfile::clean(4, 0.0, b).unwrap();
        assert!(matches!(build_zero_mode(&p), Err(Error::BoundaryMismatch { .. })));
    }

    #[test]
    fn closure_vanishes_at_zero() {
        let spec = DisorderSpec::new(300, 0.0, 1.0, 2);
        let p = draw_profile(&spec, BoundaryKind::standard(), 3).unwrap();
        assert!(closure_check(&p, 0.0).unwrap().norm < 1e-10);
    }

    #[test]
    fn basis_transform_single_site() {
        let p = AngleProfile::from_bulk(&[0.3], BoundaryKind::standard()).unwrap();
        assert!(basis_transform_check(&p, 0.2).unwrap() < 1e-12);
        let pp = basis_change() * basis_change();
        assert!(max_abs(&(pp - Matrix2::identity())) < 1e-15);
    }

    #[test]
    fn lyapunov_clean_gap_is_positive() {
        let p = AngleProfile::clean(2000, FRAC_PI_4, BoundaryKind::standard()).unwrap();
        assert!(lyapunov_profile(&p, 0.3).unwrap() > 0.1);
    }
}
