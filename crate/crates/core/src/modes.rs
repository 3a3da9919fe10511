//! Special quasi-energies `0`, `±π/2`, `π` under the four reflector pairs.
//!
//! At `ω = π/2` consecutive transfer matrices pair up into
//! `P_m = T_{2m} T_{2m−1}`, which is diagonal in the `σ_y` eigenbasis. For even
//! `N` the whole chain is then diagonal there and a mode exists iff both ends
//! carry the same reflector; an odd `N` leaves one unpaired `T_N` that swaps
//! the two `σ_y` eigenvectors and reverses the rule.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::disorder::{draw_profile, AngleProfile, BoundaryKind, DisorderSpec};
use crate::error::{Error, Result};
use crate::transfer::{closure_check, transfer_at, ZeroModeProduct};

/// Residual below which a boundary-matched spinor counts as an eigenstate.
pub const MODE_TOLERANCE: f64 = 1e-10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// One cell of the `±π/2` existence table.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ModeExistence {
    pub boundary: BoundaryKind,
    pub n_bulk_parity: Parity,
    pub omega: f64,
    pub exists: bool,
}

/// Whether `ω = ±π/2` is a quasi-energy for the given ends and bulk size.
pub fn half_pi_mode_exists(boundary: BoundaryKind, n_bulk: usize) -> bool {
    let same = boundary.left == boundary.right;
    match Parity::of(n_bulk) {
        Parity::Even => same,
        Parity::Odd => !same,
    }
}

/// The eight cells in the order `++, -+, +-, --`, even before odd.
pub fn half_pi_table() -> Vec<ModeExistence> {
    let mut rows = Vec::with_capacity(8);
    for boundary in BoundaryKind::ALL {
        for (parity, n) in [(Parity::Even, 2), (Parity::Odd, 1)] {
            rows.push(ModeExistence {
                boundary,
                n_bulk_parity: parity,
                omega: FRAC_PI_2,
                exists: half_pi_mode_exists(boundary, n),
            });
        }
    }
    rows
}

pub fn write_table_csv<W: std::io::Write>(rows: &[ModeExistence], mut out: W) -> std::io::Result<()> {
    writeln!(out, "boundary,parity,omega,exists")?;
    for r in rows {
        let tag = if r.exists { "Y" } else { "N" };
        writeln!(out, "{},{},{:.17e},{tag}", r.boundary, r.n_bulk_parity, r.omega)?;
    }
    Ok(())
}

/// `σ_y` eigenvectors as columns: `(1, i)/√2` for `+1`, `(1, −i)/√2` for `−1`.
fn sigma_y_basis() -> Matrix2<Complex64> {
    let h = FRAC_1_SQRT_2;
    Matrix2::new(Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(0.0, h), Complex64::new(0.0, -h))
}

/// `λ₊` of the paired product at `ω = π/2`, accumulated in log form.
/// `per_site_partial_logs[m]` holds the log after `m` pairs.
pub fn half_pi_product(profile: &AngleProfile) -> Result<ZeroModeProduct> {
    let n = profile.n_bulk();
    if n % 2 != 0 {
        return Err(Error::OddChain(n));
    }
    let v = sigma_y_basis();
    let v_inv = v.adjoint();
    let bulk = profile.bulk();
    let mut logs = vec![0.0];
    let mut signs = vec![1.0];
    let (mut acc, mut sign) = (0.0_f64, 1.0_f64);
    for m in 0..n / 2 {
        let t1 = transfer_at(bulk[2 * m], FRAC_PI_2)
            .map_err(|_| Error::SingularCoin { site: 2 * m + 1, theta: bulk[2 * m] })?;
        let t2 = transfer_at(bulk[2 * m + 1], FRAC_PI_2)
            .map_err(|_| Error::SingularCoin { site: 2 * m + 2, theta: bulk[2 * m + 1] })?;
        let d = v_inv * t2.entries * t1.entries * v;
        let lambda = d[(0, 0)].re;
        acc += lambda.abs().ln();
        sign *= lambda.signum();
        logs.push(acc);
        signs.push(sign);
    }
    Ok(ZeroModeProduct { log_lambda_plus: acc, sign, per_site_partial_logs: logs, signs })
}

/// Closure residual of `ω` for a profile whose ends must match `boundary`.
pub fn verify_mode(boundary: BoundaryKind, profile: &AngleProfile, omega: f64) -> Result<f64> {
    let found = profile.boundary();
    if found != boundary {
        return Err(Error::BoundaryMismatch { expected: boundary.to_string(), found: found.to_string() });
    }
    Ok(closure_check(profile, omega)?.norm)
}

/// Numerical confirmation of one table cell.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CellCheck {
    pub row: ModeExistence,
    pub n_bulk: usize,
    pub samples: usize,
    pub disagreements: usize,
    /// Largest residual among samples predicted to host the mode, or smallest otherwise.
    pub worst_residual: f64,
}

/// Runs [`verify_mode`] at `ω = π/2` on `samples` random profiles per cell.
pub fn check_half_pi_table(spec: &DisorderSpec, n_even: usize, n_odd: usize, samples: usize) -> Result<Vec<CellCheck>> {
    if n_even % 2 != 0 || n_odd % 2 != 1 {
        return Err(Error::InvalidDisorder(format!("sizes {n_even}/{n_odd} have the wrong parity")));
    }
    half_pi_table()
        .into_iter()
        .map(|row| {
            let n = if row.n_bulk_parity == Parity::Even { n_even } else { n_odd };
            let cell_spec = spec.with_n_bulk(n);
            let mut disagreements = 0;
            let mut worst: f64 = if row.exists { 0.0 } else { f64::INFINITY };
            for idx in 0..samples as u64 {
                let profile = draw_profile(&cell_spec, row.boundary, idx)?;
                let r = verify_mode(row.boundary, &profile, FRAC_PI_2)?;
                if (r < MODE_TOLERANCE) != row.exists {
                    disagreements += 1;
                }
                worst = if row.exists { worst.max(r) } else { worst.min(r) };
            }
            Ok(CellCheck { row, n_bulk: n, samples, disagreements, worst_residual: worst })
        })
        .collect()
}
