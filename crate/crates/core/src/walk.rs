//! One-step walk unitary `U = S · ⊕_n R(θ_n)` on a chain of `N + 2` sites.
//!
//! Amplitudes are stored as `(α_0, β_0, α_1, β_1, …, α_{N+1}, β_{N+1})`.
//! The coin at site `n` maps `(α, β)` to `(cα − sβ, sα + cβ)`; the shift then
//! moves the spin-up part to `α_{n+1}` and the spin-down part to `β_{n−1}`.
//! With reflecting end coins, `α_0` and `β_{N+1}` never receive amplitude and
//! are kept as structural zeros.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::disorder::{cos_sin, AngleProfile};
use crate::error::{Error, Result};

/// Wavefunction over all `2(N + 2)` amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    amplitudes: Vec<Complex64>,
}

impl WalkState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 6 || amplitudes.len() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 2 * (amplitudes.len() / 2).max(3),
                found: amplitudes.len(),
            });
        }
        Ok(Self { amplitudes })
    }

    pub fn zeros(n_bulk: usize) -> Self {
        Self { amplitudes: vec![Complex64::new(0.0, 0.0); 2 * (n_bulk + 2)] }
    }

    /// `β_0 = α_1 = 1/√2`: the zero-mode of a chain whose first bulk coin is `R+`.
    pub fn pinned_initial(n_bulk: usize) -> Self {
        let mut s = Self::zeros(n_bulk);
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        s.amplitudes[1] = h;
        s.amplitudes[2] = h;
        s
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.len() / 2
    }

    pub fn n_bulk(&self) -> usize {
        self.n_sites() - 2
    }

    pub fn alpha(&self, site: usize) -> Complex64 {
        self.amplitudes[2 * site]
    }

    pub fn beta(&self, site: usize) -> Complex64 {
        self.amplitudes[2 * site + 1]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &WalkState) -> Result<Complex64> {
        check_dim(self.amplitudes.len(), other.amplitudes.len())?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`, insensitive to global phases.
    pub fn fidelity(&self, other: &WalkState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "site,re_alpha,im_alpha,re_beta,im_beta")?;
        for site in 0..self.n_sites() {
            let (a, b) = (self.alpha(site), self.beta(site));
            writeln!(out, "{site},{:.17e},{:.17e},{:.17e},{:.17e}", a.re, a.im, b.re, b.im)?;
        }
        Ok(())
    }
}

/// Reference phases `φ` of the Hermitian eigenproblem behind [`WalkOperator::eigenphases`].
const PHASE_SHIFTS: [f64; 3] = [0.723_1, 1.911_3, 2.887_7];

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// The one-step unitary of a given angle profile.
#[derive(Clone, Debug)]
pub struct WalkOperator {
    profile: AngleProfile,
    coins: Vec<(f64, f64)>,
}

impl WalkOperator {
    pub fn new(profile: AngleProfile) -> Self {
        let coins = profile.angles().iter().map(|&t| cos_sin(t)).collect();
        Self { profile, coins }
    }

    pub fn profile(&self) -> &AngleProfile {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        2 * self.coins.len()
    }

    /// Matrix-free `out = U · input`.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        check_dim(self.dim(), input.len())?;
        check_dim(self.dim(), out.len())?;
        let m = self.coins.len();
        for (n, &(c, s)) in self.coins.iter().enumerate() {
            let a = input[2 * n];
            let b = input[2 * n + 1];
            if n + 1 < m {
                out[2 * (n + 1)] = a * c - b * s;
            }
            if n >= 1 {
                out[2 * (n - 1) + 1] = a * s + b * c;
            }
        }
        out[0] = Complex64::new(0.0, 0.0);
        out[2 * m - 1] = Complex64::new(0.0, 0.0);
        Ok(())
    }

    pub fn apply(&self, state: &WalkState) -> Result<WalkState> {
        let mut out = WalkState { amplitudes: vec![Complex64::new(0.0, 0.0); self.dim()] };
        self.apply_into(&state.amplitudes, &mut out.amplitudes)?;
        Ok(out)
    }

    /// `‖U ψ − e^{iω} ψ‖₂`.
    pub fn eigenresidual(&self, state: &WalkState, omega: f64) -> Result<f64> {
        let u_psi = self.apply(state)?;
        let phase = Complex64::from_polar(1.0, omega);
        Ok(u_psi.amplitudes.iter().zip(&state.amplitudes).map(|(u, p)| (u - phase * p).norm_sqr()).sum::<f64>().sqrt())
    }

    /// Dense real matrix of the full `2(N+2)`-dimensional action.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let m = self.coins.len();
        let mut u = DMatrix::zeros(dim, dim);
        for (n, &(c, s)) in self.coins.iter().enumerate() {
            if n + 1 < m {
                u[(2 * (n + 1), 2 * n)] = c;
                u[(2 * (n + 1), 2 * n + 1)] = -s;
            }
            if n >= 1 {
                u[(2 * (n - 1) + 1, 2 * n)] = s;
                u[(2 * (n - 1) + 1, 2 * n + 1)] = c;
            }
        }
        u
    }

    /// The `2(N+1)` block acting on the live amplitudes `β_0 … α_{N+1}`.
    pub fn reduced_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        self.to_dense().view((1, 1), (dim - 2, dim - 2)).into_owned()
    }

    /// `max |(U†U − I)_{ij}|` over the live block.
    pub fn unitarity_defect(&self) -> f64 {
        let u = self.reduced_dense();
        let g = u.transpose() * &u - DMatrix::identity(u.nrows(), u.ncols());
        g.amax()
    }

    /// All `2(N+1)` eigenphases of the live block in `(−π, π]`, sorted ascending.
    ///
    /// `U` is real orthogonal, a case where shifted QR can stall for a long
    /// time. Instead the Hermitian `H = (e^{−iφ}U + e^{iφ}Uᵀ)/2`, whose
    /// eigenvalues are `cos(ω − φ)`, is diagonalized and each phase is read off
    /// the Rayleigh quotient `v†Uv`. A near-degeneracy of `H` shows up as
    /// `|v†Uv| < 1` and moves on to the next `φ`.
    pub fn eigenphases(&self) -> Vec<f64> {
        let u = self.reduced_dense();
        let uc = u.map(|x| Complex64::new(x, 0.0));
        let ut = uc.transpose();
        let eigen = PHASE_SHIFTS
            .iter()
            .find_map(|&phi| {
                let e = Complex64::from_polar(0.5, -phi);
                let h = &uc * e + &ut * e.conj();
                let vecs = SymmetricEigen::new(h).eigenvectors;
                let z: Vec<Complex64> = vecs.column_iter().map(|v| v.dotc(&(&uc * v))).collect();
                z.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9).then_some(z)
            })
            .unwrap_or_else(|| Schur::new(u).complex_eigenvalues().iter().copied().collect());
        let mut phases: Vec<f64> = eigen
            .iter()
            .map(|z| {
                let p = z.arg();
                if p <= -std::f64::consts::PI {
                    std::f64::consts::PI
                } else {
                    p
                }
            })
            .collect();
        phases.sort_by(f64::total_cmp);
        phases
    }

    /// `U` applied through the dense matrix; used as an oracle for `apply`.
    pub fn apply_dense(&self, state: &WalkState) -> Result<WalkState> {
        check_dim(self.dim(), state.amplitudes.len())?;
        let u = self.to_dense().map(|x| Complex64::new(x, 0.0));
        let v = DVector::from_column_slice(&state.amplitudes);
        Ok(WalkState { amplitudes: (u * v).as_slice().to_vec() })
    }
}
