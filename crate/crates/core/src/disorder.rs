//! Coin-angle profiles for a finite chain of `N + 2` sites.
//!
//! Sites `0` and `N + 1` carry total-reflection coins `R±` (θ = ±π/2); the
//! bulk sites `1..=N` carry `θ_n = θ̃ + δ_n` with `δ_n` drawn uniformly from
//! the box `[-Δ, Δ]`. Each realization owns an independent ChaCha stream
//! keyed by `(seed, realization_index)`, so ensembles can be generated in any
//! order and on any number of threads without changing a single bit.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A total-reflection coin: `R+` (θ = +π/2) or `R-` (θ = -π/2).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Reflector {
    Plus,
    Minus,
}

impl Reflector {
    pub fn angle(self) -> f64 {
        match self {
            Reflector::Plus => FRAC_PI_2,
            Reflector::Minus => -FRAC_PI_2,
        }
    }

    /// `sin θ` of the reflector, exactly ±1.
    pub fn sign(self) -> f64 {
        match self {
            Reflector::Plus => 1.0,
            Reflector::Minus => -1.0,
        }
    }

    pub fn from_angle(theta: f64) -> Result<Self> {
        if theta == FRAC_PI_2 {
            Ok(Reflector::Plus)
        } else if theta == -FRAC_PI_2 {
            Ok(Reflector::Minus)
        } else {
            Err(Error::InvalidBoundary(theta))
        }
    }

    fn symbol(self) -> char {
        match self {
            Reflector::Plus => '+',
            Reflector::Minus => '-',
        }
    }
}

/// Reflector pair `(R(θ_0), R(θ_{N+1}))`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryKind {
    pub left: Reflector,
    pub right: Reflector,
}

impl BoundaryKind {
    pub const fn new(left: Reflector, right: Reflector) -> Self {
        Self { left, right }
    }

    /// `(R-, R+)`, the boundary pair hosting the exact zero-mode.
    pub const fn standard() -> Self {
        Self::new(Reflector::Minus, Reflector::Plus)
    }

    pub const ALL: [BoundaryKind; 4] = [
        BoundaryKind::new(Reflector::Plus, Reflector::Plus),
        BoundaryKind::new(Reflector::Minus, Reflector::Plus),
        BoundaryKind::new(Reflector::Plus, Reflector::Minus),
        BoundaryKind::new(Reflector::Minus, Reflector::Minus),
    ];

    pub fn from_angles(left: f64, right: f64) -> Result<Self> {
        Ok(Self::new(Reflector::from_angle(left)?, Reflector::from_angle(right)?))
    }
}

impl Default for BoundaryKind {
    fn default() -> Self {
        Self::standard()
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.left.symbol(), self.right.symbol())
    }
}

impl FromStr for BoundaryKind {
    type Err = Error;

    /// Accepts two-character forms such as `-+` or `mp` (minus, plus).
    fn from_str(s: &str) -> Result<Self> {
        let parse = |c: char| match c {
            '+' | 'p' | 'P' => Some(Reflector::Plus),
            '-' | 'm' | 'M' => Some(Reflector::Minus),
            _ => None,
        };
        let chars: Vec<char> = s.trim().chars().collect();
        match chars.as_slice() {
            [l, r] => match (parse(*l), parse(*r)) {
                (Some(left), Some(right)) => Ok(Self::new(left, right)),
                _ => Err(Error::InvalidDisorder(format!("unrecognized boundary '{s}'"))),
            },
            _ => Err(Error::InvalidDisorder(format!("unrecognized boundary '{s}'"))),
        }
    }
}

/// Parameters of the box-distributed bulk disorder.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DisorderSpec {
    /// Number of bulk sites `N`.
    pub n_bulk: usize,
    /// Mean bulk angle `θ̃`.
    pub theta_mean: f64,
    /// Box half-width `Δ`.
    pub delta_max: f64,
    pub seed: u64,
    /// Force `δ_1 = 0` (adiabatic protocols start from a pinned `θ_1 = π/2`).
    pub pin_first_site: bool,
}

impl DisorderSpec {
    pub fn new(n_bulk: usize, theta_mean: f64, delta_max: f64, seed: u64) -> Self {
        Self { n_bulk, theta_mean, delta_max, seed, pin_first_site: false }
    }

    pub fn pinned(mut self) -> Self {
        self.pin_first_site = true;
        self
    }

    pub fn with_n_bulk(mut self, n_bulk: usize) -> Self {
        self.n_bulk = n_bulk;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bulk == 0 {
            return Err(Error::EmptyChain);
        }
        if !self.theta_mean.is_finite() {
            return Err(Error::InvalidDisorder(format!("theta_mean = {}", self.theta_mean)));
        }
        if !(self.delta_max.is_finite() && self.delta_max >= 0.0) {
            return Err(Error::InvalidDisorder(format!("delta_max = {}", self.delta_max)));
        }
        Ok(())
    }

    /// Stricter check for zero-mode delocalization studies: every bulk angle
    /// must stay inside `(-π/2, π/2)` so `sec θ_n` is finite.
    pub fn validate_delocalized(&self) -> Result<()> {
        self.validate()?;
        if self.theta_mean.abs() + self.delta_max >= FRAC_PI_2 {
            return Err(Error::InvalidDisorder(format!(
                "|theta_mean| + delta_max = {} must be < π/2",
                self.theta_mean.abs() + self.delta_max
            )));
        }
        Ok(())
    }

    /// Per-realization random stream.
    pub fn rng(&self, realization_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(realization_index);
        rng
    }

    /// Draws `δ_1..δ_N` for one realization.
    pub fn draw_deltas(&self, realization_index: u64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut deltas = if self.delta_max == 0.0 {
            vec![0.0; self.n_bulk]
        } else {
            let box_dist = Uniform::new_inclusive(-self.delta_max, self.delta_max)
                .map_err(|e| Error::InvalidDisorder(e.to_string()))?;
            let mut rng = self.rng(realization_index);
            box_dist.sample_iter(&mut rng).take(self.n_bulk).collect()
        };
        // Drawn and then overwritten so the remaining sites match the unpinned stream.
        if self.pin_first_site {
            deltas[0] = 0.0;
        }
        Ok(deltas)
    }
}

/// Coin angles `θ_0..θ_{N+1}` of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleProfile {
    angles: Vec<f64>,
    mean_delta: f64,
    /// `ϑ_n = π/4 - θ_n/2` for bulk sites `1..=N` (index `n - 1`).
    half_angles: Vec<f64>,
    tan_half: Vec<f64>,
}

impl AngleProfile {
    /// Builds a profile from explicit angles; boundaries must be exactly ±π/2.
    pub fn from_angles(angles: Vec<f64>) -> Result<Self> {
        Self::with_mean_delta(angles, 0.0)
    }

    pub fn with_mean_delta(angles: Vec<f64>, mean_delta: f64) -> Result<Self> {
        if angles.len() < 3 {
            return Err(Error::EmptyChain);
        }
        Reflector::from_angle(angles[0])?;
        Reflector::from_angle(angles[angles.len() - 1])?;
        if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidDisorder(format!("non-finite angle {bad}")));
        }
        let half_angles: Vec<f64> = angles[1..angles.len() - 1].iter().map(|&t| half_angle(t)).collect();
        let tan_half = half_angles.iter().map(|v| v.tan()).collect();
        Ok(Self { angles, mean_delta, half_angles, tan_half })
    }

    /// Uniform bulk `θ̃` between the given reflectors.
    pub fn clean(n_bulk: usize, theta: f64, boundary: BoundaryKind) -> Result<Self> {
        Self::from_bulk(&vec![theta; n_bulk], boundary)
    }

    pub fn from_bulk(bulk: &[f64], boundary: BoundaryKind) -> Result<Self> {
        if bulk.is_empty() {
            return Err(Error::EmptyChain);
        }
        let mut angles = Vec::with_capacity(bulk.len() + 2);
        angles.push(boundary.left.angle());
        angles.extend_from_slice(bulk);
        angles.push(boundary.right.angle());
        Self::from_angles(angles)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn bulk(&self) -> &[f64] {
        &self.angles[1..self.angles.len() - 1]
    }

    pub fn n_bulk(&self) -> usize {
        self.angles.len() - 2
    }

    /// Total number of sites, `N + 2`.
    pub fn n_sites(&self) -> usize {
        self.angles.len()
    }

    pub fn mean_delta(&self) -> f64 {
        self.mean_delta
    }

    pub fn half_angles(&self) -> &[f64] {
        &self.half_angles
    }

    /// `tan ϑ_n` for bulk sites, index `n - 1`.
    pub fn tan_half_angles(&self) -> &[f64] {
        &self.tan_half
    }

    /// First bulk site whose coin has `cos θ_n ≈ 0`.
    pub fn singular_site(&self) -> Option<(usize, f64)> {
        self.bulk().iter().enumerate().find(|(_, &t)| cos_sin(t).0.abs() < SINGULAR_COS).map(|(i, &t)| (i + 1, t))
    }

    pub fn boundary(&self) -> BoundaryKind {
        // Validated at construction.
        BoundaryKind::from_angles(self.angles[0], self.angles[self.angles.len() - 1])
            .expect("profile boundaries are validated on construction")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "site,theta")?;
        for (site, theta) in self.angles.iter().enumerate() {
            writeln!(out, "{site},{theta:.17e}")?;
        }
        Ok(())
    }
}

/// Bulk coins with `|cos θ|` below this are treated as reflectors.
pub const SINGULAR_COS: f64 = 1e-12;

/// `ϑ = π/4 - θ/2`; exactly 0 for θ = π/2.
pub fn half_angle(theta: f64) -> f64 {
    FRAC_PI_4 - theta / 2.0
}

/// `(cos θ, sin θ)` with the reflector angles mapped to exact `(0, ±1)`.
pub(crate) fn cos_sin(theta: f64) -> (f64, f64) {
    if theta == FRAC_PI_2 {
        (0.0, 1.0)
    } else if theta == -FRAC_PI_2 {
        (0.0, -1.0)
    } else {
        let (s, c) = theta.sin_cos();
        (c, s)
    }
}

/// Draws one realization: bulk `θ_n = θ̃ + δ_n` between the given reflectors.
pub fn draw_profile(spec: &DisorderSpec, boundary: BoundaryKind, realization_index: u64) -> Result<AngleProfile> {
    let deltas = spec.draw_deltas(realization_index)?;
    let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let mut angles = Vec::with_capacity(deltas.len() + 2);
    angles.push(boundary.left.angle());
    angles.extend(deltas.iter().map(|d| spec.theta_mean + d));
    angles.push(boundary.right.angle());
    AngleProfile::with_mean_delta(angles, mean_delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_width_box_gives_clean_bulk() {
        let spec = DisorderSpec::new(5, FRAC_PI_4, 0.0, 3);
        let p = draw_profile(&spec, BoundaryKind::standard(), 0).unwrap();
        assert!(p.bulk().iter().all(|&t| t == FRAC_PI_4));
        assert_eq!(p.mean_delta(), 0.0);
        assert_eq!(p.angles()[0], -FRAC_PI_2);
        assert_eq!(p.angles()[6], FRAC_PI_2);
    }

    #[test]
    fn same_seed_and_index_is_bitwise_identical() {
        let spec = DisorderSpec::new(1000, 0.0, 0.7, 42);
        let a = draw_profile(&spec, BoundaryKind::standard(), 17).unwrap();
        let b = draw_profile(&spec, BoundaryKind::standard(), 17).unwrap();
        assert_eq!(a, b);
        let c = draw_profile(&spec, BoundaryKind::standard(), 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_empty_chain_and_bad_boundaries() {
        let spec = DisorderSpec::new(0, 0.0, 0.4, 1);
        assert_eq!(draw_profile(&spec, BoundaryKind::standard(), 0), Err(Error::EmptyChain));
        assert!(matches!(AngleProfile::from_angles(vec![0.3, 0.0, FRAC_PI_2]), Err(Error::InvalidBoundary(_))));
        assert!(matches!(AngleProfile::from_angles(vec![-FRAC_PI_2, 0.0, 1.5]), Err(Error::InvalidBoundary(_))));
        assert!(DisorderSpec::new(4, 0.0, -0.1, 1).validate().is_err());
    }

    #[test]
    fn pinning_only_touches_first_site() {
        let spec = DisorderSpec::new(50, 0.0, 0.5, 9);
        let free = spec.draw_deltas(4).unwrap();
        let pinned = spec.pinned().draw_deltas(4).unwrap();
        assert_eq!(pinned[0], 0.0);
        assert_eq!(&free[1..], &pinned[1..]);
    }

    #[test]
    fn mean_delta_is_arithmetic_mean() {
        let spec = DisorderSpec::new(200, 0.1, 0.3, 5);
        let p = draw_profile(&spec, BoundaryKind::standard(), 2).unwrap();
        let deltas = spec.draw_deltas(2).unwrap();
        let mean = deltas.iter().sum::<f64>() / 200.0;
        assert_eq!(p.mean_delta(), mean);
    }

    #[test]
    fn boundary_parsing_round_trips() {
        for b in BoundaryKind::ALL {
            assert_eq!(b.to_string().parse::<BoundaryKind>().unwrap(), b);
        }
        assert_eq!("mp".parse::<BoundaryKind>().unwrap(), BoundaryKind::standard());
        assert!("x+".parse::<BoundaryKind>().is_err());
    }

    #[test]
    fn reflector_coins_are_exact() {
        assert_eq!(cos_sin(FRAC_PI_2), (0.0, 1.0));
        assert_eq!(cos_sin(-FRAC_PI_2), (0.0, -1.0));
        assert_eq!(half_angle(FRAC_PI_2), 0.0);
    }

    #[test]
    fn csv_has_one_row_per_site() {
        let p = AngleProfile::clean(3, 0.2, BoundaryKind::standard()).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("site,theta\n0,"));
    }
}
