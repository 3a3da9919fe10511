//! Adiabatic preparation of the delocalized zero-mode.
//!
//! The walk starts in `β_0 = α_1 = 1/√2`, the exact zero-mode when the first
//! bulk coin is the reflector `θ_1 = π/2`. The mean angle `θ̃(t)` is then
//! lowered step by step, either linearly or exponentially, and one walk step
//! `U(t)` is applied per integer time `t = 0, …, T`.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::disorder::{AngleProfile, BoundaryKind, DisorderSpec};
use crate::error::{Error, Result};
use crate::transfer::build_zero_mode;
use crate::walk::{WalkOperator, WalkState};
use crate::winding::gap_above_zero;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ProtocolKind {
    /// `θ̃(t) = θ̃(0) − r t` with `r = θ̃(0)/T`.
    ConstantRate,
    /// `θ̃(t) = θ̃(0) e^{−λt}`.
    Exponential,
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" | "constant_rate" | "constant-rate" | "linear" => Ok(Self::ConstantRate),
            "exponential" | "exp" => Ok(Self::Exponential),
            other => Err(Error::InvalidProtocol(format!("unknown protocol '{other}'"))),
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ConstantRate => "constant_rate",
            Self::Exponential => "exponential",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub total_time: usize,
    pub theta_start: f64,
    /// Decay rate; only read by the exponential protocol.
    pub lambda: f64,
    pub disorder: DisorderSpec,
}

/// `λ = −ln(0.01/(π/2)) / T`, so that `θ̃(T) = 0.01`.
pub fn lambda_for_duration(total_time: usize) -> f64 {
    -(0.01 / FRAC_PI_2).ln() / total_time as f64
}

impl ProtocolSpec {
    pub fn exponential(disorder: DisorderSpec, total_time: usize, lambda: f64) -> Self {
        Self {
            kind: ProtocolKind::Exponential,
            total_time,
            theta_start: FRAC_PI_2,
            lambda,
            disorder: disorder.pinned(),
        }
    }

    pub fn constant_rate(disorder: DisorderSpec, total_time: usize) -> Self {
        Self {
            kind: ProtocolKind::ConstantRate,
            total_time,
            theta_start: FRAC_PI_2,
            lambda: 0.0,
            disorder: disorder.pinned(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.disorder.validate()?;
        if self.total_time == 0 {
            return Err(Error::InvalidProtocol("total time must be at least 1 step".into()));
        }
        if !self.disorder.pin_first_site {
            return Err(Error::InvalidProtocol("protocols require a pinned first site".into()));
        }
        if self.kind == ProtocolKind::Exponential {
            if self.disorder.n_bulk < 2 {
                return Err(Error::InvalidProtocol("exponential protocol needs N >= 2".into()));
            }
            if !(self.lambda > 0.0 && self.lambda.is_finite()) {
                return Err(Error::InvalidProtocol(format!("lambda = {}", self.lambda)));
            }
        }
        Ok(())
    }

    pub fn theta_tilde(&self, t: usize) -> f64 {
        match self.kind {
            ProtocolKind::ConstantRate => self.theta_start * (1.0 - t as f64 / self.total_time as f64),
            ProtocolKind::Exponential => self.theta_start * (-self.lambda * t as f64).exp(),
        }
    }
}

/// One realization of a protocol with its disorder held fixed in time.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    spec: ProtocolSpec,
    deltas: Vec<f64>,
    mean_delta: f64,
}

impl ProtocolRun {
    pub fn new(spec: &ProtocolSpec, realization_index: u64) -> Result<Self> {
        spec.validate()?;
        let deltas = spec.disorder.draw_deltas(realization_index)?;
        let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
        Ok(Self { spec: *spec, deltas, mean_delta })
    }

    /// Uses explicitly given `δ_1..δ_N`; `δ_1` is forced to 0.
    pub fn with_deltas(spec: &ProtocolSpec, mut deltas: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if deltas.len() != spec.disorder.n_bulk {
            return Err(Error::DimensionMismatch { expected: spec.disorder.n_bulk, found: deltas.len() });
        }
        deltas[0] = 0.0;
        let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
        Ok(Self { spec: *spec, deltas, mean_delta })
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn mean_delta(&self) -> f64 {
        self.mean_delta
    }

    /// Coin angles at step `t`.
    pub fn angles_at(&self, t: usize) -> Result<AngleProfile> {
        let total = self.spec.total_time;
        if t > total {
            return Err(Error::TimeOutOfRange { t, total });
        }
        let n = self.deltas.len();
        let tt = self.spec.theta_tilde(t);
        let bulk: Vec<f64> = match self.spec.kind {
            ProtocolKind::ConstantRate => self.deltas.iter().map(|d| tt + d).collect(),
            ProtocolKind::Exponential => {
                let shift = n as f64 / (n - 1) as f64 * self.spec.theta_tilde(total);
                std::iter::once(tt).chain(self.deltas[1..].iter().map(|d| tt - shift + d)).collect()
            }
        };
        let mut angles = Vec::with_capacity(n + 2);
        angles.push(-FRAC_PI_2);
        angles.extend(bulk);
        angles.push(FRAC_PI_2);
        AngleProfile::with_mean_delta(angles, self.mean_delta)
    }

    /// State after `U(T) ⋯ U(0)` without any diagnostics.
    pub fn final_state(&self) -> Result<WalkState> {
        let mut psi = WalkState::pinned_initial(self.deltas.len());
        let mut scratch = psi.clone();
        for t in 0..=self.spec.total_time {
            let u = WalkOperator::new(self.angles_at(t)?);
            u.apply_into(psi.amplitudes(), scratch.amplitudes_mut())?;
            std::mem::swap(&mut psi, &mut scratch);
        }
        Ok(psi)
    }

    /// Full evolution with the overlap to the instantaneous zero-mode (and
    /// optionally the gap above it) after every step.
    pub fn evolve(&self, with_gap: bool) -> Result<FidelityTrace> {
        let mut psi = WalkState::pinned_initial(self.deltas.len());
        let mut scratch = psi.clone();
        let mut steps = Vec::with_capacity(self.spec.total_time + 1);
        for t in 0..=self.spec.total_time {
            let profile = self.angles_at(t)?;
            let zero_mode = build_zero_mode(&profile)?;
            let gap = if with_gap { gap_above_zero(&profile).ok() } else { None };
            let u = WalkOperator::new(profile);
            u.apply_into(psi.amplitudes(), scratch.amplitudes_mut())?;
            std::mem::swap(&mut psi, &mut scratch);
            steps.push(FidelityStep {
                t,
                overlap: zero_mode.fidelity(&psi)?.min(1.0),
                gap,
                theta_tilde: self.spec.theta_tilde(t),
            });
        }
        Ok(FidelityTrace { steps, mean_delta: self.mean_delta, final_state: psi })
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct FidelityStep {
    pub t: usize,
    /// `|⟨ψ⁰(t)|ψ(t)⟩|²`.
    pub overlap: f64,
    /// Smallest positive quasi-energy of `U(t)`, when it could be resolved.
    pub gap: Option<f64>,
    pub theta_tilde: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityTrace {
    pub steps: Vec<FidelityStep>,
    pub mean_delta: f64,
    pub final_state: WalkState,
}

impl FidelityTrace {
    pub fn final_overlap(&self) -> f64 {
        self.steps.last().map(|s| s.overlap).unwrap_or(f64::NAN)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,overlap,gap,theta_tilde")?;
        for s in &self.steps {
            let gap = s.gap.map(|g| format!("{g:.17e}")).unwrap_or_default();
            writeln!(out, "{},{:.17e},{gap},{:.17e}", s.t, s.overlap, s.theta_tilde)?;
        }
        Ok(())
    }
}

/// Evolves one realization, recording overlaps and gaps at every step.
pub fn evolve_protocol(spec: &ProtocolSpec, realization_index: u64) -> Result<FidelityTrace> {
    ProtocolRun::new(spec, realization_index)?.evolve(true)
}

/// Final overlap of one realization.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RealizationSummary {
    pub realization: u64,
    pub mean_delta: f64,
    pub final_overlap: f64,
}

/// Final overlaps for realizations `0..n`, computed in parallel.
pub fn fidelity_ensemble(spec: &ProtocolSpec, n: usize) -> Result<Vec<RealizationSummary>> {
    (0..n as u64)
        .into_par_iter()
        .map(|idx| {
            let run = ProtocolRun::new(spec, idx)?;
            let psi = run.final_state()?;
            let zero = build_zero_mode(&run.angles_at(spec.total_time)?)?;
            Ok(RealizationSummary {
                realization: idx,
                mean_delta: run.mean_delta(),
                final_overlap: zero.fidelity(&psi)?.min(1.0),
            })
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[RealizationSummary], mut out: W) -> io::Result<()> {
    writeln!(out, "realization,mean_delta,final_overlap")?;
    for r in rows {
        writeln!(out, "{},{:.17e},{:.17e}", r.realization, r.mean_delta, r.final_overlap)?;
    }
    Ok(())
}

/// The boundary pair every protocol runs with.
pub const PROTOCOL_BOUNDARY: BoundaryKind = BoundaryKind::standard();

#[cfg(test)]
mod tests {
    use super::*;

    fn fig6_disorder() -> DisorderSpec {
        DisorderSpec::new(18, 0.0, 0.7, 11)
    }

    #[test]
    fn lambda_values() {
        assert!((lambda_for_duration(90) - 0.0562).abs() < 5e-5);
        assert!((lambda_for_duration(180) * 2.0 - lambda_for_duration(90)).abs() < 1e-15);
        assert!((lambda_for_duration(240) - 0.02107).abs() < 5e-6);
    }

    #[test]
    fn exponential_schedule_endpoints() {
        let spec = ProtocolSpec::exponential(fig6_disorder(), 90, lambda_for_duration(90));
        let run = ProtocolRun::new(&spec, 0).unwrap();
        assert_eq!(run.angles_at(0).unwrap().bulk()[0], FRAC_PI_2);
        let sum_end: f64 = run.angles_at(90).unwrap().bulk().iter().sum();
        let sum_delta: f64 = run.deltas().iter().sum();
        assert!((sum_end - sum_delta).abs() < 1e-12);
        assert!(matches!(run.angles_at(91), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn constant_rate_ends_on_the_disorder() {
        let spec = ProtocolSpec::constant_rate(fig6_disorder(), 50);
        let run = ProtocolRun::new(&spec, 3).unwrap();
        assert_eq!(run.angles_at(50).unwrap().bulk(), run.deltas());
        assert_eq!(spec.theta_tilde(0), FRAC_PI_2);
    }

    #[test]
    fn trace_starts_exact_and_stays_normalized() {
        let spec = ProtocolSpec::exponential(fig6_disorder(), 60, lambda_for_duration(60));
        let trace = evolve_protocol(&spec, 2).unwrap();
        assert!((trace.steps[0].overlap - 1.0).abs() < 1e-12);
        assert!((trace.final_state.norm() - 1.0).abs() < 1e-10);
        assert!(trace.steps.iter().all(|s| (0.0..=1.0).contains(&s.overlap)));
        assert_eq!(trace.steps.len(), 61);
        let run = ProtocolRun::new(&spec, 2).unwrap();
        assert_eq!(run.final_state().unwrap(), trace.final_state);
    }

    #[test]
    fn invalid_protocols() {
        let d = DisorderSpec::new(1, 0.0, 0.2, 0);
        assert!(ProtocolSpec::exponential(d, 10, 0.1).validate().is_err());
        let d = DisorderSpec::new(5, 0.0, 0.2, 0);
        assert!(ProtocolSpec::exponential(d, 0, 0.1).validate().is_err());
        assert!(ProtocolSpec::exponential(d, 10, -1.0).validate().is_err());
        assert!("sideways".parse::<ProtocolKind>().is_err());
    }
}
