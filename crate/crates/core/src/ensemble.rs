//! Ensemble-averaged two-point correlations of zero-modes and power-law fits.
//!
//! For every realization the site probabilities `p(n)` of a zero-mode are
//! multiplied by the probability on the first unit of the chain, and the
//! products are averaged over realizations. Rows are collected in realization
//! order and reduced pairwise, so results do not depend on the thread count.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adiabatic::{ProtocolKind, ProtocolRun, ProtocolSpec};
use crate::disorder::{draw_profile, BoundaryKind, DisorderSpec};
use crate::error::{Error, Result};
use crate::stats::{ols, pairwise_sum_rows};
use crate::transfer::build_zero_mode;
use crate::walk::WalkState;

/// How amplitudes are grouped into a "site" probability.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum ProbabilityConvention {
    /// `|α_n|² + |β_n|²` for physical sites `n = 0..=N+1`.
    #[default]
    PerSite,
    /// `|β_{n−1}|² + |α_n|²` for spinors `n = 1..=N+1`.
    PerRegroupedSpinor,
}

impl std::str::FromStr for ProbabilityConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "site" | "per_site" | "per-site" => Ok(Self::PerSite),
            "spinor" | "per_regrouped_spinor" | "regrouped" => Ok(Self::PerRegroupedSpinor),
            other => Err(Error::InvalidDisorder(format!("unknown convention '{other}'"))),
        }
    }
}

impl std::fmt::Display for ProbabilityConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PerSite => "per_site",
            Self::PerRegroupedSpinor => "per_regrouped_spinor",
        })
    }
}

pub fn site_probability(state: &WalkState, n: usize, convention: ProbabilityConvention) -> Result<f64> {
    let last = state.n_sites() - 1;
    match convention {
        ProbabilityConvention::PerSite => {
            if n > last {
                return Err(Error::IndexOutOfRange { index: n, lo: 0, hi: last });
            }
            Ok(state.alpha(n).norm_sqr() + state.beta(n).norm_sqr())
        }
        ProbabilityConvention::PerRegroupedSpinor => {
            if n == 0 || n > last {
                return Err(Error::IndexOutOfRange { index: n, lo: 1, hi: last });
            }
            Ok(state.beta(n - 1).norm_sqr() + state.alpha(n).norm_sqr())
        }
    }
}

/// All unit probabilities, first unit first.
pub fn probabilities(state: &WalkState, convention: ProbabilityConvention) -> Vec<f64> {
    let range = match convention {
        ProbabilityConvention::PerSite => 0..state.n_sites(),
        ProbabilityConvention::PerRegroupedSpinor => 1..state.n_sites(),
    };
    range.map(|n| site_probability(state, n, convention).expect("index in range")).collect()
}

/// `p(1 + s) · p(1)` for separations `s = 1, 2, …`, counting units from 1.
fn correlation_row(state: &WalkState, convention: ProbabilityConvention) -> Vec<f64> {
    let p = probabilities(state, convention);
    p[1..].iter().map(|x| x * p[0]).collect()
}

/// A time-dependent schedule, applied to the disorder of the correlation run.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Schedule {
    pub kind: ProtocolKind,
    pub total_time: usize,
    pub lambda: f64,
}

impl Schedule {
    pub fn protocol(&self, disorder: DisorderSpec) -> ProtocolSpec {
        match self.kind {
            ProtocolKind::Exponential => ProtocolSpec::exponential(disorder, self.total_time, self.lambda),
            ProtocolKind::ConstantRate => ProtocolSpec::constant_rate(disorder, self.total_time),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum CorrelationSource {
    /// Exact zero-mode of a freshly drawn `(R−, R+)` profile.
    ExactZeroMode,
    /// Final state of the adiabatic protocol.
    Adiabatic(Schedule),
    /// Exact zero-mode of the protocol's final coin profile.
    AdiabaticTarget(Schedule),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationCurve {
    pub separations: Vec<usize>,
    pub mean_corr: Vec<f64>,
    /// Standard error of the mean at each separation.
    pub stderr: Vec<f64>,
    pub realization_count: usize,
    pub convention: ProbabilityConvention,
    rows: Vec<Vec<f64>>,
}

impl CorrelationCurve {
    pub fn from_rows(rows: Vec<Vec<f64>>, convention: ProbabilityConvention) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidDisorder("no realizations".into()));
        }
        let len = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != len) {
            return Err(Error::DimensionMismatch { expected: len, found: bad.len() });
        }
        let mean_corr: Vec<f64> = pairwise_sum_rows(&rows).into_iter().map(|s| s / n as f64).collect();
        let sq: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().zip(&mean_corr).map(|(x, m)| (x - m) * (x - m)).collect()).collect();
        let stderr = if n > 1 {
            pairwise_sum_rows(&sq).into_iter().map(|s| (s / (n as f64 - 1.0) / n as f64).sqrt()).collect()
        } else {
            vec![0.0; len]
        };
        Ok(Self { separations: (1..=len).collect(), mean_corr, stderr, realization_count: n, convention, rows })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "sep,mean_corr,stderr")?;
        for ((s, m), e) in self.separations.iter().zip(&self.mean_corr).zip(&self.stderr) {
            writeln!(out, "{s},{m:.17e},{e:.17e}")?;
        }
        Ok(())
    }
}

fn state_for(spec: &DisorderSpec, source: CorrelationSource, idx: u64) -> Result<WalkState> {
    match source {
        CorrelationSource::ExactZeroMode => build_zero_mode(&draw_profile(spec, BoundaryKind::standard(), idx)?),
        CorrelationSource::Adiabatic(s) => ProtocolRun::new(&s.protocol(*spec), idx)?.final_state(),
        CorrelationSource::AdiabaticTarget(s) => {
            let run = ProtocolRun::new(&s.protocol(*spec), idx)?;
            build_zero_mode(&run.angles_at(s.total_time)?)
        }
    }
}

pub fn correlation_curve(
    spec: &DisorderSpec,
    n_realizations: usize,
    source: CorrelationSource,
    convention: ProbabilityConvention,
) -> Result<CorrelationCurve> {
    spec.validate()?;
    let rows: Vec<Vec<f64>> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|idx| Ok(correlation_row(&state_for(spec, source, idx)?, convention)))
        .collect::<Result<_>>()?;
    CorrelationCurve::from_rows(rows, convention)
}

/// Separations entering a power-law fit.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum FitWindow {
    /// `lo · ln s_max ≤ ln s ≤ hi · ln s_max`.
    LogFraction { lo: f64, hi: f64 },
    /// `min ≤ s ≤ max`.
    Range { min: usize, max: usize },
    /// Drops `s = 1` and the largest `tail` fraction of separations.
    Trimmed { tail: f64 },
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow::LogFraction { lo: 0.2, hi: 0.9 }
    }
}

impl std::str::FromStr for FitWindow {
    type Err = Error;

    /// `a:b` is a log fraction, `a-b` an explicit separation range, `trim:f` a trimmed tail.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidGrid(format!("unrecognized fit window '{s}'"));
        let s = s.trim();
        if let Some(f) = s.strip_prefix("trim:") {
            return Ok(FitWindow::Trimmed { tail: f.parse().map_err(|_| bad())? });
        }
        if let Some((a, b)) = s.split_once(':') {
            let (lo, hi) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            if !(0.0..=1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
                return Err(bad());
            }
            return Ok(FitWindow::LogFraction { lo, hi });
        }
        if let Some((a, b)) = s.split_once('-') {
            let (min, max) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            if min == 0 || min >= max {
                return Err(bad());
            }
            return Ok(FitWindow::Range { min, max });
        }
        Err(bad())
    }
}

impl std::fmt::Display for FitWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitWindow::LogFraction { lo, hi } => write!(f, "{lo}:{hi}"),
            FitWindow::Range { min, max } => write!(f, "{min}-{max}"),
            FitWindow::Trimmed { tail } => write!(f, "trim:{tail}"),
        }
    }
}

impl FitWindow {
    /// Inclusive `ln s` bounds for a curve whose largest separation is `s_max`.
    pub fn log_bounds(&self, s_max: usize) -> (f64, f64) {
        let l = (s_max as f64).ln();
        match *self {
            FitWindow::LogFraction { lo, hi } => (lo * l, hi * l),
            FitWindow::Range { min, max } => ((min as f64).ln(), (max as f64).ln()),
            FitWindow::Trimmed { tail } => {
                let keep = ((s_max as f64) * (1.0 - tail)).floor().max(2.0);
                (2f64.ln(), keep.ln())
            }
        }
    }
}

pub const MIN_FIT_POINTS: usize = 5;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// Bounds in `ln(separation)`.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub n_points: usize,
    pub n_realizations: usize,
}

impl PowerLawFit {
    /// `slope intercept window r2 n_realizations`.
    pub fn record(&self) -> String {
        format!(
            "slope={:.6} intercept={:.6} window=[{:.4},{:.4}] r2={:.6} n_realizations={}",
            self.slope, self.intercept, self.window.0, self.window.1, self.r_squared, self.n_realizations
        )
    }
}

fn fit_mean(separations: &[usize], mean: &[f64], window: FitWindow, n_realizations: usize) -> Result<PowerLawFit> {
    let s_max = separations.last().copied().unwrap_or(0);
    let (lo, hi) = window.log_bounds(s_max);
    let eps = 1e-12;
    let (x, y): (Vec<f64>, Vec<f64>) = separations
        .iter()
        .zip(mean)
        .map(|(&s, &m)| ((s as f64).ln(), m))
        .filter(|&(ls, m)| ls >= lo - eps && ls <= hi + eps && m > 0.0)
        .map(|(ls, m)| (ls, m.ln()))
        .unzip();
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateWindow { points: x.len(), required: MIN_FIT_POINTS });
    }
    let f = ols(&x, &y)?;
    Ok(PowerLawFit {
        slope: f.slope,
        intercept: f.intercept,
        window: (lo, hi),
        r_squared: f.r_squared,
        n_points: f.n_points,
        n_realizations,
    })
}

/// Least squares of `ln mean_corr` against `ln s` inside the window.
pub fn fit_power_law(curve: &CorrelationCurve, window: FitWindow) -> Result<PowerLawFit> {
    fit_mean(&curve.separations, &curve.mean_corr, window, curve.realization_count)
}

/// Standard deviation of the fitted slope over `resamples` bootstrap
/// resamples of the realizations.
pub fn bootstrap_slope_stderr(curve: &CorrelationCurve, window: FitWindow, resamples: usize, seed: u64) -> Result<f64> {
    let n = curve.rows.len();
    if resamples < 2 || n < 2 {
        return Err(Error::InvalidDisorder("bootstrap needs at least two resamples and realizations".into()));
    }
    let slopes: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let picked: Vec<Vec<f64>> = (0..n).map(|_| curve.rows[rng.random_range(0..n)].clone()).collect();
            let mean: Vec<f64> = pairwise_sum_rows(&picked).into_iter().map(|s| s / n as f64).collect();
            Ok(fit_mean(&curve.separations, &mean, window, n)?.slope)
        })
        .collect::<Result<_>>()?;
    Ok(crate::stats::variance(&slopes).sqrt())
}

/// Fits of the exact and the adiabatically prepared zero-modes on identical disorder.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceComparison {
    pub exact: PowerLawFit,
    pub adiabatic: PowerLawFit,
    pub slope_difference: f64,
    pub exact_curve: CorrelationCurve,
    pub adiabatic_curve: CorrelationCurve,
}

/// For each realization, evolves the protocol and compares its final state
/// with the exact zero-mode of the final coin profile.
pub fn compare_sources(
    protocol: &ProtocolSpec,
    n_realizations: usize,
    convention: ProbabilityConvention,
    window: FitWindow,
) -> Result<SourceComparison> {
    protocol.validate()?;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|idx| {
            let run = ProtocolRun::new(protocol, idx)?;
            let exact = build_zero_mode(&run.angles_at(protocol.total_time)?)?;
            let prepared = run.final_state()?;
            Ok((correlation_row(&exact, convention), correlation_row(&prepared, convention)))
        })
        .collect::<Result<_>>()?;
    let (exact_rows, adiabatic_rows): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let exact_curve = CorrelationCurve::from_rows(exact_rows, convention)?;
    let adiabatic_curve = CorrelationCurve::from_rows(adiabatic_rows, convention)?;
    let exact = fit_power_law(&exact_curve, window)?;
    let adiabatic = fit_power_law(&adiabatic_curve, window)?;
    Ok(SourceComparison {
        slope_difference: adiabatic.slope - exact.slope,
        exact,
        adiabatic,
        exact_curve,
        adiabatic_curve,
    })
}
