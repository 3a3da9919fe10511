//! Command bodies. Each returns its files in memory so nothing is written
//! unless the whole run succeeds.

use std::fmt::Write as _;

use rayon::prelude::*;

use odd_walk::adiabatic::write_summary_csv;
use odd_walk::modes::{check_half_pi_table, half_pi_table, write_table_csv};
use odd_walk::winding::{inverse_localization_closed_form, sigma_squared};
use odd_walk::{
    compare_sources, correlation_curve, dos_estimate, dos_fit, draw_profile, evolve_protocol, fidelity_ensemble,
    fit_power_law, gap_above_zero, lyapunov, BoundaryKind, CorrelationCurve, CorrelationSource, Error, PowerLawFit,
};

use crate::config::{Command, ExperimentConfig, Source};

#[derive(Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<String>,
}

impl Outputs {
    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }
}

#[derive(Debug)]
pub struct RunError(String);

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError(e.to_string())
    }
}

fn finite(label: &str, x: f64) -> Result<f64, RunError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(RunError(format!("{label} is not finite")))
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outputs, RunError> {
    match cfg.command {
        Command::Dos => dos(cfg),
        Command::Correlation => correlation(cfg),
        Command::Adiabatic => adiabatic(cfg),
        Command::Modes => modes(cfg),
        Command::Gap => gap(cfg),
        Command::Lyapunov => lyap(cfg),
    }
}

fn dos(cfg: &ExperimentConfig) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    let profile = draw_profile(&cfg.disorder(), cfg.boundary, 0)?;
    let fit = dos_fit(&profile, cfg.fit_lo, cfg.fit_hi, cfg.points)?;
    finite("integrated-DOS slope", fit.slope)?;
    let mut samples = Vec::new();
    fit.write_samples_csv(&mut samples)?;
    out.file("dos_samples.csv", samples);
    let mut summary = Vec::new();
    fit.write_summary_csv(&mut summary)?;
    out.file("dos_fit.csv", summary);
    let s2 = sigma_squared(cfg.theta_mean, cfg.delta);
    out.summary.push(format!(
        "slope={:.6} intercept={:.6} r2={:.6} expected_intercept={:.6}",
        fit.slope,
        fit.intercept,
        fit.r2,
        (s2 / 8.0).ln()
    ));
    if !cfg.grid.is_empty() && cfg.realizations > 1 {
        if cfg.boundary != BoundaryKind::standard() {
            return Err(RunError("density estimate runs with boundary -+".into()));
        }
        let est = dos_estimate(&cfg.disorder(), &cfg.grid, cfg.realizations)?;
        let mut csv = String::from("omega,rho,interval_count\n");
        for ((c, r), k) in est.centers.iter().zip(&est.rho).zip(&est.interval_counts) {
            writeln!(csv, "{c:.17e},{r:.17e},{k}").unwrap();
        }
        out.file("dos_density.csv", csv.into_bytes());
        out.summary.extend(est.warnings.iter().map(|w| format!("warning: {w}")));
    }
    Ok(out)
}

fn push_curve(out: &mut Outputs, tag: &str, curve: &CorrelationCurve, fit: &PowerLawFit) -> Result<(), RunError> {
    finite("correlation slope", fit.slope)?;
    let mut csv = Vec::new();
    curve.write_csv(&mut csv)?;
    out.file(&format!("correlation_{tag}.csv"), csv);
    out.file(&format!("fit_{tag}.txt"), format!("{}\n", fit.record()).into_bytes());
    out.summary.push(format!("{tag}: {}", fit.record()));
    Ok(())
}

fn correlation(cfg: &ExperimentConfig) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    match cfg.source {
        Source::Exact => {
            let curve =
                correlation_curve(&cfg.disorder(), cfg.realizations, CorrelationSource::ExactZeroMode, cfg.convention)?;
            let fit = fit_power_law(&curve, cfg.window)?;
            push_curve(&mut out, "exact", &curve, &fit)?;
        }
        Source::Adiabatic => {
            let source = CorrelationSource::Adiabatic(cfg.schedule());
            let curve = correlation_curve(&cfg.disorder(), cfg.realizations, source, cfg.convention)?;
            let fit = fit_power_law(&curve, cfg.window)?;
            push_curve(&mut out, "adiabatic", &curve, &fit)?;
        }
        Source::Both => {
            let cmp = compare_sources(&cfg.protocol_spec(), cfg.realizations, cfg.convention, cfg.window)?;
            push_curve(&mut out, "exact", &cmp.exact_curve, &cmp.exact)?;
            push_curve(&mut out, "adiabatic", &cmp.adiabatic_curve, &cmp.adiabatic)?;
            out.summary.push(format!("slope_difference={:.6}", cmp.slope_difference));
        }
    }
    Ok(out)
}

fn adiabatic(cfg: &ExperimentConfig) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    let spec = cfg.protocol_spec();
    let trace = evolve_protocol(&spec, 0)?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    out.file("fidelity_trace.csv", csv);
    let rows = fidelity_ensemble(&spec, cfg.realizations)?;
    let mut csv = Vec::new();
    write_summary_csv(&rows, &mut csv)?;
    out.file("fidelity_summary.csv", csv);
    let above = rows.iter().filter(|r| r.final_overlap > 0.99).count();
    out.summary.push(format!(
        "T={} lambda={:.6} realization0_final_overlap={:.6} above_0.99={above}/{}",
        cfg.total_time,
        cfg.lambda,
        trace.final_overlap(),
        rows.len()
    ));
    Ok(out)
}

fn modes(cfg: &ExperimentConfig) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    let mut table = Vec::new();
    write_table_csv(&half_pi_table(), &mut table)?;
    out.file("modes_table.csv", table);
    let (n_even, n_odd) = if cfg.n % 2 == 0 { (cfg.n, cfg.n + 1) } else { (cfg.n + 1, cfg.n) };
    let checks = check_half_pi_table(&cfg.disorder(), n_even, n_odd, cfg.realizations)?;
    let mut csv = String::from("boundary,parity,n_bulk,samples,disagreements,worst_residual\n");
    for c in &checks {
        writeln!(
            csv,
            "{},{},{},{},{},{:.6e}",
            c.row.boundary, c.row.n_bulk_parity, c.n_bulk, c.samples, c.disagreements, c.worst_residual
        )
        .unwrap();
    }
    out.file("modes_check.csv", csv.into_bytes());
    let disagreements: usize = checks.iter().map(|c| c.disagreements).sum();
    out.summary.push(format!("cells=8 samples_per_cell={} disagreements={disagreements}", cfg.realizations));
    if disagreements > 0 {
        return Err(RunError(format!("{disagreements} samples contradict the ±π/2 existence table")));
    }
    Ok(out)
}

fn gap(cfg: &ExperimentConfig) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    let spec = cfg.disorder();
    let rows: Vec<(f64, f64)> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|idx| {
            let profile = draw_profile(&spec, BoundaryKind::standard(), idx)?;
            Ok((profile.mean_delta(), gap_above_zero(&profile)?))
        })
        .collect::<Result<_, Error>>()?;
    let mut csv = String::from("realization,mean_delta,gap\n");
    for (i, (d, g)) in rows.iter().enumerate() {
        writeln!(csv, "{i},{d:.17e},{g:.17e}").unwrap();
    }
    out.file("gap.csv", csv.into_bytes());
    let median = {
        let mut g: Vec<f64> = rows.iter().map(|r| r.1).collect();
        g.sort_by(f64::total_cmp);
        g[g.len() / 2]
    };
    out.summary.push(format!("realizations={} median_gap={median:.6e}", rows.len()));
    Ok(out)
}

fn lyap(cfg: &ExperimentConfig) -> Result<Outputs, RunError> {
    let mut out = Outputs::default();
    let spec = cfg.disorder();
    let s2 = sigma_squared(cfg.theta_mean, cfg.delta);
    let rows: Vec<(f64, f64)> =
        cfg.omegas.par_iter().map(|&w| Ok((w, lyapunov(&spec, w, cfg.n)?))).collect::<Result<_, Error>>()?;
    let mut csv = String::from("omega,inverse_length,closed_form\n");
    for &(w, g) in &rows {
        finite("Lyapunov exponent", g)?;
        let closed = inverse_localization_closed_form(s2, w);
        writeln!(csv, "{w:.17e},{g:.17e},{closed:.17e}").unwrap();
        out.summary.push(format!("omega={w:e} inverse_length={g:.6} closed_form={closed:.6}"));
    }
    out.file("lyapunov.csv", csv.into_bytes());
    Ok(out)
}
