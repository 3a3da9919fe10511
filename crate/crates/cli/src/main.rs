use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

mod config;
mod run;

use config::{parse_kv, ConfigError, ExperimentConfig};

/// Disordered discrete-time quantum walk experiments.
///
/// Parameters come from `--config` (a `key=value` file such as a previous
/// run's manifest.txt), overridden by flags.
#[derive(Parser, Debug)]
#[command(name = "odd-walk", version)]
struct Cli {
    /// dos, correlation, adiabatic, modes, gap or lyapunov.
    command: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of bulk sites (chain length for lyapunov).
    #[arg(long)]
    n: Option<String>,
    /// Half-width of the box disorder.
    #[arg(long)]
    delta: Option<String>,
    #[arg(long = "theta-mean", allow_hyphen_values = true)]
    theta_mean: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    realizations: Option<String>,
    /// Reflector pair such as `-+` or `mp`.
    #[arg(long, allow_hyphen_values = true)]
    boundary: Option<String>,
    /// exponential or constant_rate.
    #[arg(long)]
    protocol: Option<String>,
    /// Protocol duration in steps.
    #[arg(long = "T")]
    total_time: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// `lo:hi` log fraction, `min-max` separations or `trim:f`.
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// exact, adiabatic or both.
    #[arg(long)]
    source: Option<String>,
    /// per_site or per_regrouped_spinor.
    #[arg(long)]
    convention: Option<String>,
    /// Comma-separated quasi-energies.
    #[arg(long)]
    omega: Option<String>,
    #[arg(long = "fit-lo")]
    fit_lo: Option<String>,
    #[arg(long = "fit-hi")]
    fit_hi: Option<String>,
    #[arg(long)]
    points: Option<String>,
    /// Comma-separated frequency grid of the ensemble density estimate.
    #[arg(long)]
    grid: Option<String>,
}

impl Cli {
    fn overrides(self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("command", self.command),
            ("n", self.n),
            ("delta", self.delta),
            ("theta_mean", self.theta_mean),
            ("seed", self.seed),
            ("realizations", self.realizations),
            ("boundary", self.boundary),
            ("protocol", self.protocol),
            ("T", self.total_time),
            ("lambda", self.lambda),
            ("window", self.window),
            ("threads", self.threads),
            ("out", self.out),
            ("source", self.source),
            ("convention", self.convention),
            ("omega", self.omega),
            ("fit_lo", self.fit_lo),
            ("fit_hi", self.fit_hi),
            ("points", self.points),
            ("grid", self.grid),
        ]
    }
}

fn resolve(cli: Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut map = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            parse_kv(&text)?
        }
        None => BTreeMap::new(),
    };
    map.remove("version");
    for (k, v) in cli.overrides() {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    }
    ExperimentConfig::from_map(&map)
}

/// Writes every output or none: files already written are removed on error.
fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> std::io::Result<()> {
    let created_dir = !dir.exists();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            let _ = std::fs::remove_file(&path);
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            if created_dir {
                let _ = std::fs::remove_dir(dir);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("config error: cannot start {} threads: {e}", cfg.threads);
            return ExitCode::from(2);
        }
    };
    let outputs = match pool.install(|| run::run(&cfg)) {
        Ok(outputs) => outputs,
        Err(e) => {
            eprintln!("numerical failure: {e}");
            return ExitCode::from(3);
        }
    };
    for line in &outputs.summary {
        println!("{line}");
    }
    let mut files = outputs.files;
    files.push(("manifest.txt".to_string(), cfg.manifest().into_bytes()));
    if let Err(e) = write_outputs(&cfg.out, &files) {
        eprintln!("cannot write outputs to {}: {e}", cfg.out.display());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
