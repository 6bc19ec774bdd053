//! Command-line driver: parses a run configuration, runs one experiment and
//! writes `<experiment>.csv` and `manifest.json` into the output directory.

pub mod config;
pub mod experiments;
pub mod validate;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde_json::json;
use thiserror::Error;

pub use config::{config_from_manifest, parse_config, Bath, Command, Experiment, Preset, RunConfig, Scan, USAGE};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] nonrecip::Error),
    #[error("validation failed")]
    ValidationFailed,
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::ValidationFailed => 1,
            CliError::Io(_) => 3,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Caps the global worker pool from `NONRECIP_THREADS`.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NONRECIP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("invalid value '{raw}' for 'NONRECIP_THREADS': expected a positive integer")))?;
    // A pool that already exists keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs the experiment and writes its files; returns the stdout report.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let start = Instant::now();
    let out = experiments::run(cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let csv_name = format!("{}.csv", cfg.experiment.name());
    let csv_path = dir.join(&csv_name);
    let file = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    out.table.write_csv(std::io::BufWriter::new(file)).map_err(|e| io_err(&csv_path, e))?;

    let parameters: serde_json::Map<String, serde_json::Value> =
        cfg.to_pairs().into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "preset": cfg.preset.map(Preset::name),
        "parameters": parameters,
        "outputs": [csv_name],
        "rows": out.table.rows.len(),
        "summary": out.summary,
        "passed": out.ok,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let manifest_path = dir.join("manifest.json");
    let mut f = fs::File::create(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    writeln!(f, "{text}").map_err(|e| io_err(&manifest_path, e))?;

    let mut report = out.report;
    report.push(format!("wrote {} ({} rows) and manifest.json", csv_path.display(), out.table.rows.len()));
    if !out.ok {
        for line in &report {
            println!("{line}");
        }
        return Err(CliError::ValidationFailed);
    }
    Ok(report)
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with_args(argv: &[String]) -> i32 {
    let result = parse_config(argv).and_then(|cmd| match cmd {
        Command::Help => {
            print!("{USAGE}");
            Ok(())
        }
        Command::Run(cfg) => {
            configure_threads()?;
            for line in run_experiment(&cfg)? {
                println!("{line}");
            }
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nonrecip: {e}");
            e.exit_code()
        }
    }
}
