//! `dmbsim`: configuration-driven experiments over the `dmb_core` engines.
//!
//! Simulating commands write a CSV of average-loss checkpoints and a
//! `<csv>.summary` file holding the seed, the full configuration and the
//! aggregated results; `replay` re-runs a summary and checks the CSV
//! byte for byte.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

use std::path::{Path, PathBuf};

use config::{Command, Config, Invocation};
use error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DMBSIM_OUT_DIR";

fn default_out(command: Command) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("{}.csv", command.name()))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Runs `config`, returning the CSV bytes and the report.
pub fn render(config: &Config) -> CliResult<(Option<Vec<u8>>, experiment::Report)> {
    let report = experiment::run(config)?;
    let csv = report.rows.as_deref().map(output::csv_bytes).transpose()?;
    Ok((csv, report))
}

/// Executes one invocation and returns the lines to print.
pub fn execute(inv: &Invocation) -> CliResult<Vec<String>> {
    if inv.config.command == Command::Replay {
        let summary = inv
            .positional
            .first()
            .ok_or_else(|| CliError::Config("replay needs the path of a .summary file".into()))?;
        return replay(Path::new(summary));
    }
    let (csv, report) = render(&inv.config)?;
    let mut lines = report.stdout.clone();
    if let Some(csv) = csv {
        let out = inv.out.clone().unwrap_or_else(|| default_out(inv.config.command));
        write(&out, &csv)?;
        let summary = output::summary_text(&inv.config, Some(&out), &report.summary)?;
        let summary_path = output::summary_path(&out);
        write(&summary_path, summary.as_bytes())?;
        lines.push(format!("wrote {} and {}", out.display(), summary_path.display()));
        lines.extend(report.summary.iter().map(|(k, v)| format!("{k} = {v}")));
    } else if let Some(out) = &inv.out {
        let summary = output::summary_text(&inv.config, None, &report.summary)?;
        write(out, summary.as_bytes())?;
    }
    Ok(lines)
}

/// Re-runs the configuration recorded in `summary` and compares the CSV
/// byte for byte with the recorded one.
pub fn replay(summary: &Path) -> CliResult<Vec<String>> {
    let recorded = output::read_summary(summary)?;
    let expected = std::fs::read(&recorded.csv).map_err(|e| CliError::io(&recorded.csv, e))?;
    let (csv, _) = render(&recorded.config)?;
    let actual = csv.ok_or_else(|| CliError::Config("recorded command does not produce a CSV".into()))?;
    match output::first_divergence(&expected, &actual) {
        None => Ok(vec![format!(
            "replay ok: {} identical ({} bytes)",
            recorded.csv.display(),
            actual.len()
        )]),
        Some((row, expected, actual)) => Err(CliError::ReplayMismatch { row, expected, actual }),
    }
}
