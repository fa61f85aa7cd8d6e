//! CSV and summary serialization.

use std::path::{Path, PathBuf};

use crate::config::{Command, Config};
use crate::error::{CliError, CliResult};
use crate::experiment::Row;

pub const CSV_HEADER: [&str; 5] = ["variant", "trial", "t", "avg_loss", "regret"];

/// CSV bytes for `rows`: mandatory header, shortest round-trip floats, and
/// an empty field for a missing regret.
pub fn csv_bytes(rows: &[Row]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let wrap = |e: csv::Error| CliError::Run(format!("csv encoding failed: {e}"));
    w.write_record(CSV_HEADER).map_err(wrap)?;
    for r in rows {
        let regret = r.regret.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            r.variant.as_str(),
            &r.trial.to_string(),
            &r.t.to_string(),
            &r.avg_loss.to_string(),
            &regret,
        ])
        .map_err(wrap)?;
    }
    w.into_inner().map_err(|e| CliError::Run(format!("csv encoding failed: {e}")))
}

/// `<csv>.summary` next to the CSV.
pub fn summary_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".summary");
    csv.with_file_name(name)
}

/// Summary text: command, seed, CSV file name, every config entry, then the
/// report entries.
pub fn summary_text(config: &Config, csv: Option<&Path>, entries: &[(String, String)]) -> CliResult<String> {
    let mut lines = vec![
        format!("command={}", config.command),
        format!("seed={}", config.seed()?),
    ];
    if let Some(csv) = csv {
        let name = csv
            .file_name()
            .ok_or_else(|| CliError::Config(format!("bad output path {}", csv.display())))?;
        lines.push(format!("csv={}", name.to_string_lossy()));
    }
    lines.extend(config.to_summary_lines());
    lines.extend(entries.iter().map(|(k, v)| format!("{k}={v}")));
    Ok(lines.join("\n") + "\n")
}

/// Recorded run: the configuration and the CSV it produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRun {
    pub config: Config,
    pub csv: PathBuf,
}

/// Reads a summary file back into the configuration it was produced from.
/// The recorded seed wins over any `config.seed` entry.
pub fn read_summary(path: &Path) -> CliResult<RecordedRun> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut command = None;
    let mut seed = None;
    let mut csv = None;
    let mut entries = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("malformed summary line {line:?}")))?;
        match k {
            "command" => command = Some(v.parse::<Command>()?),
            "seed" => seed = Some(v.to_string()),
            "csv" => csv = Some(v.to_string()),
            _ => {
                if let Some(key) = k.strip_prefix("config.") {
                    entries.push((key.to_string(), v.to_string()));
                }
            }
        }
    }
    let command = command.ok_or_else(|| CliError::Config("summary lacks a command".into()))?;
    let csv = csv.ok_or_else(|| CliError::Config("summary lacks a csv entry".into()))?;
    let mut config = Config::new(command);
    for (k, v) in entries {
        config.set(&k, &v)?;
    }
    if let Some(seed) = seed {
        config.set("seed", &seed)?;
    }
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(RecordedRun {
        config,
        csv: dir.join(csv),
    })
}

/// First differing line of two CSV texts as `(data row, expected, actual)`;
/// the header is row 0.
pub fn first_divergence(expected: &[u8], actual: &[u8]) -> Option<(usize, String, String)> {
    let e = String::from_utf8_lossy(expected);
    let a = String::from_utf8_lossy(actual);
    let mut el = e.split('\n');
    let mut al = a.split('\n');
    let mut row = 0;
    loop {
        match (el.next(), al.next()) {
            (None, None) => return None,
            (x, y) if x == y => row += 1,
            (x, y) => {
                return Some((
                    row,
                    x.unwrap_or("<end of file>").to_string(),
                    y.unwrap_or("<end of file>").to_string(),
                ))
            }
        }
    }
}
