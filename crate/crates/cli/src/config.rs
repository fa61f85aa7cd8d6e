//! Flat `key=value` experiment configuration.
//!
//! Keys are either top-level (`b`, `m`, `seed`, …) or carry a section prefix
//! (`problem.`, `rule.`, `net.`). A config file sets a base; `--key value`
//! flags override it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Command {
    Serial,
    Minibatch,
    Dmb,
    Nocomm,
    Interlaced,
    Opt,
    SweepBatch,
    SweepLatency,
    Bounds,
    Speedup,
    BatchSize,
    Replay,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Serial => "serial",
            Command::Minibatch => "minibatch",
            Command::Dmb => "dmb",
            Command::Nocomm => "nocomm",
            Command::Interlaced => "interlaced",
            Command::Opt => "opt",
            Command::SweepBatch => "sweep-batch",
            Command::SweepLatency => "sweep-latency",
            Command::Bounds => "bounds",
            Command::Speedup => "speedup",
            Command::BatchSize => "batch-size",
            Command::Replay => "replay",
        }
    }

    /// Commands that simulate and write a CSV.
    pub fn writes_csv(&self) -> bool {
        !matches!(self, Command::Bounds | Command::Speedup | Command::BatchSize | Command::Replay)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        Command::from_str_name(s)
    }
}

impl Command {
    fn from_str_name(s: &str) -> CliResult<Self> {
        <Command as ValueEnum>::from_str(s, false).map_err(|_| CliError::Config(format!("unknown command {s:?}")))
    }
}

pub const TOP_LEVEL_KEYS: &[&str] = &[
    "b", "b_list", "mu_list", "m", "trials", "seed", "per_node_b", "rho", "theta", "delta", "D", "L", "sigma2",
    "F0", "gamma0", "eps_list", "batch_mode",
];

pub const SECTION_KEYS: &[&str] = &[
    "problem.kind",
    "problem.dim",
    "problem.w_star",
    "problem.sigma_z",
    "problem.sparsity",
    "problem.density",
    "problem.label_noise",
    "rule.kind",
    "rule.set",
    "rule.radius",
    "rule.lower",
    "rule.upper",
    "rule.lambda",
    "rule.generator",
    "rule.weights",
    "rule.schedule",
    "rule.gamma",
    "rule.beta",
    "net.kind",
    "net.k",
    "net.arity",
    "net.file",
    "net.latency",
    "net.rate",
    "net.root",
    "net.mu",
    "net.root_broadcast",
];

/// Short flag names and the key they set.
const ALIASES: &[(&str, &str)] = &[
    ("k", "net.k"),
    ("mu", "net.mu"),
    ("latency", "net.latency"),
    ("rate", "net.rate"),
    ("topology", "net.kind"),
    ("root", "net.root"),
    ("rule", "rule.kind"),
    ("lambda", "rule.lambda"),
    ("gamma", "rule.gamma"),
    ("problem", "problem.kind"),
    ("dim", "problem.dim"),
    ("sigma_z", "problem.sigma_z"),
];

fn canonical_key(key: &str) -> CliResult<String> {
    let key = ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map(|(_, full)| *full)
        .unwrap_or(key);
    if TOP_LEVEL_KEYS.contains(&key) || SECTION_KEYS.contains(&key) {
        Ok(key.to_string())
    } else {
        Err(CliError::Config(format!("unknown key {key:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub command: Command,
    values: BTreeMap<String, String>,
}

/// Parsed command line beyond the configuration itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub config: Config,
    pub out: Option<PathBuf>,
    /// Positional arguments (the summary file for `replay`).
    pub positional: Vec<String>,
}

impl Config {
    pub fn new(command: Command) -> Self {
        Config {
            command,
            values: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = canonical_key(key)?;
        self.values.insert(key, value.trim().to_string());
        Ok(())
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    pub fn merge_text(&mut self, text: &str) -> CliResult<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got {line:?}", no + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.merge_text(&text)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_value<T: FromStr>(&self, key: &str, value: &str) -> CliResult<T> {
        value
            .parse()
            .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.raw(key).map(|v| self.parse_value(key, v)).transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| self.parse_value(key, s))
                    .collect()
            })
            .transpose()
    }

    pub fn get_str<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.get_or("seed", 1)
    }

    /// Serialized form used in summaries: one `config.key=value` per line.
    pub fn to_summary_lines(&self) -> Vec<String> {
        self.values.iter().map(|(k, v)| format!("config.{k}={v}")).collect()
    }
}

/// Splits `args` (everything after the command) into `--key value` /
/// `--key=value` settings, `--config FILE`, `--out PATH` and positional
/// arguments. Settings override the config file regardless of order.
pub fn parse_invocation(command: Command, args: &[String]) -> CliResult<Invocation> {
    let mut settings = Vec::new();
    let mut config_file = None;
    let mut out = None;
    let mut positional = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            positional.push(arg.clone());
            continue;
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = iter
                    .next()
                    .ok_or_else(|| CliError::Config(format!("--{flag} needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        match key.as_str() {
            "config" => config_file = Some(PathBuf::from(value)),
            "out" => out = Some(PathBuf::from(value)),
            _ => settings.push((key, value)),
        }
    }
    let mut config = Config::new(command);
    if let Some(path) = &config_file {
        config.merge_file(path)?;
    }
    for (k, v) in settings {
        config.set(&k, &v)?;
    }
    Ok(Invocation {
        config,
        out,
        positional,
    })
}
