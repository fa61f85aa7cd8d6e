use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use dmb_cli::config::{parse_invocation, Command};

/// Distributed mini-batch simulator.
///
/// Settings are `--key value` pairs (for example `--m 100000 --net.k 16
/// --b 64`), optionally on top of `--config FILE` with `key=value` lines.
/// `--out PATH` names the CSV; a `PATH.summary` file is written next to it.
/// Without `--out`, output goes to `$DMBSIM_OUT_DIR` (default: the current
/// directory).
#[derive(Debug, Parser)]
#[command(name = "dmbsim", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// `--key value` settings and positional arguments.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    args: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parse_invocation(cli.command, &cli.args).and_then(|inv| dmb_cli::execute(&inv));
    match result {
        Ok(lines) => {
            let mut stdout = std::io::stdout().lock();
            for line in lines {
                if writeln!(stdout, "{line}").is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dmbsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
