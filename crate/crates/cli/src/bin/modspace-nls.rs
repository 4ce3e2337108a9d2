use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modspace_core::spectral::{ConstantsReport, Exponent};
use modspace_nls::config;

#[derive(Parser)]
#[command(
    name = "modspace-nls",
    version,
    about = "Run modulation-space NLS experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config, with optional KEY=VALUE overrides.
    Run {
        config: PathBuf,
        overrides: Vec<String>,
    },
    /// Print the closed-form constants as JSON.
    Constants {
        #[arg(long)]
        d: usize,
        #[arg(long, action = clap::ArgAction::Set)]
        gamma_zero: bool,
        #[arg(long)]
        m: u32,
        /// Lebesgue exponent; `inf` allowed. Defaults to m + 2.
        #[arg(long)]
        p: Option<String>,
    },
    /// Check a config without running it.
    Validate {
        config: PathBuf,
        overrides: Vec<String>,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(u8::try_from(c).unwrap_or(1))
}

fn constants(d: usize, gamma_zero: bool, m: u32, p: Option<String>) -> Result<String, String> {
    let p = match p.as_deref() {
        None => Exponent::new(m as f64 + 2.0),
        Some("inf" | "infinity") => Exponent::new(f64::INFINITY),
        Some(text) => Exponent::new(text.parse::<f64>().map_err(|e| format!("--p: {e}"))?),
    }
    .map_err(|e| format!("--p: {e}"))?;
    let report = ConstantsReport::new(d, gamma_zero, m, p).map_err(|e| e.to_string())?;
    serde_json::to_string_pretty(&report).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, overrides } => match modspace_nls::run_file(&config, &overrides) {
            Ok((record, dir)) => {
                println!(
                    "{}: {} -> {}",
                    record.config.name,
                    record.verdict,
                    dir.display()
                );
                code(record.exit_code())
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(e.exit_code())
            }
        },
        Command::Constants {
            d,
            gamma_zero,
            m,
            p,
        } => match constants(d, gamma_zero, m, p) {
            Ok(json) => {
                println!("{json}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(2)
            }
        },
        Command::Validate { config, overrides } => match config::load(&config, &overrides) {
            Ok(c) => {
                println!("{}: ok ({})", c.name, c.experiment.kind());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(2)
            }
        },
    }
}
