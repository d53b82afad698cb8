//! `tma`: batch studies of a single-sideband time-modulated phased array.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 numerical or degenerate
//! input.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{Outcome, Scenario, DEFAULT_SWEEP};
use crate::config::ScenarioConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "tma",
    version,
    about = "Single-sideband time-modulated phased array simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relative harmonic levels received at one angle.
    Spectrum {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        steer: f64,
        #[arg(long, default_value_t = -5, allow_hyphen_values = true)]
        h_min: i64,
        #[arg(long, default_value_t = 5, allow_hyphen_values = true)]
        h_max: i64,
        #[command(flatten)]
        common: Common,
    },
    /// Array-factor cut at one harmonic.
    Pattern {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        steer: f64,
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        harmonic: i64,
        #[arg(long, default_value_t = 0.1)]
        grid_step: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Pattern cuts over a range of steer angles with beam metrics.
    Scan {
        #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 40.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 10.0)]
        step: f64,
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        harmonic: i64,
        #[arg(long, default_value_t = 0.1)]
        grid_step: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Per-element switching timings for a steer angle.
    Schedule {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        steer: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Insertion loss of the -1st harmonic versus window duty.
    SweepLoss {
        /// Comma-separated tau/T_p values in (0, 0.25].
        #[arg(long, value_delimiter = ',')]
        fractions: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    clock_hz: Option<f64>,
    #[arg(long)]
    error_bound_deg: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Element timings exported by `schedule`, used instead of synthesized ones.
    #[arg(long)]
    timings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Common {
    fn scenario(&self) -> Result<Scenario, CliError> {
        let mut config = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(c) = self.clock_hz {
            config.clock_hz = Some(c);
        }
        if let Some(b) = self.error_bound_deg {
            config.phase_error_bound_deg = b;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        config.validate()?;
        let timings = match &self.timings {
            Some(path) => Some(commands::read_timings(path, config.period())?),
            None => None,
        };
        Ok(Scenario { config, timings })
    }

    fn emit(&self, outcome: Outcome) -> Result<(), CliError> {
        let text = match self.format {
            Format::Csv => outcome.report.to_csv(),
            Format::Json => outcome.report.to_json(),
        };
        if let Some(path) = &self.svg {
            let plot = outcome.plot.ok_or_else(|| {
                CliError::Usage(format!(
                    "no plot is available for `{}`",
                    outcome.report.command
                ))
            })?;
            fs::write(path, plot.render())?;
        }
        match &self.out {
            Some(path) => fs::write(path, text)?,
            None => {
                let mut stdout = io::stdout().lock();
                match stdout
                    .write_all(text.as_bytes())
                    .and_then(|()| stdout.flush())
                {
                    Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
                    other => other?,
                }
            }
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum {
            theta,
            steer,
            h_min,
            h_max,
            common,
        } => common.emit(commands::spectrum(
            &common.scenario()?,
            steer,
            theta,
            h_min,
            h_max,
        )?),
        Command::Pattern {
            steer,
            harmonic,
            grid_step,
            common,
        } => common.emit(commands::pattern(
            &common.scenario()?,
            steer,
            harmonic,
            grid_step,
        )?),
        Command::Scan {
            from,
            to,
            step,
            harmonic,
            grid_step,
            common,
        } => common.emit(commands::scan(
            &common.scenario()?,
            from,
            to,
            step,
            harmonic,
            grid_step,
        )?),
        Command::Schedule { steer, common } => {
            common.emit(commands::schedule(&common.scenario()?, steer)?)
        }
        Command::SweepLoss { fractions, common } => {
            let fractions = if fractions.is_empty() {
                DEFAULT_SWEEP.to_vec()
            } else {
                fractions
            };
            common.emit(commands::sweep_loss(&common.scenario()?, &fractions)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tma: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
