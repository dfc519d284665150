use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tdcp_cli::csvout::{autocorr_csv, usecase_csv, write_output};
use tdcp_cli::report_tool;
use tdcp_cli::runner::{run_autocorr, run_calibrate, run_usecase, UseCase};
use tdcp_cli::{CliError, Scenario};

/// Link-level simulator for correlation-based channel time-variability
/// feedback: channel generators, TRS measurement, report coding and
/// threshold-switching evaluation.
#[derive(Parser)]
#[command(name = "tdcpsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// Scenario configuration file.
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario drop count.
    #[arg(long)]
    drops: Option<usize>,
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Correlation-amplitude-vs-delay curves (noiseless), per direction and
    /// speed, as CSV.
    Autocorr {
        #[command(flatten)]
        opts: RunOpts,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Precoding-type switching study (Type-I vs Type-II vs genie, plus the
    /// scenario policy when configured), as CSV.
    UsecaseA {
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// DMRS density switching study (1+1 vs 1+2 additional symbols), as CSV.
    UsecaseB {
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid-search the switching threshold for a use-case and emit a
    /// [policy] scenario fragment.
    Calibrate {
        #[command(flatten)]
        opts: RunOpts,
        /// Which use-case to calibrate for: a | b.
        #[arg(long)]
        usecase: String,
        /// Optional path for the policy fragment (also printed).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode or decode a report against the scenario's reporting
    /// configuration.
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
}

#[derive(Subcommand)]
enum ReportAction {
    /// Quantize amplitudes (and optional phases) into report bytes.
    Encode {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated amplitudes in [0, 1], one per configured delay.
        #[arg(long)]
        amplitudes: String,
        /// Comma-separated phases in radians (requires report_phase = true).
        #[arg(long)]
        phases: Option<String>,
        /// Measurement time in seconds.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
        /// Write the report bytes here (hex always goes to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse report bytes and print the dequantized values.
    Decode {
        #[arg(long)]
        scenario: PathBuf,
        /// Report bytes file.
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn load_scenario(opts: &RunOpts) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(&opts.scenario)?;
    if let Some(seed) = opts.seed {
        s.seed = seed;
    }
    if let Some(drops) = opts.drops {
        if drops == 0 {
            return Err(CliError::config("drops must be >= 1"));
        }
        s.drops = drops;
    }
    Ok(s)
}

fn parse_usecase(s: &str) -> Result<UseCase, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "a" => Ok(UseCase::A),
        "b" => Ok(UseCase::B),
        other => Err(CliError::config(format!(
            "unknown use-case '{other}' (expected a or b)"
        ))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Autocorr { opts, out } => {
            let s = load_scenario(&opts)?;
            let rows = run_autocorr(&s, opts.jobs)?;
            write_output(&out, &autocorr_csv(&rows))?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
        Command::UsecaseA { opts, out } => {
            let s = load_scenario(&opts)?;
            let rows = run_usecase(&s, UseCase::A, opts.jobs)?;
            write_output(&out, &usecase_csv(&rows, s.trs_snr_db, s.pdsch_snr_db))?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
        Command::UsecaseB { opts, out } => {
            let s = load_scenario(&opts)?;
            let rows = run_usecase(&s, UseCase::B, opts.jobs)?;
            write_output(&out, &usecase_csv(&rows, s.trs_snr_db, s.pdsch_snr_db))?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Calibrate { opts, usecase, out } => {
            let s = load_scenario(&opts)?;
            let which = parse_usecase(&usecase)?;
            let (delay, threshold, fragment) = run_calibrate(&s, which, opts.jobs)?;
            print!("{fragment}");
            if let Some(path) = out {
                write_output(&path, &fragment)?;
            }
            eprintln!("calibrated threshold {threshold:.4} at delay {delay}");
            Ok(())
        }
        Command::Report { action } => match action {
            ReportAction::Encode {
                scenario,
                amplitudes,
                phases,
                time,
                out,
            } => {
                let s = Scenario::load(&scenario)?;
                let (bytes, summary) =
                    report_tool::encode(&s, &amplitudes, phases.as_deref(), time)?;
                print!("{summary}");
                if let Some(path) = out {
                    std::fs::write(&path, &bytes).map_err(|e| {
                        CliError::runtime(format!("cannot write {}: {e}", path.display()))
                    })?;
                }
                Ok(())
            }
            ReportAction::Decode { scenario, input } => {
                let s = Scenario::load(&scenario)?;
                let bytes = std::fs::read(&input).map_err(|e| {
                    CliError::runtime(format!("cannot read {}: {e}", input.display()))
                })?;
                let text = report_tool::decode(&s, &bytes)?;
                print!("{text}");
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
