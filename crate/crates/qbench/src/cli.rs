//! Argument parsing and dispatch; `main` only maps the result to an exit code.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use qbench_core::models::QlstmConfig;

use crate::error::{Error, Result};
use crate::plot::{cmd_plot, PlotOutput};
use crate::report::cmd_analyze;
use crate::runner::cmd_run;
use crate::verify::{format_table, run_all, VerifyOptions};

/// Verbosity is read from this variable (`error`, `warn`, `info`, `debug`).
pub const VERBOSITY_ENV: &str = "QBENCH_LOG";

#[derive(Debug, Parser)]
#[command(name = "qbench", version, about = "Batched quantum sequence-model benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment grid described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write report tables from a run directory's runs.csv.
    Analyze { dir: PathBuf },
    /// Write the Pareto plot for a run directory.
    Plot { dir: PathBuf },
    /// Run the numerical self-checks.
    Verify {
        /// Detector test: QLSTM hidden size (breaks parameter matching).
        #[arg(long, hide = true)]
        qlstm_hidden: Option<usize>,
        /// Detector test: gradient check tolerance.
        #[arg(long, hide = true)]
        gradient_tolerance: Option<f64>,
    },
}

/// Executes one command, printing its summary to stdout.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let summary = cmd_run(&config)?;
            println!("wrote {} records to {}", summary.records, summary.dir.display());
            if let Some(first) = summary.failures.first() {
                for f in &summary.failures {
                    eprintln!(
                        "failed: {} batch {} seed {} rep {}: {}",
                        f.cell.model, f.cell.batch, f.cell.seed, f.cell.rep, f.message
                    );
                }
                let msg = format!("{} cell(s) failed", summary.failures.len());
                return Err(match first.exit_code {
                    2 => Error::Data(msg),
                    1 => Error::Usage(msg),
                    _ => Error::Numerical(msg),
                });
            }
        }
        Command::Analyze { dir } => {
            let summary = cmd_analyze(&dir)?;
            println!("analyzed {} records in {}", summary.records, dir.display());
            for w in &summary.warnings {
                println!("warning: {w}");
            }
        }
        Command::Plot { dir } => match cmd_plot(&dir)? {
            PlotOutput::Svg { points } => println!("pareto.svg: {points} points"),
            PlotOutput::CsvOnly { points } => println!("{points} point(s): pareto.csv only, no figure"),
        },
        Command::Verify {
            qlstm_hidden,
            gradient_tolerance,
        } => {
            let mut opts = VerifyOptions::default();
            if let Some(h) = qlstm_hidden {
                opts.qlstm = QlstmConfig {
                    hidden: h,
                    ..opts.qlstm
                };
            }
            if let Some(tol) = gradient_tolerance {
                opts.gradient_tolerance = tol;
            }
            let results = run_all(&opts);
            print!("{}", format_table(&results));
            let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
            if !failed.is_empty() {
                return Err(Error::Numerical(format!("failed checks: {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}
