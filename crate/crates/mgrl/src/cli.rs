//! Argument parsing and command dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};
use crate::mdp_file::load_mdp;
use crate::run::cmd_run;
use crate::sweep::{cmd_sweep, parse_seeds};
use crate::verify::run_suite;

#[derive(Debug, Parser)]
#[command(
    name = "mgrl",
    version,
    about = "Multi-goal RL with Dirac rewards: verification, runs and sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a verification suite (or `all`).
    Verify {
        suite: String,
        /// Replace the threshold of every residual check.
        #[arg(long)]
        tol: Option<f64>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Train once from a TOML config.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train once per seed and aggregate final metrics.
    Sweep {
        config: PathBuf,
        /// Comma-separated seeds, e.g. 0,1,2,3,4.
        #[arg(long)]
        seeds: String,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// MDP file utilities.
    Mdp {
        #[command(subcommand)]
        command: MdpCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum MdpCommand {
    /// Parse and validate an MDP file.
    Validate { file: PathBuf },
}

/// Executes `cli`, printing to stdout. Errors carry the exit code.
pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Verify { suite, tol, json } => {
            if let Some(t) = tol {
                if !(t >= 0.0) {
                    return Err(CliError::Usage(format!("--tol {t} must be non-negative")));
                }
            }
            let report = run_suite(&suite, tol)?;
            for check in &report.checks {
                println!("{}", check.line());
            }
            println!(
                "{}: {}/{} checks passed",
                report.suite,
                report.checks.len() - report.failures(),
                report.checks.len()
            );
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
            }
            match report.failures() {
                0 => Ok(()),
                n => Err(CliError::Failed(n)),
            }
        }
        Command::Run { config, out } => {
            let result = cmd_run(&config, &out)?;
            for (name, value) in &result.final_metrics {
                println!("{name} = {value}");
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Sweep { config, seeds, out } => {
            let seeds = parse_seeds(&seeds)?;
            let agg = cmd_sweep(&config, &seeds, &out)?;
            for m in &agg.metrics {
                println!("{} = {} ± {} ({} runs)", m.metric, m.mean, m.std, m.runs);
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Mdp {
            command: MdpCommand::Validate { file },
        } => {
            let mdp = load_mdp(&file)?;
            println!(
                "{}: ok ({} states, {} actions, {} goals, discount {})",
                file.display(),
                mdp.n_states(),
                mdp.n_actions(),
                mdp.n_goals(),
                mdp.discount()
            );
            Ok(())
        }
    }
}
