//! Command-line front end. Every command reads one JSON config (see
//! [`config`]) and writes its outputs into one directory.
//!
//! Exit codes: 0 converged (or all checks passed), 1 configuration or data
//! error, 2 iteration budget exhausted, 3 numerical failure, 4 a
//! certification check failed.

pub mod archive;
mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::problem::Status;
use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECKS_FAILED: i32 = 4;

pub fn status_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_OK,
        Status::MaxIterReached => EXIT_MAX_ITER,
        Status::NumericalFailure => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "ineqalm", version, about = "Linearized ALM solvers for inequality-constrained convex programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for generators (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve a dense QP / ℓ1 problem given as CSV files.
    SolveQp,
    /// Train a hard-margin linear SVM.
    Svm,
    /// Segment an image or volume with the Potts max-flow model.
    Potts,
    /// Certify every iteration on the built-in suite or a user QP.
    Certify,
    /// Run independent solves over a list of τ values.
    SweepTau,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SolveQp => "solve-qp",
            Command::Svm => "svm",
            Command::Potts => "potts",
            Command::Certify => "certify",
            Command::SweepTau => "sweep-tau",
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match try_run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::NonSeparable { .. }) {
                eprintln!("hint: the SVM data must be linearly separable; raise svm.generator.separation");
            }
            EXIT_CONFIG
        }
    }
}

fn try_run(cli: &Cli) -> crate::Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None if cli.command == Command::SolveQp => {
            return Err(Error::Config("solve-qp requires --config".into()));
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("ineqalm-out").join(cli.command.name()));
    let ctx = commands::Context {
        out,
        quiet: cli.quiet,
        seed_override: cli.seed,
    };
    match cli.command {
        Command::SolveQp => commands::solve_qp(&cfg, &ctx),
        Command::Svm => commands::svm(&cfg, &ctx),
        Command::Potts => commands::potts(&cfg, &ctx),
        Command::Certify => commands::certify(&cfg, &ctx),
        Command::SweepTau => commands::sweep_tau(&cfg, &ctx),
    }
}
