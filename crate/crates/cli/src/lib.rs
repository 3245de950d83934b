//! `dvc` command-line front end: loads representations, runs the DVC
//! engine, kappa, RSA and the synthetic sweeps, and writes plot-ready
//! CSV/JSON. Every command takes a mandatory `--seed` and is a pure
//! function of its inputs.

mod commands;
pub mod output;
mod report;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dvc", version, about = "Decision variable correlation between paired representations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags every command shares.
#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Root seed; there is no default.
    #[arg(long)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// DVC between two observers of the same stimuli.
    DvcPair {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// One label per stimulus row, shared by both observers.
        #[arg(long)]
        labels: PathBuf,
        /// TOML file with DvcConfig fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// DVC for every pair of observers in a registry.
    DvcMatrix {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Cohen's kappa on trial-wise correctness.
    Kappa {
        /// Representation matrix (logreg) or fine-class probabilities (groupmean).
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// True class per row.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum)]
        decoder: Decoder,
        /// `fine,coarse` rows; required for groupmean.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Category-level RSA between two observers.
    Rsa {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic sweeps: latent recovery, decision bias, shared fluctuation.
    Simulate {
        #[arg(long, value_enum)]
        kind: SimKind,
        /// TOML spec; omitted fields take their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Merge the `rows` of several JSON outputs into one long-format CSV.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Logreg,
    Groupmean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimKind {
    Recovery,
    Bias,
    Shared,
}

/// How completely a command succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    /// Some pairs or entries were degenerate or failed.
    Partial,
    /// Outputs were written but nothing could be computed.
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Complete => 0,
            Status::Partial => 2,
            Status::Failed => 1,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::DvcPair { a, b, labels, config, common } => commands::dvc_pair(&a, &b, &labels, config.as_deref(), &common),
        Command::DvcMatrix { registry, config, common } => commands::dvc_matrix(&registry, config.as_deref(), &common),
        Command::Kappa { a, b, labels, decoder, groups, folds, common } => {
            commands::kappa(&a, &b, &labels, decoder, groups.as_deref(), folds, &common)
        }
        Command::Rsa { a, b, labels, common } => commands::rsa(&a, &b, &labels, &common),
        Command::Simulate { kind, spec, common } => commands::simulate(kind, spec.as_deref(), &common),
        Command::Report { inputs, common } => report::report(&inputs, &common),
    }
}
