//! Batch experiment runner: configuration, dispatch and report emission.

mod config;
mod run;

use std::path::PathBuf;

use clap::{Args, Parser};

pub use config::{
    AdversaryKind, CounterexampleSpec, CurveSpec, EngineMode, EngineSpec, ExperimentConfig, ExperimentKind,
    OracleSpec, OutputFormat, PorositySpec,
};
pub use run::{emit_plot_data, run_experiment, ResolvedParams, RunReport, Verdict, ORTHOGONALITY_TOL};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "gamma-null", version, about = "Seeded measure-reduction experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub kind: ExperimentKind,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

/// Exit status of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    VerdictFailed,
}

/// Loads the config, applies flag overrides, runs and writes outputs.
pub fn execute(cli: &Cli) -> Result<(RunReport, Outcome)> {
    let mut config = ExperimentConfig::load(&cli.common.config)?;
    if let Some(seed) = cli.common.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.common.out_dir {
        config.out_dir = Some(dir.clone());
    }
    if let Some(format) = cli.common.format {
        config.format = format;
    }
    let report = run_experiment(cli.kind, &config)?;
    if let Some(dir) = &config.out_dir {
        report.write(dir, config.format)?;
    }
    let outcome = if report.passed() {
        Outcome::Pass
    } else {
        Outcome::VerdictFailed
    };
    Ok((report, outcome))
}
