//! Command-line wiring: configuration, seeds, and the four commands
//! (`synthesize`, `validate-single`, `validate-successive`, `window-prob`).
//!
//! Every command takes `--config <file>`, `--seed <u64>` and `--out <dir>`;
//! individual config keys can be overridden by flags of the same names, and
//! flags win over the file. All randomness flows from the single master seed,
//! so re-running a command reproduces its outputs byte for byte.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod commands;
pub mod config;
pub mod report;

pub use commands::{cmd_synthesize, cmd_validate_single, cmd_validate_successive, cmd_window_prob};
pub use config::{ModelSpec, RunConfig, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("model does not satisfy condition {condition} required for {what} (status: {status})")]
    ConditionRefused {
        condition: String,
        what: String,
        status: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Acf(#[from] crate::acf::AcfError),

    #[error(transparent)]
    Gp(#[from] crate::gp::GpError),

    #[error(transparent)]
    Crossings(#[from] crate::crossings::CrossingsError),

    #[error(transparent)]
    Theory(#[from] crate::theory::TheoryError),

    #[error(transparent)]
    Successive(#[from] crate::successive::SuccessiveError),
}

/// Single-level law selector for `validate-single`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SingleLaw {
    #[value(name = "large_excursion")]
    LargeExcursion,
    #[value(name = "interval_erlang")]
    IntervalErlang,
    #[value(name = "negative_excursion")]
    NegativeExcursion,
    #[value(name = "rice_rate")]
    RiceRate,
}

impl SingleLaw {
    pub fn name(&self) -> &'static str {
        match self {
            SingleLaw::LargeExcursion => "large_excursion",
            SingleLaw::IntervalErlang => "interval_erlang",
            SingleLaw::NegativeExcursion => "negative_excursion",
            SingleLaw::RiceRate => "rice_rate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "level-crossings",
    about = "Level-crossing statistics of stationary Gaussian processes: synthesis, detection, closed forms, and Monte Carlo validation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize sample paths and export them as t,x CSV files
    Synthesize(CommonArgs),
    /// Validate one single-level law against simulation
    ValidateSingle {
        /// Which law to validate
        #[arg(long, value_enum)]
        which: SingleLaw,
        #[command(flatten)]
        args: CommonArgs,
    },
    /// Validate the successive-level conditional statistics (mean
    /// up-crossings over a Δγ sweep and the mixed law of T₂)
    ValidateSuccessive(CommonArgs),
    /// Evaluate the windowed successive-excursion probability with its
    /// Monte Carlo cross-check
    WindowProb(CommonArgs),
}

/// Shared flags; every config key is overridable by the flag of the same
/// name.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file (key = value lines with optional [sections])
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides master_seed)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (overrides out_dir)
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long = "kind")]
    pub kind: Option<String>,
    #[arg(long = "d_c")]
    pub d_c: Option<f64>,
    #[arg(long = "table")]
    pub table: Option<PathBuf>,
    #[arg(long = "dt")]
    pub dt: Option<f64>,
    #[arg(long = "total_time")]
    pub total_time: Option<f64>,
    #[arg(long = "replicates")]
    pub replicates: Option<u64>,
    #[arg(long = "gamma")]
    pub gamma: Option<f64>,
    #[arg(long = "gamma1")]
    pub gamma1: Option<f64>,
    #[arg(long = "gamma2")]
    pub gamma2: Option<f64>,
    #[arg(long = "tau1")]
    pub tau1: Option<f64>,
    #[arg(long = "tau2")]
    pub tau2: Option<f64>,
    #[arg(long = "delta_gamma_max")]
    pub delta_gamma_max: Option<f64>,
    #[arg(long = "delta_gamma_steps")]
    pub delta_gamma_steps: Option<usize>,
    #[arg(long = "min_events")]
    pub min_events: Option<usize>,
    #[arg(long = "tolerance")]
    pub tolerance: Option<f64>,
    #[arg(long = "tolerance_k")]
    pub tolerance_k: Option<f64>,
    #[arg(long = "atom_tolerance")]
    pub atom_tolerance: Option<f64>,
    #[arg(long = "oracle_samples")]
    pub oracle_samples: Option<u64>,
    #[arg(long = "experiment")]
    pub experiment: Option<String>,
}

impl CommonArgs {
    /// File config (or defaults) with flag overrides applied on top.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let mut set = |key: &str, value: Option<String>| -> Result<(), CliError> {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
            Ok(())
        };
        set("kind", self.kind.clone())?;
        set("d_c", self.d_c.map(|v| v.to_string()))?;
        set("table", self.table.as_ref().map(|p| p.display().to_string()))?;
        set("dt", self.dt.map(|v| v.to_string()))?;
        set("total_time", self.total_time.map(|v| v.to_string()))?;
        set("replicates", self.replicates.map(|v| v.to_string()))?;
        set("master_seed", self.seed.map(|v| v.to_string()))?;
        set("gamma", self.gamma.map(|v| v.to_string()))?;
        set("gamma1", self.gamma1.map(|v| v.to_string()))?;
        set("gamma2", self.gamma2.map(|v| v.to_string()))?;
        set("tau1", self.tau1.map(|v| v.to_string()))?;
        set("tau2", self.tau2.map(|v| v.to_string()))?;
        set("delta_gamma_max", self.delta_gamma_max.map(|v| v.to_string()))?;
        set(
            "delta_gamma_steps",
            self.delta_gamma_steps.map(|v| v.to_string()),
        )?;
        set("min_events", self.min_events.map(|v| v.to_string()))?;
        set("tolerance", self.tolerance.map(|v| v.to_string()))?;
        set("tolerance_k", self.tolerance_k.map(|v| v.to_string()))?;
        set("atom_tolerance", self.atom_tolerance.map(|v| v.to_string()))?;
        set("oracle_samples", self.oracle_samples.map(|v| v.to_string()))?;
        set("experiment", self.experiment.clone())?;
        set("out_dir", self.out.as_ref().map(|p| p.display().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Run a parsed command; Ok(true) when every requested validation passed.
pub fn run(cli: Cli) -> Result<bool, CliError> {
    match &cli.command {
        Command::Synthesize(args) => cmd_synthesize(&args.resolve()?),
        Command::ValidateSingle { which, args } => cmd_validate_single(&args.resolve()?, *which),
        Command::ValidateSuccessive(args) => cmd_validate_successive(&args.resolve()?),
        Command::WindowProb(args) => cmd_window_prob(&args.resolve()?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        std::fs::write(&file, "[run]\ndt = 0.2\ntotal_time = 500\nmaster_seed = 7\n").unwrap();
        let args = CommonArgs {
            config: Some(file),
            seed: Some(99),
            out: None,
            kind: None,
            d_c: None,
            table: None,
            dt: Some(0.5),
            total_time: None,
            replicates: None,
            gamma: None,
            gamma1: None,
            gamma2: None,
            tau1: None,
            tau2: None,
            delta_gamma_max: None,
            delta_gamma_steps: None,
            min_events: None,
            tolerance: None,
            tolerance_k: None,
            atom_tolerance: None,
            oracle_samples: None,
            experiment: None,
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.dt, 0.5);
        assert_eq!(cfg.total_time, 500.0);
        assert_eq!(cfg.master_seed, 99);
    }

    #[test]
    fn cli_parses_subcommands() {
        let cli = Cli::try_parse_from([
            "level-crossings",
            "validate-single",
            "--which",
            "large_excursion",
            "--gamma",
            "2.5",
        ])
        .unwrap();
        match cli.command {
            Command::ValidateSingle { which, args } => {
                assert_eq!(which, SingleLaw::LargeExcursion);
                assert_eq!(args.gamma, Some(2.5));
            }
            _ => panic!("wrong subcommand"),
        }
    }
}
