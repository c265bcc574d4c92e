//! Batch driver for the heatkernel experiments.
//!
//! Each subcommand builds its inputs from an [`ExperimentConfig`], runs one
//! recipe and writes plot-ready reports named `<report>-<config hash>.<ext>`.
//! A report whose invariants fail is still written, with the failed
//! invariants listed in its status line, and the process exits nonzero.

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod presets;
pub mod recipes;
pub mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use config::ExperimentConfig;
pub use report::Report;

use report::Meta;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] heatkernel::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    BesovCheck,
    Parametrix,
    Cauchy,
    VerifyUpper,
    VerifyLower,
    Sharpness,
    Escape,
    Grr,
    MollifySweep,
    IboundTable,
    All,
}

impl Subcommand {
    pub const EXPERIMENTS: [Subcommand; 10] = [
        Subcommand::BesovCheck,
        Subcommand::Parametrix,
        Subcommand::Cauchy,
        Subcommand::VerifyUpper,
        Subcommand::VerifyLower,
        Subcommand::Sharpness,
        Subcommand::Escape,
        Subcommand::Grr,
        Subcommand::MollifySweep,
        Subcommand::IboundTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::BesovCheck => "besov-check",
            Subcommand::Parametrix => "parametrix",
            Subcommand::Cauchy => "cauchy",
            Subcommand::VerifyUpper => "verify-upper",
            Subcommand::VerifyLower => "verify-lower",
            Subcommand::Sharpness => "sharpness",
            Subcommand::Escape => "escape",
            Subcommand::Grr => "grr",
            Subcommand::MollifySweep => "mollify-sweep",
            Subcommand::IboundTable => "ibound-table",
            Subcommand::All => "all",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::EXPERIMENTS
            .iter()
            .chain(std::iter::once(&Subcommand::All))
            .find(|c| c.name() == s)
            .copied()
            .ok_or_else(|| CliError::Config(format!("unknown subcommand {s}")))
    }
}

/// Runs one experiment (or all of them, in a fixed order).
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<Vec<Report>, CliError> {
    use recipes::*;
    Ok(match cmd {
        Subcommand::BesovCheck => vec![besov_check(cfg)?.report],
        Subcommand::Parametrix => parametrix(cfg)?.reports,
        Subcommand::Cauchy => vec![cauchy(cfg)?.report],
        Subcommand::VerifyUpper => vec![verify_upper(cfg)?.report],
        Subcommand::VerifyLower => vec![verify_lower(cfg)?.report],
        Subcommand::Sharpness => vec![sharpness(cfg)?.report],
        Subcommand::Escape => vec![escape(cfg)?.report],
        Subcommand::Grr => vec![grr(cfg)?.report],
        Subcommand::MollifySweep => vec![mollify_sweep(cfg)?.report],
        Subcommand::IboundTable => vec![ibound_table(cfg)?.report],
        Subcommand::All => {
            let mut out = Vec::new();
            for c in Subcommand::EXPERIMENTS {
                out.extend(run(c, cfg)?);
            }
            out
        }
    })
}

/// Writes reports and the schema into `dir`, returning the report paths.
pub fn write_reports(dir: &Path, cfg: &ExperimentConfig, reports: &[Report]) -> Result<Vec<PathBuf>, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let hash = cfg.hash();
    let mut paths = Vec::new();
    for r in reports {
        let meta = Meta {
            report: r.name.to_string(),
            config_hash: hash.clone(),
            seed: cfg.mc.seed,
            version: recipes::version().to_string(),
        };
        let path = dir.join(r.file_name(&hash));
        std::fs::write(&path, r.render(&meta)).map_err(io)?;
        paths.push(path);
    }
    let schema = serde_json::to_string_pretty(&report::schema()).expect("schema serializes") + "\n";
    std::fs::write(dir.join("schema.json"), schema).map_err(io)?;
    Ok(paths)
}

/// Runs `cmd` on a dedicated pool of `threads` workers (all cores if `None`).
pub fn run_with_threads(
    cmd: Subcommand,
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<Vec<Report>, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| run(cmd, cfg))
}
