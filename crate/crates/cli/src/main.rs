use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hk_lab::{run_with_threads, write_reports, ExperimentConfig, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "hk-lab", version, about = "Heat-kernel experiments with reproducible reports")]
struct Args {
    /// besov-check, parametrix, cauchy, verify-upper, verify-lower, sharpness,
    /// escape, grr, mollify-sweep, ibound-table or all
    subcommand: String,
    /// Configuration file (`key = value` with dotted sections, or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report directory; overrides `output` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match drive(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hk-lab: {e}");
            ExitCode::from(2)
        }
    }
}

fn drive(args: &Args) -> Result<bool, hk_lab::CliError> {
    let cmd: Subcommand = args.subcommand.parse()?;
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.mc.seed = s;
    }
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output));
    let reports = run_with_threads(cmd, &cfg, args.threads)?;
    let paths = write_reports(&dir, &cfg, &reports)?;
    let mut ok = true;
    for (r, p) in reports.iter().zip(&paths) {
        println!("{} {}", r.status(), p.display());
        ok &= r.violations.is_empty();
    }
    Ok(ok)
}
