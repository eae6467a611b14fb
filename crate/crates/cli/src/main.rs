use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wedgenet::runner::{self, error_json, exit_status_for, Outcome, RunConfig};
use wedgenet::Result;

/// Numerical checks for wedge-local nets built from two-sided chiral fields.
#[derive(Parser, Debug)]
#[command(name = "wedgenet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration. Defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory for reports and tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Multiplies every tolerance.
    #[arg(long, global = true)]
    tol_scale: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// S-matrix conditions, all generator locality pairs, translation covariance.
    CheckLocality,
    /// Writes the S-matrix diagonal as CSV with a JSON header.
    SmatrixTable,
    /// Extracts the two-particle S-matrix from collision states.
    Scatter,
    /// Compares warped convolution with the translation twist.
    BlsCompare,
    /// Charge decompositions, adjoint action and fixed-point witnesses.
    Fourier,
    /// Recomputes the pinned numerical baselines.
    Calibrate,
}

impl Command {
    fn stem(self) -> &'static str {
        match self {
            Self::CheckLocality => "check_locality",
            Self::SmatrixTable => "smatrix_table",
            Self::Scatter => "scatter",
            Self::BlsCompare => "bls_compare",
            Self::Fourier => "fourier",
            Self::Calibrate => "calibrate",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tol_scale {
        cfg.tol_scale = t;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = load(cli)?;
    if let Some(j) = cli.jobs {
        runner::set_jobs(j)?;
    }
    let out = match cli.command {
        Command::CheckLocality => runner::cmd_check_locality(&cfg)?,
        Command::SmatrixTable => runner::cmd_smatrix_table(&cfg)?,
        Command::Scatter => runner::cmd_scatter(&cfg)?,
        Command::BlsCompare => runner::cmd_bls_compare(&cfg)?,
        Command::Fourier => runner::cmd_fourier(&cfg)?,
        Command::Calibrate => runner::cmd_calibrate(&cfg)?,
    };
    out.write(&cfg.out_dir, cli.command.stem())?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for r in &out.reports {
                let worst = r.failing().first().map(|d| format!("  ({} = {:.3e} > {:.1e})", d.metric, d.value, d.tolerance));
                println!("{} {}{}", if r.pass { "PASS" } else { "FAIL" }, r.name, worst.unwrap_or_default());
            }
            ExitCode::from(out.status() as u8)
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_status_for(&e) as u8)
        }
    }
}
