use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use landau_lab::{run_subcommand, snapshot_norms, ExperimentConfig};

#[derive(Parser)]
#[command(name = "landau-lab", version, about = "Landau damping experiments for screened 2d Vlasov-Poisson")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for the numerics (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `solver.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct Run {
    /// Experiment config; defaults apply to anything left out.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Penrose margin scan of the equilibrium.
    Penrose(Run),
    /// Linearized density evolution and per-mode resolvents.
    Linear(Run),
    /// Characteristics diagnostics driven by the linear density.
    Flow(Run),
    /// Nonlinear fixed-point solve with continuation.
    Simulate(Run),
    /// Nonlinear solve followed by the scattering profile.
    Scatter(Run),
    /// Itemized norms of a snapshot.
    Norms {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        shift_scale: f64,
        /// Also write `norms.csv` into `--out`.
        #[arg(long)]
        csv: bool,
    },
}

fn load(run: &Run, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match &run.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.solver.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let (name, run) = match &cli.command {
        Command::Penrose(r) => ("penrose", r),
        Command::Linear(r) => ("linear", r),
        Command::Flow(r) => ("flow", r),
        Command::Simulate(r) => ("simulate", r),
        Command::Scatter(r) => ("scatter", r),
        Command::Norms { snapshot, a, shift_scale, csv } => {
            let report = snapshot_norms(snapshot, *a, *shift_scale, csv.then_some(&cli.out))?;
            print!("{}", report.to_text());
            return Ok(());
        }
    };
    let cfg = load(run, cli.seed)?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let report = run_subcommand(name, &cfg, &cli.out)?;
    print!("{}", report.to_text());
    Ok(())
}
