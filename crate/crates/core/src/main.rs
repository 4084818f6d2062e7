use clap::{Args, Parser, Subcommand};
use slip_lab::cli::{run, ExperimentKind, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

/// Stokes and Navier-Stokes flows with Navier slip: experiment runner.
#[derive(Parser)]
#[command(name = "slip-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a mesh and report its statistics.
    Mesh(Common),
    /// Steady slip-Stokes solve.
    Steady(Common),
    /// Resolvent norms along rays of the right half-plane.
    ResolventScan(Common),
    /// Linear Stokes evolution with energy bookkeeping.
    Evolve(Common),
    /// Navier-Stokes evolution with energy bookkeeping.
    Ns(Common),
    /// Lowest Stokes eigenpairs.
    Eigen(Common),
    /// Slip versus no-slip gaps as alpha grows.
    AlphaLimit(Common),
    /// Caccioppoli and reverse Hoelder checks at probe balls.
    LocalEst(Common),
    /// Every acceptance criterion, with a pass/fail table.
    FullAcceptance(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment description.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; the run goes to OUT/<name>/.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Mesh refinement level (halves h per level).
    #[arg(long)]
    level: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Mesh(c) => (ExperimentKind::Mesh, c),
        Command::Steady(c) => (ExperimentKind::Steady, c),
        Command::ResolventScan(c) => (ExperimentKind::ResolventScan, c),
        Command::Evolve(c) => (ExperimentKind::Evolve, c),
        Command::Ns(c) => (ExperimentKind::Ns, c),
        Command::Eigen(c) => (ExperimentKind::Eigen, c),
        Command::AlphaLimit(c) => (ExperimentKind::AlphaLimit, c),
        Command::LocalEst(c) => (ExperimentKind::LocalEst, c),
        Command::FullAcceptance(c) => (ExperimentKind::FullAcceptance, c),
    };
    let text = match &common.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("config error: cannot read {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let opt = RunOptions { kind, out: common.out, threads: common.threads, level: common.level };
    match run(text.as_deref(), &opt) {
        Ok(o) => {
            for l in &o.lines {
                println!("{l}");
            }
            println!("artifacts in {}", o.dir.display());
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
