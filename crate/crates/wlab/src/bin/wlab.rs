//! Thin command-line front end: loads an experiment config, checks that the
//! subcommand matches its `experiment` field, and hands off to the runner.
//! Exit status: 0 on success, 2 for configuration problems, 1 for runtime
//! failures.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wlab::config::{ExperimentConfig, ExperimentKind};
use wlab::runner::{run, RunOverrides};

#[derive(Parser)]
#[command(
    name = "wlab",
    version,
    about = "Conductance-diffusion numerical laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study of the resolvent solve
    Elliptic(CommonArgs),
    /// Zero-mass elliptic solve (errors on incompatible data)
    Neumann(CommonArgs),
    /// Nonlinear diffusion integration with energy/mass summary
    Parabolic(CommonArgs),
    /// Random-environment shrinking-gap experiment
    Homogenize(CommonArgs),
    /// Particle system versus integrated equation
    Hydro(CommonArgs),
    /// Fast exact-identity suite
    Selftest(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's seed list with a single master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores); results are identical either way
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Elliptic(_) => ExperimentKind::Elliptic,
            Command::Neumann(_) => ExperimentKind::Neumann,
            Command::Parabolic(_) => ExperimentKind::Parabolic,
            Command::Homogenize(_) => ExperimentKind::Homogenize,
            Command::Hydro(_) => ExperimentKind::Hydro,
            Command::Selftest(_) => ExperimentKind::Selftest,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Elliptic(a)
            | Command::Neumann(a)
            | Command::Parabolic(a)
            | Command::Homogenize(a)
            | Command::Hydro(a)
            | Command::Selftest(a) => a,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.args();

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let config: ExperimentConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config parse: {e}");
            return ExitCode::from(2);
        }
    };
    if config.experiment != cli.command.kind() {
        eprintln!(
            "error: config declares experiment `{}` but the `{}` subcommand was invoked",
            config.experiment.name(),
            cli.command.kind().name()
        );
        return ExitCode::from(2);
    }

    let overrides = RunOverrides {
        output_dir: args.out.clone(),
        seed: args.seed,
        threads: args.threads,
    };
    match run(&config, &overrides) {
        Ok(outcome) => {
            for artifact in &outcome.artifacts {
                println!("wrote {}", artifact.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
