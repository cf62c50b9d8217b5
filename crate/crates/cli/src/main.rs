use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contact_gap_cli::{build_spec, dry_run, refit_dir, run, CliError, Experiment, Manifest, Overrides};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "contact-gap", version, about = "Contact-process experiments: exact spectra and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML file with `[mc]` and `[params]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Infection rate λ.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Last observation time; the grid becomes 0, 0.5, …, horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Override any config field: `--set sides=[1,2,3]`, `--set burn_in=30.0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Root of the output tree.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Validate and print the light-cone window radius without simulating.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Exact spectrum and gap of the finite-volume generator.
    GapExact(Common),
    /// Self-duality, forward against dual.
    Duality(Common),
    /// Finite-volume duality with an infected exterior.
    FiniteDuality(Common),
    /// Extinction by initial size and late extinction by time.
    Extinction(Common),
    /// Growth of a single infection given survival.
    Growth(Common),
    /// Decay of the effect of a single flip.
    Discrepancy(Common),
    /// Second moment of the discrepancy set.
    Cluster(Common),
    /// Variance decay of `P_t f` under the invariant measure.
    Variance(Common),
    /// Stochastic domination by first-passage percolation.
    FppDomination(Common),
    /// Total-variation convergence of finite-volume marginals.
    TvConvergence(Common),
    /// Repeat a run from its manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Recompute the fits of a run directory from its data.csv.
    Refit { dir: PathBuf },
}

fn experiment_run(experiment: Experiment, c: Common) -> Result<Value, CliError> {
    let text = match &c.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
        None => None,
    };
    let o = Overrides {
        seed: c.seed,
        replicas: c.replicas,
        lambda: c.lambda,
        dim: c.dim,
        horizon: c.horizon,
        sets: c.sets,
    };
    let spec = build_spec(experiment, text.as_deref(), &o)?;
    if c.dry_run {
        return dry_run(&spec);
    }
    Ok(run(&spec, &c.out, chrono::Utc::now())?.1)
}

fn dispatch(cmd: Command) -> Result<Value, CliError> {
    let (e, c) = match cmd {
        Command::Rerun { manifest, out } => {
            let m = Manifest::load(&manifest)?;
            return Ok(run(&m.spec, &out, chrono::Utc::now())?.1);
        }
        Command::Refit { dir } => return refit_dir(&dir),
        Command::GapExact(c) => (Experiment::GapExact, c),
        Command::Duality(c) => (Experiment::Duality, c),
        Command::FiniteDuality(c) => (Experiment::FiniteDuality, c),
        Command::Extinction(c) => (Experiment::Extinction, c),
        Command::Growth(c) => (Experiment::Growth, c),
        Command::Discrepancy(c) => (Experiment::Discrepancy, c),
        Command::Cluster(c) => (Experiment::Cluster, c),
        Command::Variance(c) => (Experiment::Variance, c),
        Command::FppDomination(c) => (Experiment::FppDomination, c),
        Command::TvConvergence(c) => (Experiment::TvConvergence, c),
    };
    experiment_run(e, c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(v) => {
            // a closed pipe (`| head`) is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = e.report();
            let _ = writeln!(std::io::stdout(), "{}", serde_json::json!({ "status": "error", "error": report }));
            ExitCode::from(report.exit_code as u8)
        }
    }
}
