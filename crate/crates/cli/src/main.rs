//! `lab` — drive the mean-value experiments from the command line.
//!
//! Exit codes: 0 all pass, 1 any fail under `--strict`, 2 config error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use lab_core::harness::{run_experiment, ExperimentConfig, ExperimentKind, Verdict};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lab", version, about = "Lattice mean-value laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean of a single Siegel transform against its integral formula.
    Siegel(RunArgs),
    /// Multiple primal sums against the subspace-series right-hand side.
    Rogers(RunArgs),
    /// Joint sums over a lattice and its dual against the full assembly.
    Dual(RunArgs),
    /// Pairing-constrained primitive sums against the fiber integral.
    Fbeta(RunArgs),
    /// Weight-function property suite.
    Weights(RunArgs),
    /// Counting moments against the limiting partition formula.
    Moments(RunArgs),
    /// Exact-kernel oracle smoke tests.
    Selftest(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit nonzero when the verdict is fail.
    #[arg(long)]
    strict: bool,
    /// Output directory for run artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format; `csv` additionally dumps per-member statistics.
    #[arg(long, value_enum)]
    emit: Option<Emit>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum Emit {
    Json,
    Csv,
}

fn kind_of(command: &Command) -> ExperimentKind {
    match command {
        Command::Siegel(_) => ExperimentKind::Siegel,
        Command::Rogers(_) => ExperimentKind::Rogers,
        Command::Dual(_) => ExperimentKind::Dual,
        Command::Fbeta(_) => ExperimentKind::Fbeta,
        Command::Weights(_) => ExperimentKind::Weights,
        Command::Moments(_) => ExperimentKind::Moments,
        Command::Selftest(_) => ExperimentKind::Selftest,
    }
}

fn args_of(command: &Command) -> &RunArgs {
    match command {
        Command::Siegel(a)
        | Command::Rogers(a)
        | Command::Dual(a)
        | Command::Fbeta(a)
        | Command::Weights(a)
        | Command::Moments(a)
        | Command::Selftest(a) => a,
    }
}

fn load_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None => match kind {
            // the check suites run fine on defaults
            ExperimentKind::Selftest | ExperimentKind::Weights => ExperimentConfig {
                experiment: kind,
                n: 9,
                test_function: None,
                ensemble: None,
                trunc: lab_core::rhs::Truncation {
                    h: 2,
                    dmax: 80,
                    beta_bound: 4,
                },
                seed: Some(1),
                tolerance: Default::default(),
                out_dir: None,
                emit_members: false,
                beta: None,
                moments: None,
            },
            _ => return Err("this experiment requires --config <file>".into()),
        },
    };
    config.experiment = kind;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    if let Some(out) = &args.out {
        config.out_dir = Some(out.to_string_lossy().into_owned());
    }
    if args.emit == Some(Emit::Csv) {
        config.emit_members = true;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("LAB_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
    let kind = kind_of(&cli.command);
    let args = args_of(&cli.command);
    let config = match load_config(kind, args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(2);
        }
    };
    let report = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => {
            if matches!(e, lab_core::Error::Config(_)) {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
            eprintln!("run failed: {e}");
            return ExitCode::from(1);
        }
    };
    let verdict = match report.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inconclusive => "inconclusive",
    };
    println!(
        "experiment={:?} n={} lhs={:.6} ± {:.2e} rhs={:.6} (+tail {:.2e}) z={:+.2} verdict={} ({:.2}s)",
        report.config.experiment,
        report.config.n,
        report.lhs.mean,
        report.lhs.stderr,
        report.rhs.value,
        report.rhs.tail_bound,
        report.z_score,
        verdict,
        report.wall_time_s,
    );
    if args.strict && report.verdict == Verdict::Fail {
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
