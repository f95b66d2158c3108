use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dbr_lab::acceptance::verify_acceptance_with;
use dbr_lab::config::{ExperimentConfig, ExperimentKind, Params};
use dbr_lab::experiments::{verify_outcome, write_outcome, RunSummary};
use dbr_lab::{bundled, run_experiment, Exec, LabError, Result};

/// Seeded experiments for disagreement-based regression and its RL
/// extensions.
#[derive(Parser)]
#[command(name = "dbr-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regression sweep: ERM and DBR fits over an n grid.
    Regress(RunArgs),
    /// Population ERM and DBR on an amplification scenario.
    Lowerbound(RunArgs),
    /// Adaptive-threshold DBR over an n grid.
    Adaptive(RunArgs),
    /// Population star blend and L-inf fits.
    Star(RunArgs),
    /// Same experiment kind as `star`.
    Linf(RunArgs),
    /// Offline minimax fits with and without the disagreement filter.
    Offline(RunArgs),
    /// Optimistic online exploration with regret logs.
    Online(RunArgs),
    /// Run the acceptance suite; exits 1 if any criterion fails.
    Verify(VerifyArgs),
    /// Write the bundled scenarios as JSON files.
    Export {
        #[arg(long, default_value = "scenarios")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_path`, then `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
    /// Run replicates on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Optional verify config; only its id, seed and output path are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
    #[arg(long)]
    sequential: bool,
}

fn exec_for(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn out_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.output_path.clone()).unwrap_or_else(|| PathBuf::from("results"))
}

fn report(summary: &RunSummary, quiet: bool) {
    if !quiet {
        println!("wrote {} rows to {}", summary.outcome.rows.len(), summary.files.results.display());
        println!("manifest {}", summary.files.manifest.display());
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.kind != kind {
        return Err(LabError::Config(format!(
            "{} holds a {} experiment, not {}",
            args.config.display(),
            cfg.kind.name(),
            kind.name()
        )));
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.base_seed {
        cfg.base_seed = s;
    }
    cfg.validate()?;
    let dir = out_dir(args.out, &cfg);
    let summary = run_experiment(&cfg, &dir, exec_for(args.sequential))?;
    report(&summary, args.quiet);
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig {
            id: "acceptance".into(),
            kind: ExperimentKind::Verify,
            scenario: None,
            n_grid: Vec::new(),
            episodes: None,
            replicates: 1,
            base_seed: 0,
            params: Params::default(),
            output_path: None,
        },
    };
    if cfg.kind != ExperimentKind::Verify {
        return Err(LabError::Config(format!("{} is not a verify config", cfg.id)));
    }
    let start = Instant::now();
    let quiet = args.quiet;
    let report = verify_acceptance_with(exec_for(args.sequential), |c| {
        if !quiet {
            println!("{c}");
        }
    });
    let failed = report.failed();
    let summary = write_outcome(&cfg, &out_dir(args.out, &cfg), verify_outcome(&cfg, report), start)?;
    report_summary(&summary, quiet, &failed);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(LabError::CriteriaFailed { failed: failed.len() })
    }
}

fn report_summary(summary: &RunSummary, quiet: bool, failed: &[String]) {
    report(summary, quiet);
    if failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed: {}", failed.join(", "));
    }
}

fn export(out: &Path) -> Result<()> {
    for path in bundled::export(out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Regress(a) => run(ExperimentKind::RegressionSweep, a),
        Command::Lowerbound(a) => run(ExperimentKind::LowerBound, a),
        Command::Adaptive(a) => run(ExperimentKind::AdaptiveTau, a),
        Command::Star(a) | Command::Linf(a) => run(ExperimentKind::StarLinf, a),
        Command::Offline(a) => run(ExperimentKind::OfflineRl, a),
        Command::Online(a) => run(ExperimentKind::OnlineRl, a),
        Command::Verify(a) => verify(a),
        Command::Export { out } => export(&out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
