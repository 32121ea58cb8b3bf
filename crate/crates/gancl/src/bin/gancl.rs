//! Experiment CLI: `train` and `forgetting` run seeded experiment suites,
//! `eval` scores an existing sample dump. Flags override config-file values,
//! which override built-in defaults. Exit codes: 0 success, 1 invalid
//! configuration or arguments, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gancl::consolidation::ClMethod;
use gancl::error::Error;
use gancl::exp::{
    parse_config_file, resolve, run_eval, run_forgetting, run_train, ConfigPatch, ExperimentKind,
};

#[derive(Parser)]
#[command(name = "gancl", version, about = "GAN training with discriminator consolidation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train GANs over a seed list and aggregate end-of-run metrics.
    Train(RunArgs),
    /// Run the sequential discriminator-forgetting benchmark.
    Forgetting(RunArgs),
    /// Score an existing x,y sample CSV against the reference mixture.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key-value config file; flags given here win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Consolidation method: none, l2, histavg, ewc, or is.
    #[arg(long)]
    method: Option<String>,
    /// Task length in iterations (boundary spacing).
    #[arg(long)]
    alpha: Option<u64>,
    /// Penalty strength.
    #[arg(long)]
    lambda: Option<f64>,
    /// Task discount factor in [0, 1].
    #[arg(long)]
    gamma: Option<f64>,
    /// Training iterations per seed.
    #[arg(long)]
    iters: Option<u64>,
    /// Number of seeds, starting at --seed-base.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    seed_base: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum parallel seed runs.
    #[arg(long)]
    workers: Option<usize>,
    /// Iterations between trace evaluations.
    #[arg(long)]
    eval_interval: Option<u64>,
    /// Samples drawn per evaluation and for the final dump.
    #[arg(long)]
    eval_samples: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV of x,y samples to score.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    classifier_seed: Option<u64>,
}

fn patch_from_run_args(args: &RunArgs) -> Result<ConfigPatch, Error> {
    let method = match &args.method {
        Some(name) => Some(ClMethod::parse(name).ok_or_else(|| {
            Error::Argument(format!(
                "unknown method {name:?}; expected none, l2, histavg, ewc, or is"
            ))
        })?),
        None => None,
    };
    Ok(ConfigPatch {
        method,
        alpha: args.alpha,
        lambda: args.lambda,
        gamma: args.gamma,
        iters: args.iters,
        batch_size: args.batch_size,
        eval_interval: args.eval_interval,
        eval_samples: args.eval_samples,
        seeds: args.seeds,
        seed_base: args.seed_base,
        out: args.out.clone(),
        workers: args.workers,
        ..ConfigPatch::default()
    })
}

fn load_file_patch(path: &Option<PathBuf>) -> Result<ConfigPatch, Error> {
    match path {
        Some(p) => parse_config_file(p),
        None => Ok(ConfigPatch::default()),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train(args) => {
            let file = load_file_patch(&args.config)?;
            let flags = patch_from_run_args(&args)?;
            let config = resolve(ExperimentKind::Train, &[&file, &flags])?;
            let arts = run_train(&config)?;
            for m in &arts.per_seed {
                println!(
                    "seed {}: icp {:.3} sym_kl {:.3} coverage {} it/s {:.1}",
                    m.seed, m.report.icp, m.report.sym_kl, m.report.mode_coverage, m.iters_per_sec
                );
            }
            for f in &arts.failed {
                eprintln!("seed {} failed: {}", f.seed, f.error);
            }
            println!("artifacts: {}", arts.out_dir.display());
            Ok(())
        }
        Command::Forgetting(args) => {
            let file = load_file_patch(&args.config)?;
            let flags = patch_from_run_args(&args)?;
            let config = resolve(ExperimentKind::Forgetting, &[&file, &flags])?;
            let arts = run_forgetting(&config)?;
            let r = &arts.report;
            println!(
                "backward accuracy: sgd {:.3}, ewc {:.3}; one-task drop: sgd {:.3}, ewc {:.3}",
                r.sgd_backward_mean, r.ewc_backward_mean, r.sgd_drop_mean, r.ewc_drop_mean
            );
            for f in &r.failed {
                eprintln!("seed {} failed: {}", f.seed, f.error);
            }
            println!("artifacts: {}", arts.out_dir.display());
            Ok(())
        }
        Command::Eval(args) => {
            let file = load_file_patch(&args.config)?;
            let flags = ConfigPatch {
                samples_path: Some(args.samples.clone()),
                out: args.out.clone(),
                classifier_seed: args.classifier_seed,
                ..ConfigPatch::default()
            };
            let config = resolve(ExperimentKind::Eval, &[&file, &flags])?;
            let report = run_eval(&config)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; bad flags are
            // validation failures.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
