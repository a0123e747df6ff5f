use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contivae_cli::{
    cmd_cv, cmd_evaluate, cmd_generate, cmd_sweep, cmd_train, EvalTarget, ExperimentConfig,
    ModelKind, Overrides, Result,
};

#[derive(Parser)]
#[command(name = "contivae", version, about = "Dose-response experiments with ContiVAE")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Model kind: contivae, contivae_n or mlp (comma list for sweep)
    #[arg(long, global = true, value_delimiter = ',')]
    model: Vec<ModelKind>,
    /// Selection bias α (comma list for sweep)
    #[arg(long, global = true, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Reconstruction weight λ (comma list for sweep)
    #[arg(long, global = true, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long, global = true)]
    grid_size: Option<usize>,
    /// Repeat runs with distinct model seeds
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// Concurrent sweep cells
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a semi-synthetic dataset with ground truth
    Generate,
    /// Train models on the training split
    Train {
        /// Dataset directory (default: <out>/data)
        #[arg(long)]
        data: Option<PathBuf>,
        /// Continue existing checkpoints instead of starting over
        #[arg(long)]
        resume: bool,
    },
    /// Score trained models on the test split
    Evaluate {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Checkpoints to score (default: <out>/train/run*/checkpoint.json)
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        /// Score the ground-truth curves instead of a model
        #[arg(long, conflicts_with = "checkpoints")]
        oracle: bool,
    },
    /// Cartesian sweep over the configured axes
    Sweep,
    /// k-fold selection over the [cv] grid
    Cv {
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let base = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides {
        out: c.out.clone(),
        seed: c.seed,
        models: c.model.clone(),
        alpha: c.alpha.clone(),
        lambda: c.lambda.clone(),
        grid_size: c.grid_size,
        repeats: c.repeats,
        jobs: c.jobs,
    };
    let cfg = base.resolve(&overrides, matches!(cli.command, Command::Sweep))?;
    match cli.command {
        Command::Generate => {
            let p = cmd_generate(&cfg)?;
            println!("{}", p.data.display());
        }
        Command::Train { data, resume } => {
            for p in cmd_train(&cfg, data.as_deref(), resume)? {
                println!("{}", p.display());
            }
        }
        Command::Evaluate {
            data,
            checkpoints,
            oracle,
        } => {
            let target = if oracle {
                EvalTarget::Oracle
            } else if checkpoints.is_empty() {
                EvalTarget::Trained
            } else {
                EvalTarget::Checkpoints(checkpoints)
            };
            print!("{}", cmd_evaluate(&cfg, data.as_deref(), &target)?.to_table());
        }
        Command::Sweep => {
            let r = cmd_sweep(&cfg)?;
            let failed = r.cells.len() - r.cells.iter().filter(|(_, o)| matches!(o, contivae_cli::sweep::CellOutcome::Done(_))).count();
            println!(
                "{} cells ({} reused, {failed} failed), {} run rows",
                r.cells.len(),
                r.skipped,
                r.run_rows()
            );
        }
        Command::Cv { data } => {
            let r = cmd_cv(&cfg, data.as_deref())?;
            for (i, (c, s)) in r.candidates.iter().zip(&r.scores).enumerate() {
                let mark = if i == r.best { "*" } else { " " };
                println!(
                    "{mark} λ={} h={} d_z={} rmise={s:.4}",
                    c.model.recon_scale, c.model.hidden_units, c.model.latent_dim
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!("error ({cat:?}): {e}");
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
