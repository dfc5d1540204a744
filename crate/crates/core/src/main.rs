use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use unlearn_lab::pipeline::{exit_code, Command, ExperimentConfig, Pipeline};

#[derive(Parser)]
#[command(name = "unlearn-lab", version, about = "Synthetic-corpus unlearning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate and split the corpus, with alternates for forget records.
    GenCorpus(Common),
    /// Train the model on the full corpus.
    Finetune(Common),
    /// Train the retain model (everything except the forget authors).
    Retain(Common),
    /// Unlearn the forget set from the finetuned model.
    Unlearn(Common),
    /// Write a metric report for a checkpoint against the retain model.
    Eval(Common),
    /// Grid search over learning rate, beta and retain weight.
    Grid(Common),
    /// Evaluate every epoch checkpoint of the configured unlearning run.
    Trajectory(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; defaults apply to missing keys.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set unlearn.beta=0.05`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Recompute outputs even if they already exist.
    #[arg(long)]
    force: bool,
    /// Suppress progress output.
    #[arg(short, long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::GenCorpus(c) => (Command::GenCorpus, c),
        Cmd::Finetune(c) => (Command::Finetune, c),
        Cmd::Retain(c) => (Command::Retain, c),
        Cmd::Unlearn(c) => (Command::Unlearn, c),
        Cmd::Eval(c) => (Command::Eval, c),
        Cmd::Grid(c) => (Command::Grid, c),
        Cmd::Trajectory(c) => (Command::Trajectory, c),
    };
    let result = ExperimentConfig::load(common.config.as_deref(), &common.overrides)
        .and_then(Pipeline::new)
        .and_then(|p| p.force(common.force).verbose(!common.quiet).run(command));
    match result {
        Ok(outcome) => {
            for a in &outcome.artifacts {
                println!("{}", a.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
