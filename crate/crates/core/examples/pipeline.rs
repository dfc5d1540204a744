//! Runs every pipeline stage on a deliberately tiny configuration in a
//! temporary directory and prints the resulting metric trajectory.
//!
//! cargo run --release --example pipeline

use unlearn_lab::pipeline::{Command, ExperimentConfig, Pipeline};

fn main() -> unlearn_lab::Result<()> {
    let dir = tempfile::tempdir()?;
    let overrides = [
        "corpus.n_authors=12",
        "corpus.qa_per_author=4",
        "corpus.forget_fraction=0.17",
        "corpus.holdout_fraction=0.17",
        "corpus.alternates=2",
        "model.d_model=32",
        "model.n_layers=1",
        "model.d_ff=64",
        "finetune.epochs=80",
        "retain.epochs=80",
        "unlearn.m=2",
        "unlearn.n_epochs=4",
        "unlearn.lr=3e-4",
        "eval.max_new_tokens=12",
    ]
    .map(String::from);
    let mut cfg = ExperimentConfig::load(None, &overrides)?;
    cfg.out_dir = dir.path().to_path_buf();
    let p = Pipeline::new(cfg)?.verbose(false);
    for c in [Command::GenCorpus, Command::Finetune, Command::Retain, Command::Unlearn] {
        let out = p.run(c)?;
        println!("{:<10} {}", c.as_str(), out.artifacts.iter().map(|a| a.strip_prefix(dir.path()).unwrap_or(a).display().to_string()).collect::<Vec<_>>().join(" "));
    }
    let (_, points) = p.trajectory()?;
    println!("\nepoch  FQ         MU      CI      FU");
    for pt in points {
        println!("{:>5}  {:<9.3e}  {:.4}  {:.4}  {:.3}", pt.epoch, pt.fq, pt.mu, pt.ci, pt.fu);
    }
    Ok(())
}
