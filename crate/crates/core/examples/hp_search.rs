//! Hyperparameter scoring and the grid runner. The pipeline callable here is
//! a closed-form stand-in so the example runs instantly; `unlearn-lab grid`
//! plugs in real unlearning runs.
//!
//! cargo run --example hp_search

use unlearn_lab::search::{hp_score, run_grid, GridSpec, RunMetrics, ScoreInputs, SelectionMode, SignConvention};

fn main() -> unlearn_lab::Result<()> {
    let inputs = ScoreInputs { mu0: 0.6, fq0: 1e-10, mu: 0.57, fq: 0.5 };
    for sign in [SignConvention::Verbatim, SignConvention::ImprovementPositive] {
        println!("{sign}: {:.6}", hp_score(inputs, 0.1, sign)?);
    }

    let grid = GridSpec { lrs: vec![1e-5, 5e-5], betas: vec![0.05, 0.1], wrs: vec![1.0], seeds: vec![0, 1] };
    let toy = |cell: unlearn_lab::search::GridCell, seed: u64| {
        // Larger steps forget more and cost more utility.
        let push = cell.lr * 1e5 * (1.0 + cell.beta) + seed as f64 * 0.01;
        Ok(RunMetrics { mu: 0.6 - 0.05 * push, fq: (1e-10f64).powf(1.0 / (1.0 + 4.0 * push)), ci: 0.9, fu: 0.8 })
    };
    let selection = SelectionMode { delta: 0.1, sign: SignConvention::ImprovementPositive, mu0: 0.6, fq0: 1e-10 };
    let result = run_grid(&grid, toy, selection, 2)?;
    for c in &result.ranked {
        println!("{:<32} score {:>8.3}  MU {:.3}  FQ {:.2e}", c.cell.key(), c.score, c.mu, c.fq);
    }
    if let Some(best) = result.best() {
        println!("best: {}", best.cell.key());
    }
    Ok(())
}
