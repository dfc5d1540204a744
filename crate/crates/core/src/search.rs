//! Hyperparameter scoring and grid search over (lr, β, w_r).

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreInputs {
    pub mu0: f64,
    pub fq0: f64,
    pub mu: f64,
    pub fq: f64,
}

/// How the forget-quality term enters the score.
///
/// `Verbatim` uses Δ_FQ+ = (log FQ − log FQ0)/log FQ0 as written, which
/// lowers the score when FQ improves (log FQ0 < 0). `ImprovementPositive`
/// negates Δ_FQ+ so that better FQ scores higher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    Verbatim,
    #[default]
    ImprovementPositive,
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignConvention::Verbatim => "verbatim",
            SignConvention::ImprovementPositive => "improvement-positive",
        })
    }
}

impl FromStr for SignConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verbatim" => Ok(SignConvention::Verbatim),
            "improvement-positive" => Ok(SignConvention::ImprovementPositive),
            other => Err(Error::invalid(format!("unknown sign convention {other:?}"))),
        }
    }
}

/// Δ_MU− = max((MU0 − MU)/MU0, 0).
pub fn delta_mu_minus(mu0: f64, mu: f64) -> f64 {
    ((mu0 - mu) / mu0).max(0.0)
}

/// Δ_FQ+ = (log FQ − log FQ0)/log FQ0, sign-adjusted per convention.
pub fn delta_fq_plus(fq0: f64, fq: f64, sign: SignConvention) -> f64 {
    let d = (fq.ln() - fq0.ln()) / fq0.ln();
    match sign {
        SignConvention::Verbatim => d,
        SignConvention::ImprovementPositive => -d,
    }
}

/// score = 1 / ((Δ_MU− + δ)·((1 − Δ_FQ+) + δ)).
pub fn hp_score(inputs: ScoreInputs, delta: f64, sign: SignConvention) -> Result<f64> {
    let ScoreInputs { mu0, fq0, mu, fq } = inputs;
    if !(fq > 0.0 && fq <= 1.0) || !(fq0 > 0.0 && fq0 <= 1.0) {
        return Err(Error::invalid(format!("FQ values must lie in (0, 1], got FQ0={fq0}, FQ={fq}")));
    }
    if fq0 == 1.0 {
        // log FQ0 = 0 leaves Δ_FQ+ undefined.
        return Err(Error::invalid("FQ0 = 1 makes the relative FQ change undefined"));
    }
    if !(mu0 > 0.0) {
        return Err(Error::invalid(format!("MU0 must be positive, got {mu0}")));
    }
    let dmu = delta_mu_minus(mu0, mu);
    let dfq = delta_fq_plus(fq0, fq, sign);
    Ok(1.0 / ((dmu + delta) * ((1.0 - dfq) + delta)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lrs: Vec<f64>,
    pub betas: Vec<f64>,
    pub wrs: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl GridSpec {
    /// The published grid: lr ∈ {1e-5, 2e-5, 5e-5}, β ∈ {0.01, 0.03, 0.05, 0.1},
    /// w_r ∈ {1, 2, 5}.
    pub fn published(seeds: Vec<u64>) -> Self {
        GridSpec { lrs: vec![1e-5, 2e-5, 5e-5], betas: vec![0.01, 0.03, 0.05, 0.1], wrs: vec![1.0, 2.0, 5.0], seeds }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, len) in [("lrs", self.lrs.len()), ("betas", self.betas.len()), ("wrs", self.wrs.len()), ("seeds", self.seeds.len())] {
            if len == 0 {
                return Err(Error::invalid(format!("grid {name} must be non-empty")));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::with_capacity(self.lrs.len() * self.betas.len() * self.wrs.len());
        for &lr in &self.lrs {
            for &beta in &self.betas {
                for &w_r in &self.wrs {
                    out.push(GridCell { lr, beta, w_r });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lr: f64,
    pub beta: f64,
    pub w_r: f64,
}

impl GridCell {
    /// Stable textual key, also used for the final tie-break.
    pub fn key(&self) -> String {
        format!("lr={:e},beta={},w_r={}", self.lr, self.beta, self.w_r)
    }
}

/// Metrics returned by one run of the pipeline callable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub mu: f64,
    pub fq: f64,
    pub ci: f64,
    pub fu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub cell: String,
    pub lr: f64,
    pub beta: f64,
    pub w_r: f64,
    pub seed: u64,
    #[serde(rename = "MU")]
    pub mu: Option<f64>,
    #[serde(rename = "FQ")]
    pub fq: Option<f64>,
    #[serde(rename = "CI")]
    pub ci: Option<f64>,
    #[serde(rename = "FU")]
    pub fu: Option<f64>,
    pub score: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: GridCell,
    pub key: String,
    pub mu: f64,
    pub fq: f64,
    pub ci: f64,
    pub fu: f64,
    pub score: f64,
    pub seeds_ok: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    /// Cells with at least one successful seed, best first.
    pub ranked: Vec<CellSummary>,
    /// Cells where every seed failed.
    pub failed: Vec<String>,
}

impl GridResult {
    pub fn best(&self) -> Option<&CellSummary> {
        self.ranked.first()
    }

    /// One JSON object per run.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for row in &self.rows {
            serde_json::to_writer(&mut f, row)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMode {
    pub delta: f64,
    pub sign: SignConvention,
    pub mu0: f64,
    pub fq0: f64,
}

/// Higher score, then higher MU, then higher FQ, then lexicographic cell key.
fn rank_order(a: &CellSummary, b: &CellSummary) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.mu.total_cmp(&a.mu))
        .then(b.fq.total_cmp(&a.fq))
        .then_with(|| a.key.cmp(&b.key))
}

pub fn rank_cells(cells: &mut [CellSummary]) {
    cells.sort_by(rank_order);
}

/// Runs `pipeline` for every cell and seed, averages metrics over the
/// successful seeds of each cell and ranks the cells by score. Failed runs
/// are recorded in the table and left out of the averages. `threads > 1`
/// runs cells concurrently; results do not depend on it.
pub fn run_grid<F>(grid: &GridSpec, pipeline: F, selection: SelectionMode, threads: usize) -> Result<GridResult>
where
    F: Fn(GridCell, u64) -> Result<RunMetrics> + Sync,
{
    grid.validate()?;
    let cells = grid.cells();
    let jobs: Vec<(GridCell, u64)> = cells.iter().flat_map(|&c| grid.seeds.iter().map(move |&s| (c, s))).collect();
    let outcomes: Vec<Result<RunMetrics>> = if threads <= 1 {
        jobs.iter().map(|&(c, s)| pipeline(c, s)).collect()
    } else {
        let mut out: Vec<Option<Result<RunMetrics>>> = (0..jobs.len()).map(|_| None).collect();
        let chunk = jobs.len().div_ceil(threads);
        std::thread::scope(|scope| {
            for (slots, work) in out.chunks_mut(chunk).zip(jobs.chunks(chunk)) {
                let pipeline = &pipeline;
                scope.spawn(move || {
                    for (slot, &(c, s)) in slots.iter_mut().zip(work) {
                        *slot = Some(pipeline(c, s));
                    }
                });
            }
        });
        out.into_iter().map(|o| o.expect("every job ran")).collect()
    };

    let score_of = |mu: f64, fq: f64| {
        hp_score(ScoreInputs { mu0: selection.mu0, fq0: selection.fq0, mu, fq }, selection.delta, selection.sign)
    };

    let mut rows = Vec::with_capacity(jobs.len());
    for (&(cell, seed), outcome) in jobs.iter().zip(&outcomes) {
        let base = GridRow {
            cell: cell.key(),
            lr: cell.lr,
            beta: cell.beta,
            w_r: cell.w_r,
            seed,
            mu: None,
            fq: None,
            ci: None,
            fu: None,
            score: None,
            status: String::new(),
        };
        rows.push(match outcome {
            Ok(m) => match score_of(m.mu, m.fq) {
                Ok(score) => GridRow {
                    mu: Some(m.mu),
                    fq: Some(m.fq),
                    ci: Some(m.ci),
                    fu: Some(m.fu),
                    score: Some(score),
                    status: "ok".into(),
                    ..base
                },
                Err(e) => GridRow { mu: Some(m.mu), fq: Some(m.fq), ci: Some(m.ci), fu: Some(m.fu), status: format!("failed: {e}"), ..base },
            },
            Err(e) => GridRow { status: format!("failed: {e}"), ..base },
        });
    }

    let mut ranked = Vec::new();
    let mut failed = Vec::new();
    let per_cell = grid.seeds.len();
    for (cell, runs) in cells.iter().zip(rows.chunks(per_cell)) {
        let ok: Vec<&GridRow> = runs.iter().filter(|r| r.status == "ok").collect();
        if ok.is_empty() {
            failed.push(cell.key());
            continue;
        }
        let avg = |f: fn(&GridRow) -> Option<f64>| ok.iter().filter_map(|r| f(r)).sum::<f64>() / ok.len() as f64;
        let (mu, fq) = (avg(|r| r.mu), avg(|r| r.fq));
        match score_of(mu, fq) {
            Ok(score) => ranked.push(CellSummary {
                cell: *cell,
                key: cell.key(),
                mu,
                fq,
                ci: avg(|r| r.ci),
                fu: avg(|r| r.fu),
                score,
                seeds_ok: ok.len(),
            }),
            Err(_) => failed.push(cell.key()),
        }
    }
    rank_cells(&mut ranked);
    Ok(GridResult { rows, ranked, failed })
}
