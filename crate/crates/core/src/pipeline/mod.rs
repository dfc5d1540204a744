//! End-to-end orchestration: corpus generation, finetuning, the retain
//! model, unlearning, evaluation, grid search and trajectories, with every
//! artifact directory carrying a manifest.
//!
//! Layout under `out_dir`:
//!
//! ```text
//! corpus.jsonl  manifest.json
//! ckpts/finetune.ckpt  ckpts/retain.ckpt
//! unlearn/<run>/ckpts/epoch_<k>.ckpt  unlearn/<run>/ckpts/steps.jsonl
//! unlearn/<run>/metrics.json  unlearn/<run>/trajectory.csv  unlearn/<run>/manifest.json
//! eval/<name>/metrics.json
//! grid/<method>/grid.jsonl  grid/<method>/ranking.json  grid/<method>/manifest.json
//! ```

mod config;
mod trajectory;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    attach_alternates, generate_corpus, make_splits, read_corpus, write_corpus, AlternateSource, CorpusBundle,
    ImportedAlternates, Lexicon, QARecord, Split,
};
use crate::error::{Error, Result};
use crate::judge::Judge;
use crate::losses::{MethodSpec, IDK_POOL};
use crate::metrics::{self, CleannessScorer, EvalContext, EvalOptions, MetricReport, RetainBaseline};
use crate::model::{init_model, load_checkpoint, save_checkpoint, SequenceModel};
use crate::rng;
use crate::search::{run_grid, GridCell, GridResult, RunMetrics, SelectionMode};
use crate::tokenizer::Tokenizer;
use crate::train::{finetune_with, unlearn, TrainConfig, UnlearnRun};

pub use config::{CorpusOptions, EvalSettings, ExperimentConfig, GridOptions, ModelOptions, ScorerMode, KEYS};
pub use trajectory::{emit_trajectory, format_sig6, read_trajectory, TrajectoryPoint, TRAJECTORY_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    GenCorpus,
    Finetune,
    Retain,
    Unlearn,
    Eval,
    Grid,
    Trajectory,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::GenCorpus,
        Command::Finetune,
        Command::Retain,
        Command::Unlearn,
        Command::Eval,
        Command::Grid,
        Command::Trajectory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::GenCorpus => "gen-corpus",
            Command::Finetune => "finetune",
            Command::Retain => "retain",
            Command::Unlearn => "unlearn",
            Command::Eval => "eval",
            Command::Grid => "grid",
            Command::Trajectory => "trajectory",
        }
    }

    /// Config key prefixes that determine this command's outputs.
    fn inputs(self) -> &'static [&'static str] {
        const EVAL: &[&str] = &["seed", "corpus.", "model.", "finetune.", "retain.", "unlearn.", "eval.", "judge.", "scorer."];
        match self {
            Command::GenCorpus => &["seed", "corpus."],
            Command::Finetune => &["seed", "corpus.", "model.", "finetune."],
            Command::Retain => &["seed", "corpus.", "model.", "retain."],
            Command::Unlearn => &["seed", "corpus.", "model.", "finetune.", "unlearn."],
            Command::Eval | Command::Trajectory => EVAL,
            Command::Grid => &["seed", "corpus.", "model.", "finetune.", "retain.", "unlearn.", "eval.", "judge.", "scorer.", "grid."],
        }
    }
}

/// Process exit code for an error: 2 config, 3 missing prerequisite, 4 runtime.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Judge(crate::judge::JudgeError::Config(_)) => 2,
        Error::MissingArtifact(_) => 3,
        _ => 4,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    /// Full canonical configuration; re-running with it reproduces the artifacts.
    pub config: String,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: BTreeMap<String, ManifestEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join("manifest.json");
        if !path.exists() {
            return Ok(Manifest::default());
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub command: Command,
    /// Outputs already existed for the same configuration.
    pub skipped: bool,
    pub artifacts: Vec<PathBuf>,
}

/// Builds the split corpus with alternates for every forget record.
pub fn build_corpus(cfg: &ExperimentConfig) -> Result<CorpusBundle> {
    let c = &cfg.corpus;
    let bundle = generate_corpus(c.n_authors, c.qa_per_author, c.k_perturbed, cfg.seed)?;
    let bundle = make_splits(&bundle, c.forget_fraction, c.holdout_fraction, cfg.seed)?;
    let lexicon = Lexicon::default();
    match &c.alternates_file {
        Some(path) => {
            let imported = ImportedAlternates::read(path)?;
            attach_alternates(&bundle, c.alternates, cfg.seed, &AlternateSource::Imported(&imported))
        }
        None => attach_alternates(&bundle, c.alternates, cfg.seed, &AlternateSource::Local(&lexicon)),
    }
}

/// Word tokenizer over every corpus text plus the refusal pool.
pub fn corpus_tokenizer(bundle: &CorpusBundle) -> Arc<Tokenizer> {
    Arc::new(Tokenizer::from_texts(bundle.texts().chain(IDK_POOL)))
}

fn stage_seed(cfg: &ExperimentConfig, label: &str) -> u64 {
    rng::derive_seed(cfg.seed, label)
}

fn train_config(base: &TrainConfig, seed: u64) -> TrainConfig {
    TrainConfig { seed, ..base.clone() }
}

/// Short directory name for the configured unlearning run.
pub fn run_name(cfg: &ExperimentConfig) -> String {
    let m = &cfg.method;
    let mut name = grid_name(cfg);
    if let Some(b) = m.beta {
        name.push_str(&format!("_b{b}"));
    }
    name.push_str(&format!("_wr{}_lr{:e}_n{}", m.w_r, cfg.unlearn.lr, cfg.n_epochs));
    name
}

/// Grid directory name: the method and, for the alternate family, M.
pub fn grid_name(cfg: &ExperimentConfig) -> String {
    let m = &cfg.method;
    let mut name = m.method.as_str().to_ascii_lowercase();
    if m.method.is_alt_family() {
        name.push_str(&format!("_m{}", m.m_alternates));
    }
    name
}

/// The loaded corpus with its splits.
pub struct Data {
    pub bundle: CorpusBundle,
    pub tokenizer: Arc<Tokenizer>,
    pub forget: Vec<QARecord>,
    pub retain: Vec<QARecord>,
    pub holdout: Vec<QARecord>,
}

impl Data {
    pub fn new(bundle: CorpusBundle) -> Self {
        let tokenizer = corpus_tokenizer(&bundle);
        Data {
            forget: bundle.split_records(Split::Forget),
            retain: bundle.split_records(Split::Retain),
            holdout: bundle.split_records(Split::Holdout),
            tokenizer,
            bundle,
        }
    }

    /// Retain records used for model utility: `n` of them (0 = forget-set
    /// size), drawn without replacement and kept in corpus order.
    pub fn utility_retain(&self, n: usize, seed: u64) -> Vec<QARecord> {
        let n = if n == 0 { self.forget.len() } else { n };
        if n >= self.retain.len() {
            return self.retain.clone();
        }
        let mut idx: Vec<usize> = (0..self.retain.len()).collect();
        idx.shuffle(&mut rng::stream(seed, "mu-retain-subsample"));
        let mut chosen = idx[..n].to_vec();
        chosen.sort_unstable();
        chosen.into_iter().map(|i| self.retain[i].clone()).collect()
    }
}

/// Executes pipeline commands for one configuration.
pub struct Pipeline {
    pub cfg: ExperimentConfig,
    pub force: bool,
    pub verbose: bool,
}

impl Pipeline {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Pipeline { cfg, force: false, verbose: false })
    }

    pub fn force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn verbose(mut self, verbose: bool) -> Self {
        self.verbose = verbose;
        self
    }

    fn say(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub fn root(&self) -> &Path {
        &self.cfg.out_dir
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.root().join("corpus.jsonl")
    }

    pub fn finetune_path(&self) -> PathBuf {
        self.root().join("ckpts/finetune.ckpt")
    }

    pub fn retain_path(&self) -> PathBuf {
        self.root().join("ckpts/retain.ckpt")
    }

    pub fn run_dir(&self) -> PathBuf {
        self.root().join("unlearn").join(run_name(&self.cfg))
    }

    pub fn epoch_path(&self, k: usize) -> PathBuf {
        self.run_dir().join(format!("ckpts/epoch_{k}.ckpt"))
    }

    pub fn grid_dir(&self) -> PathBuf {
        self.root().join("grid").join(grid_name(&self.cfg))
    }

    pub fn run(&self, command: Command) -> Result<StageOutcome> {
        match command {
            Command::GenCorpus => self.gen_corpus(),
            Command::Finetune => self.finetune(),
            Command::Retain => self.retain(),
            Command::Unlearn => self.unlearn(),
            Command::Eval => self.eval().map(|(o, _)| o),
            Command::Grid => self.grid().map(|(o, _)| o),
            Command::Trajectory => self.trajectory().map(|(o, _)| o),
        }
    }

    /// Whether `outputs` exist and were produced by the same configuration.
    /// Outputs from a different configuration are an error unless forced.
    fn up_to_date(&self, dir: &Path, command: Command, outputs: &[PathBuf]) -> Result<bool> {
        if self.force || !outputs.iter().all(|p| p.exists()) {
            return Ok(false);
        }
        let hash = self.cfg.hash_keys(command.inputs());
        match Manifest::read(dir)?.entries.get(command.as_str()) {
            Some(e) if e.config_hash == hash => {
                self.say(format!("{}: outputs are up to date", command.as_str()));
                Ok(true)
            }
            _ => Err(Error::Config(format!(
                "{} already exists from a different configuration; pass --force to overwrite",
                outputs[0].display()
            ))),
        }
    }

    fn record(&self, dir: &Path, command: Command, artifacts: &[PathBuf]) -> Result<()> {
        let mut manifest = Manifest::read(dir)?;
        let rel = |p: &PathBuf| p.strip_prefix(dir).unwrap_or(p).display().to_string();
        manifest.entries.insert(
            command.as_str().to_string(),
            ManifestEntry {
                command: command.as_str().to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: self.cfg.seed,
                config_hash: self.cfg.hash_keys(command.inputs()),
                config: self.cfg.to_text(),
                artifacts: artifacts.iter().map(rel).collect(),
            },
        );
        manifest.write(dir)
    }

    fn require(path: &Path) -> Result<()> {
        if path.exists() {
            Ok(())
        } else {
            Err(Error::MissingArtifact(path.to_path_buf()))
        }
    }

    pub fn load_data(&self) -> Result<Data> {
        let path = self.corpus_path();
        Self::require(&path)?;
        Ok(Data::new(read_corpus(&path)?))
    }

    pub fn load_model(&self, path: &Path, data: &Data) -> Result<SequenceModel> {
        Self::require(path)?;
        let model = load_checkpoint(path)?;
        if model.config().vocab_size != data.tokenizer.vocab_size() {
            return Err(Error::Checkpoint(format!(
                "{} has vocabulary {} but the corpus tokenizer has {}",
                path.display(),
                model.config().vocab_size,
                data.tokenizer.vocab_size()
            )));
        }
        model.with_tokenizer(data.tokenizer.clone())
    }

    pub fn gen_corpus(&self) -> Result<StageOutcome> {
        let path = self.corpus_path();
        let outputs = vec![path.clone()];
        if self.up_to_date(self.root(), Command::GenCorpus, &outputs)? {
            return Ok(StageOutcome { command: Command::GenCorpus, skipped: true, artifacts: outputs });
        }
        let bundle = build_corpus(&self.cfg)?;
        fs::create_dir_all(self.root())?;
        write_corpus(&bundle, &path)?;
        self.say(format!("gen-corpus: {} records -> {}", bundle.records.len(), path.display()));
        self.record(self.root(), Command::GenCorpus, &outputs)?;
        Ok(StageOutcome { command: Command::GenCorpus, skipped: false, artifacts: outputs })
    }

    fn train_stage(&self, command: Command) -> Result<StageOutcome> {
        let (path, base, label) = match command {
            Command::Finetune => (self.finetune_path(), &self.cfg.finetune, "finetune"),
            _ => (self.retain_path(), &self.cfg.retain, "retain"),
        };
        let log_path = path.with_extension("log.json");
        let outputs = vec![path.clone(), log_path.clone()];
        if self.up_to_date(self.root(), command, &outputs)? {
            return Ok(StageOutcome { command, skipped: true, artifacts: outputs });
        }
        let data = self.load_data()?;
        // The retain model sees everything except the forget authors.
        let records: Vec<QARecord> = match command {
            Command::Finetune => data.bundle.records.clone(),
            _ => data.retain.iter().chain(&data.holdout).cloned().collect(),
        };
        let model_cfg = self.cfg.model.config(data.tokenizer.vocab_size());
        let mut model = init_model(model_cfg, stage_seed(&self.cfg, "init"))?.with_tokenizer(data.tokenizer.clone())?;
        let tc = train_config(base, stage_seed(&self.cfg, label));
        let started = std::time::Instant::now();
        let log = finetune_with(&mut model, &records, &tc, |e, loss| {
            self.say(format!("{label}: epoch {}/{} loss {loss:.4}", e + 1, tc.epochs));
        })?;
        let mut log = serde_json::to_value(&log)?;
        // Wall time is informational and excluded from every comparison.
        log["seconds"] = started.elapsed().as_secs_f64().into();
        save_checkpoint(&model, &path)?;
        fs::write(&log_path, serde_json::to_string(&log)? + "\n")?;
        self.record(self.root(), command, &outputs)?;
        Ok(StageOutcome { command, skipped: false, artifacts: outputs })
    }

    pub fn finetune(&self) -> Result<StageOutcome> {
        self.train_stage(Command::Finetune)
    }

    pub fn retain(&self) -> Result<StageOutcome> {
        self.train_stage(Command::Retain)
    }

    /// Runs unlearning from the finetuned checkpoint with `spec` and `tc`.
    pub fn unlearn_with(&self, data: &Data, finetuned: &SequenceModel, spec: &MethodSpec, tc: &TrainConfig) -> Result<UnlearnRun> {
        let reference = finetuned.frozen();
        unlearn(finetuned.clone(), &reference, &data.forget, &data.retain, spec, tc, self.cfg.n_epochs)
    }

    pub fn unlearn(&self) -> Result<StageOutcome> {
        let dir = self.run_dir();
        let ckpts = dir.join("ckpts");
        let mut outputs: Vec<PathBuf> = (1..=self.cfg.n_epochs).map(|k| self.epoch_path(k)).collect();
        outputs.push(ckpts.join("steps.jsonl"));
        if self.up_to_date(&dir, Command::Unlearn, &outputs)? {
            return Ok(StageOutcome { command: Command::Unlearn, skipped: true, artifacts: outputs });
        }
        let data = self.load_data()?;
        let finetuned = self.load_model(&self.finetune_path(), &data)?;
        let tc = train_config(&self.cfg.unlearn, stage_seed(&self.cfg, "unlearn"));
        self.say(format!("unlearn: {} for {} epoch-equivalents", run_name(&self.cfg), self.cfg.n_epochs));
        let run = self.unlearn_with(&data, &finetuned, &self.cfg.method, &tc)?;
        run.save(&ckpts)?;
        self.record(&dir, Command::Unlearn, &outputs)?;
        Ok(StageOutcome { command: Command::Unlearn, skipped: false, artifacts: outputs })
    }

    fn scorer(&self, data: &Data) -> Result<CleannessScorer> {
        match &self.cfg.scorer {
            ScorerMode::Heuristic => Ok(CleannessScorer::heuristic(&data.tokenizer)),
            ScorerMode::Imported(p) => CleannessScorer::imported(p),
        }
    }

    fn retain_checkpoint(&self) -> PathBuf {
        self.cfg.eval.retain_checkpoint.clone().unwrap_or_else(|| self.retain_path())
    }

    /// Judge, scorer, retain baseline and utility records shared by evaluations.
    pub fn evaluator(&self, data: &Data) -> Result<Evaluator> {
        let retain_model = self.load_model(&self.retain_checkpoint(), data)?;
        let scorer = self.scorer(data)?;
        let opts = EvalOptions { max_new_tokens: self.cfg.eval.max_new_tokens };
        let baseline = RetainBaseline::compute(&retain_model, &data.forget, &scorer, &opts)?;
        let judge = Judge::from_config(&self.cfg.judge, data.bundle.author_names())?;
        Ok(Evaluator {
            forget: data.forget.clone(),
            utility_retain: data.utility_retain(self.cfg.eval.mu_retain_records, self.cfg.seed),
            holdout: data.holdout.clone(),
            baseline,
            judge,
            scorer,
            opts,
            seed: self.cfg.seed,
        })
    }

    /// Full metric report for `eval.checkpoint` (default: the last epoch of
    /// the configured run) against the retain checkpoint.
    pub fn eval(&self) -> Result<(StageOutcome, MetricReport)> {
        let (checkpoint, dir) = match &self.cfg.eval.checkpoint {
            Some(p) => {
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "checkpoint".into());
                (p.clone(), self.root().join("eval").join(stem))
            }
            None => (self.epoch_path(self.cfg.n_epochs), self.run_dir()),
        };
        let out = dir.join("metrics.json");
        let outputs = vec![out.clone()];
        if self.up_to_date(&dir, Command::Eval, &outputs)? {
            let report = serde_json::from_str(&fs::read_to_string(&out)?)?;
            return Ok((StageOutcome { command: Command::Eval, skipped: true, artifacts: outputs }, report));
        }
        let data = self.load_data()?;
        Self::require(&checkpoint)?;
        let model = self.load_model(&checkpoint, &data)?;
        let evaluator = self.evaluator(&data)?;
        let mut report = evaluator.evaluate(&model)?;
        report.checkpoint = Some(checkpoint.display().to_string());
        fs::create_dir_all(&dir)?;
        fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")?;
        self.say(format!(
            "eval: FQ {:.3e} MU {:.4} CI {:.3e} mean TC {:.4} FU {:.3} self-confidence {:.4}",
            report.fq, report.mu, report.ci, report.mean_tc, report.fu, report.self_confidence
        ));
        self.record(&dir, Command::Eval, &outputs)?;
        Ok((StageOutcome { command: Command::Eval, skipped: false, artifacts: outputs }, report))
    }

    /// One point per saved epoch of the configured run.
    pub fn trajectory(&self) -> Result<(StageOutcome, Vec<TrajectoryPoint>)> {
        let dir = self.run_dir();
        let csv = dir.join("trajectory.csv");
        let jsonl = dir.join("trajectory.jsonl");
        let outputs = vec![csv.clone(), jsonl.clone()];
        if self.up_to_date(&dir, Command::Trajectory, &outputs)? {
            let points = read_trajectory(&csv)?;
            return Ok((StageOutcome { command: Command::Trajectory, skipped: true, artifacts: outputs }, points));
        }
        let data = self.load_data()?;
        for k in 1..=self.cfg.n_epochs {
            Self::require(&self.epoch_path(k))?;
        }
        let evaluator = self.evaluator(&data)?;
        let mut points = Vec::with_capacity(self.cfg.n_epochs);
        let mut reports = std::io::BufWriter::new(fs::File::create(&jsonl)?);
        for k in 1..=self.cfg.n_epochs {
            let path = self.epoch_path(k);
            let model = self.load_model(&path, &data)?;
            let mut report = evaluator.evaluate(&model)?;
            report.checkpoint = Some(path.display().to_string());
            serde_json::to_writer(&mut reports, &report)?;
            reports.write_all(b"\n")?;
            let p = TrajectoryPoint::from_report(k, &report);
            self.say(format!("trajectory: epoch {k} FQ {:.3e} MU {:.4}", p.fq, p.mu));
            points.push(p);
        }
        reports.flush()?;
        emit_trajectory(&points, &csv)?;
        self.record(&dir, Command::Trajectory, &outputs)?;
        Ok((StageOutcome { command: Command::Trajectory, skipped: false, artifacts: outputs }, points))
    }

    /// Grid search over (lr, β, w_r) × seeds with the configured method. The
    /// finetuned and retain models are shared; a grid seed drives the
    /// unlearning data order and retain sampling. Cells are scored against
    /// the finetuned model's MU and FQ.
    pub fn grid(&self) -> Result<(StageOutcome, GridResult)> {
        let dir = self.grid_dir();
        let table = dir.join("grid.jsonl");
        let ranking = dir.join("ranking.json");
        let outputs = vec![table.clone(), ranking.clone()];
        if self.up_to_date(&dir, Command::Grid, &outputs)? {
            let result = serde_json::from_str(&fs::read_to_string(&ranking)?)?;
            return Ok((StageOutcome { command: Command::Grid, skipped: true, artifacts: outputs }, result));
        }
        let data = self.load_data()?;
        let finetuned = self.load_model(&self.finetune_path(), &data)?;
        let evaluator = self.evaluator(&data)?;
        let initial = evaluator.evaluate(&finetuned)?;
        let selection = SelectionMode { delta: self.cfg.grid.delta, sign: self.cfg.grid.sign, mu0: initial.mu, fq0: initial.fq };
        let run_cell = |cell: GridCell, seed: u64| -> Result<RunMetrics> {
            let mut spec = self.cfg.method.clone();
            if spec.method.uses_beta() {
                spec.beta = Some(cell.beta);
            }
            if spec.method != crate::losses::Method::GA {
                spec.w_r = cell.w_r;
            }
            let tc = TrainConfig { lr: cell.lr, ..train_config(&self.cfg.unlearn, rng::derive_seed(seed, "grid-unlearn")) };
            let run = self.unlearn_with(&data, &finetuned, &spec, &tc)?;
            let r = evaluator.evaluate(run.final_model())?;
            self.say(format!("grid: {} seed {seed}: MU {:.4} FQ {:.3e}", cell.key(), r.mu, r.fq));
            Ok(RunMetrics { mu: r.mu, fq: r.fq, ci: r.ci, fu: r.fu })
        };
        // Axes the method ignores collapse to their first value.
        let mut spec = self.cfg.grid.spec.clone();
        if !self.cfg.method.method.uses_beta() {
            spec.betas.truncate(1);
        }
        if self.cfg.method.method == crate::losses::Method::GA {
            spec.wrs.truncate(1);
        }
        let result = run_grid(&spec, run_cell, selection, self.cfg.grid.threads)?;
        fs::create_dir_all(&dir)?;
        result.write_jsonl(&table)?;
        fs::write(&ranking, serde_json::to_string_pretty(&result)? + "\n")?;
        self.record(&dir, Command::Grid, &outputs)?;
        Ok((StageOutcome { command: Command::Grid, skipped: false, artifacts: outputs }, result))
    }
}

/// Everything needed to evaluate checkpoints against one retain model.
pub struct Evaluator {
    pub forget: Vec<QARecord>,
    pub utility_retain: Vec<QARecord>,
    pub holdout: Vec<QARecord>,
    pub baseline: RetainBaseline,
    pub judge: Judge,
    pub scorer: CleannessScorer,
    pub opts: EvalOptions,
    pub seed: u64,
}

impl Evaluator {
    pub fn evaluate(&self, model: &SequenceModel) -> Result<MetricReport> {
        let ctx = EvalContext {
            forget: &self.forget,
            retain: &self.utility_retain,
            holdout: &self.holdout,
            baseline: &self.baseline,
            judge: &self.judge,
            scorer: &self.scorer,
            opts: self.opts.clone(),
        };
        let mut report = metrics::evaluate(model, &ctx)?;
        report.seed = Some(self.seed);
        Ok(report)
    }
}
