//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default, so an empty file is a complete configuration. Unknown keys and
//! unparsable values are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::judge::{JudgeConfig, JudgeMode};
use crate::losses::{Method, MethodSpec};
use crate::model::ModelConfig;
use crate::search::{GridSpec, SignConvention, DEFAULT_DELTA};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusOptions {
    pub n_authors: usize,
    pub qa_per_author: usize,
    pub k_perturbed: usize,
    pub forget_fraction: f64,
    pub holdout_fraction: f64,
    /// Alternates stored per forget record; `unlearn.m` uses a prefix of them.
    pub alternates: usize,
    /// JSON Lines of `{"record_id", "alternates"}`; local generation when unset.
    pub alternates_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub context_len: usize,
}

impl ModelOptions {
    pub fn config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            d_model: self.d_model,
            n_layers: self.n_layers,
            n_heads: self.n_heads,
            d_ff: self.d_ff,
            context_len: self.context_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub max_new_tokens: usize,
    /// Retain records used for model utility; 0 means as many as the forget set.
    pub mu_retain_records: usize,
    /// Checkpoint to evaluate; defaults to the last epoch of the configured unlearning run.
    pub checkpoint: Option<PathBuf>,
    /// Retain-model checkpoint; defaults to `<out_dir>/ckpts/retain.ckpt`.
    pub retain_checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScorerMode {
    Heuristic,
    Imported(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub spec: GridSpec,
    pub sign: SignConvention,
    pub delta: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub corpus: CorpusOptions,
    pub model: ModelOptions,
    pub finetune: TrainConfig,
    pub retain: TrainConfig,
    pub unlearn: TrainConfig,
    pub method: MethodSpec,
    /// Epoch-equivalents N of unlearning.
    pub n_epochs: usize,
    pub eval: EvalSettings,
    pub judge: JudgeConfig,
    pub scorer: ScorerMode,
    pub grid: GridOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = |lr, epochs, batch_size| TrainConfig { lr, epochs, batch_size, ..TrainConfig::default() };
        ExperimentConfig {
            seed: 0,
            out_dir: PathBuf::from("runs/default"),
            corpus: CorpusOptions {
                n_authors: 40,
                qa_per_author: 10,
                k_perturbed: 3,
                forget_fraction: 0.1,
                holdout_fraction: 0.1,
                alternates: 5,
                alternates_file: None,
            },
            model: ModelOptions { d_model: 64, n_layers: 2, n_heads: 2, d_ff: 128, context_len: 64 },
            finetune: train(3e-3, 70, 4),
            retain: train(3e-3, 70, 4),
            unlearn: train(1e-4, 1, 1),
            method: MethodSpec::new(Method::AltPO).with_alternates(5).with_w_r(5.0),
            n_epochs: 10,
            eval: EvalSettings { max_new_tokens: 32, mu_retain_records: 0, checkpoint: None, retain_checkpoint: None },
            judge: JudgeConfig::default(),
            scorer: ScorerMode::Heuristic,
            grid: GridOptions {
                spec: GridSpec { lrs: vec![5e-5, 1e-4], betas: vec![0.1], wrs: vec![1.0], seeds: vec![0, 1] },
                sign: SignConvention::default(),
                delta: DEFAULT_DELTA,
                threads: 1,
            },
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse {value:?} as {}", std::any::type_name::<T>())))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

/// Every accepted key, in canonical order.
pub const KEYS: &[&str] = &[
    "seed",
    "out_dir",
    "corpus.n_authors",
    "corpus.qa_per_author",
    "corpus.k_perturbed",
    "corpus.forget_fraction",
    "corpus.holdout_fraction",
    "corpus.alternates",
    "corpus.alternates_file",
    "model.d_model",
    "model.n_layers",
    "model.n_heads",
    "model.d_ff",
    "model.context_len",
    "finetune.lr",
    "finetune.epochs",
    "finetune.batch_size",
    "finetune.weight_decay",
    "finetune.warmup",
    "retain.lr",
    "retain.epochs",
    "retain.batch_size",
    "retain.weight_decay",
    "retain.warmup",
    "unlearn.method",
    "unlearn.beta",
    "unlearn.w_r",
    "unlearn.m",
    "unlearn.n_epochs",
    "unlearn.lr",
    "unlearn.weight_decay",
    "unlearn.warmup",
    "eval.max_new_tokens",
    "eval.mu_retain_records",
    "eval.checkpoint",
    "eval.retain_checkpoint",
    "judge.mode",
    "judge.endpoint",
    "judge.model",
    "judge.auth_env",
    "judge.timeout_secs",
    "judge.max_retries",
    "judge.max_concurrency",
    "judge.cache_dir",
    "scorer.mode",
    "scorer.file",
    "grid.lrs",
    "grid.betas",
    "grid.wrs",
    "grid.seeds",
    "grid.sign",
    "grid.delta",
    "grid.threads",
];

impl ExperimentConfig {
    /// Reads `path` (if given) and applies `overrides` on top; overrides win.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "seed" => self.seed = parse(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "corpus.n_authors" => self.corpus.n_authors = parse(key, v)?,
            "corpus.qa_per_author" => self.corpus.qa_per_author = parse(key, v)?,
            "corpus.k_perturbed" => self.corpus.k_perturbed = parse(key, v)?,
            "corpus.forget_fraction" => self.corpus.forget_fraction = parse(key, v)?,
            "corpus.holdout_fraction" => self.corpus.holdout_fraction = parse(key, v)?,
            "corpus.alternates" => self.corpus.alternates = parse(key, v)?,
            "corpus.alternates_file" => self.corpus.alternates_file = opt_path(v),
            "model.d_model" => self.model.d_model = parse(key, v)?,
            "model.n_layers" => self.model.n_layers = parse(key, v)?,
            "model.n_heads" => self.model.n_heads = parse(key, v)?,
            "model.d_ff" => self.model.d_ff = parse(key, v)?,
            "model.context_len" => self.model.context_len = parse(key, v)?,
            "unlearn.method" => {
                let method: Method = v.parse().map_err(|_| Error::Config(format!("`{key}`: unknown method {v:?}")))?;
                let old = self.method.clone();
                // Keep explicit hyperparameters where the new method accepts them.
                let mut spec = MethodSpec::new(method);
                if method.uses_beta() && old.method.uses_beta() {
                    spec.beta = old.beta.or(spec.beta);
                }
                if method.is_alt_family() && old.method.is_alt_family() {
                    spec.m_alternates = old.m_alternates;
                }
                if method != Method::GA && old.method != Method::GA {
                    spec.w_r = old.w_r;
                }
                self.method = spec;
            }
            "unlearn.beta" => self.method.beta = if v.is_empty() { None } else { Some(parse(key, v)?) },
            "unlearn.w_r" => self.method.w_r = parse(key, v)?,
            "unlearn.m" => self.method.m_alternates = parse(key, v)?,
            "unlearn.n_epochs" => self.n_epochs = parse(key, v)?,
            "eval.max_new_tokens" => self.eval.max_new_tokens = parse(key, v)?,
            "eval.mu_retain_records" => self.eval.mu_retain_records = parse(key, v)?,
            "eval.checkpoint" => self.eval.checkpoint = opt_path(v),
            "eval.retain_checkpoint" => self.eval.retain_checkpoint = opt_path(v),
            "judge.mode" => {
                self.judge.mode = match v {
                    "offline" => JudgeMode::Offline,
                    "remote" => JudgeMode::Remote,
                    _ => return Err(Error::Config(format!("`{key}`: expected offline or remote, got {v:?}"))),
                }
            }
            "judge.endpoint" => self.judge.endpoint = (!v.is_empty()).then(|| v.to_string()),
            "judge.model" => self.judge.model = v.to_string(),
            "judge.auth_env" => self.judge.auth_env = (!v.is_empty()).then(|| v.to_string()),
            "judge.timeout_secs" => self.judge.timeout_secs = parse(key, v)?,
            "judge.max_retries" => self.judge.max_retries = parse(key, v)?,
            "judge.max_concurrency" => self.judge.max_concurrency = parse(key, v)?,
            "judge.cache_dir" => self.judge.cache_dir = opt_path(v),
            "scorer.mode" => {
                self.scorer = match (v, &self.scorer) {
                    ("heuristic", _) => ScorerMode::Heuristic,
                    ("imported", ScorerMode::Imported(p)) => ScorerMode::Imported(p.clone()),
                    ("imported", ScorerMode::Heuristic) => ScorerMode::Imported(PathBuf::new()),
                    _ => return Err(Error::Config(format!("`{key}`: expected heuristic or imported, got {v:?}"))),
                }
            }
            "scorer.file" => {
                if let ScorerMode::Imported(p) = &mut self.scorer {
                    *p = PathBuf::from(v);
                } else if !v.is_empty() {
                    self.scorer = ScorerMode::Imported(PathBuf::from(v));
                }
            }
            "grid.lrs" => self.grid.spec.lrs = parse_list(key, v)?,
            "grid.betas" => self.grid.spec.betas = parse_list(key, v)?,
            "grid.wrs" => self.grid.spec.wrs = parse_list(key, v)?,
            "grid.seeds" => self.grid.spec.seeds = parse_list(key, v)?,
            "grid.sign" => self.grid.sign = v.parse().map_err(|e: Error| Error::Config(format!("`{key}`: {e}")))?,
            "grid.delta" => self.grid.delta = parse(key, v)?,
            "grid.threads" => self.grid.threads = parse(key, v)?,
            _ => {
                let (stage, field) = key.split_once('.').unwrap_or(("", key));
                let train = match stage {
                    "finetune" => &mut self.finetune,
                    "retain" => &mut self.retain,
                    "unlearn" => &mut self.unlearn,
                    _ => return Err(Error::Config(format!("unknown key `{key}`"))),
                };
                match field {
                    "lr" => train.lr = parse(key, v)?,
                    "epochs" if stage != "unlearn" => train.epochs = parse(key, v)?,
                    "batch_size" if stage != "unlearn" => train.batch_size = parse(key, v)?,
                    "weight_decay" => train.weight_decay = parse(key, v)?,
                    "warmup" => train.warmup = parse(key, v)?,
                    _ => return Err(Error::Config(format!("unknown key `{key}`"))),
                }
            }
        }
        Ok(())
    }

    /// Current textual value of `key`.
    pub fn get(&self, key: &str) -> Result<String> {
        let train = |t: &TrainConfig, field: &str| match field {
            "lr" => Some(t.lr.to_string()),
            "epochs" => Some(t.epochs.to_string()),
            "batch_size" => Some(t.batch_size.to_string()),
            "weight_decay" => Some(t.weight_decay.to_string()),
            "warmup" => Some(t.warmup.to_string()),
            _ => None,
        };
        let s = match key {
            "seed" => self.seed.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "corpus.n_authors" => self.corpus.n_authors.to_string(),
            "corpus.qa_per_author" => self.corpus.qa_per_author.to_string(),
            "corpus.k_perturbed" => self.corpus.k_perturbed.to_string(),
            "corpus.forget_fraction" => self.corpus.forget_fraction.to_string(),
            "corpus.holdout_fraction" => self.corpus.holdout_fraction.to_string(),
            "corpus.alternates" => self.corpus.alternates.to_string(),
            "corpus.alternates_file" => show_path(&self.corpus.alternates_file),
            "model.d_model" => self.model.d_model.to_string(),
            "model.n_layers" => self.model.n_layers.to_string(),
            "model.n_heads" => self.model.n_heads.to_string(),
            "model.d_ff" => self.model.d_ff.to_string(),
            "model.context_len" => self.model.context_len.to_string(),
            "unlearn.method" => self.method.method.to_string(),
            "unlearn.beta" => self.method.beta.map(|b| b.to_string()).unwrap_or_default(),
            "unlearn.w_r" => self.method.w_r.to_string(),
            "unlearn.m" => self.method.m_alternates.to_string(),
            "unlearn.n_epochs" => self.n_epochs.to_string(),
            "eval.max_new_tokens" => self.eval.max_new_tokens.to_string(),
            "eval.mu_retain_records" => self.eval.mu_retain_records.to_string(),
            "eval.checkpoint" => show_path(&self.eval.checkpoint),
            "eval.retain_checkpoint" => show_path(&self.eval.retain_checkpoint),
            "judge.mode" => match self.judge.mode {
                JudgeMode::Offline => "offline".into(),
                JudgeMode::Remote => "remote".into(),
            },
            "judge.endpoint" => self.judge.endpoint.clone().unwrap_or_default(),
            "judge.model" => self.judge.model.clone(),
            "judge.auth_env" => self.judge.auth_env.clone().unwrap_or_default(),
            "judge.timeout_secs" => self.judge.timeout_secs.to_string(),
            "judge.max_retries" => self.judge.max_retries.to_string(),
            "judge.max_concurrency" => self.judge.max_concurrency.to_string(),
            "judge.cache_dir" => show_path(&self.judge.cache_dir),
            "scorer.mode" => match self.scorer {
                ScorerMode::Heuristic => "heuristic".into(),
                ScorerMode::Imported(_) => "imported".into(),
            },
            "scorer.file" => match &self.scorer {
                ScorerMode::Heuristic => String::new(),
                ScorerMode::Imported(p) => p.display().to_string(),
            },
            "grid.lrs" => show_list(&self.grid.spec.lrs),
            "grid.betas" => show_list(&self.grid.spec.betas),
            "grid.wrs" => show_list(&self.grid.spec.wrs),
            "grid.seeds" => show_list(&self.grid.spec.seeds),
            "grid.sign" => self.grid.sign.to_string(),
            "grid.delta" => self.grid.delta.to_string(),
            "grid.threads" => self.grid.threads.to_string(),
            _ => {
                let (stage, field) = key.split_once('.').unwrap_or(("", key));
                let t = match stage {
                    "finetune" => &self.finetune,
                    "retain" => &self.retain,
                    "unlearn" => &self.unlearn,
                    _ => return Err(Error::Config(format!("unknown key `{key}`"))),
                };
                train(t, field).ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?
            }
        };
        Ok(s)
    }

    /// Canonical `key = value` text covering every key. Parsing it back
    /// yields an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("every listed key is readable"));
        }
        out
    }

    /// SHA-256 over the canonical lines whose key starts with one of `prefixes`.
    pub fn hash_keys(&self, prefixes: &[&str]) -> String {
        let mut h = Sha256::new();
        for key in KEYS.iter().filter(|k| prefixes.iter().any(|p| k.starts_with(p))) {
            h.update(format!("{key} = {}\n", self.get(key).expect("listed key")));
        }
        format!("{:x}", h.finalize())
    }

    pub fn hash(&self) -> String {
        self.hash_keys(&[""])
    }

    /// Checks every section; all failures are config errors.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        };
        let c = &self.corpus;
        if c.n_authors < 4 || c.qa_per_author < 2 || c.k_perturbed < 1 {
            return Err(Error::Config("corpus needs n_authors ≥ 4, qa_per_author ≥ 2 and k_perturbed ≥ 1".into()));
        }
        if !(c.forget_fraction > 0.0 && c.forget_fraction < 1.0)
            || !(c.holdout_fraction > 0.0)
            || c.forget_fraction + c.holdout_fraction >= 1.0
        {
            return Err(Error::Config(
                "corpus.forget_fraction must be in (0,1), corpus.holdout_fraction positive, and their sum below 1".into(),
            ));
        }
        if c.alternates == 0 {
            return Err(Error::Config("corpus.alternates must be at least 1".into()));
        }
        if let Some(p) = &c.alternates_file {
            if !p.is_file() {
                return Err(Error::Config(format!("corpus.alternates_file {} does not exist", p.display())));
            }
        }
        self.model.config(16).validate().map_err(cfg_err)?;
        for (name, t) in [("finetune", &self.finetune), ("retain", &self.retain), ("unlearn", &self.unlearn)] {
            t.validate().map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        self.method.validate().map_err(|e| Error::Config(format!("unlearn: {e}")))?;
        if self.method.method.is_alt_family() && self.method.m_alternates > c.alternates {
            return Err(Error::Config(format!(
                "unlearn.m = {} exceeds corpus.alternates = {}",
                self.method.m_alternates, c.alternates
            )));
        }
        if self.n_epochs == 0 {
            return Err(Error::Config("unlearn.n_epochs must be at least 1".into()));
        }
        if self.method.method.is_alt_family() && self.n_epochs % self.method.m_alternates != 0 {
            return Err(Error::Config(format!(
                "unlearn.n_epochs = {} is not a multiple of unlearn.m = {}; pick N divisible by M",
                self.n_epochs, self.method.m_alternates
            )));
        }
        if self.eval.max_new_tokens == 0 {
            return Err(Error::Config("eval.max_new_tokens must be at least 1".into()));
        }
        for p in [&self.eval.checkpoint, &self.eval.retain_checkpoint].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::MissingArtifact(p.clone()));
            }
        }
        self.judge.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let ScorerMode::Imported(p) = &self.scorer {
            if !p.is_file() {
                return Err(Error::Config(format!("scorer.file {:?} does not exist", p.display().to_string())));
            }
        }
        self.grid.spec.validate().map_err(cfg_err)?;
        if !(self.grid.delta > 0.0) || self.grid.threads == 0 {
            return Err(Error::Config("grid.delta must be positive and grid.threads at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = ExperimentConfig::parse_text("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn overrides_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        std::fs::write(&path, "# comment\nunlearn.beta = 0.1\nseed = 3\n").unwrap();
        let cfg = ExperimentConfig::load(Some(&path), &["unlearn.beta=0.05".into()]).unwrap();
        assert_eq!(cfg.method.beta, Some(0.05));
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse_text("unlern.beta = 0.1").unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("unlern.beta")), "{err}");
        let err = ExperimentConfig::parse_text("unlearn.epochs = 3").unwrap_err();
        assert!(err.to_string().contains("unlearn.epochs"));
    }

    #[test]
    fn type_mismatch() {
        let err = ExperimentConfig::parse_text("seed = many").unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("line 1") && m.contains("seed")), "{err}");
        assert!(ExperimentConfig::parse_text("judge.mode = psychic").is_err());
        assert!(ExperimentConfig::parse_text("no equals sign").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("unlearn.method", "npo").unwrap();
        cfg.set("grid.lrs", "1e-5, 2e-5").unwrap();
        cfg.set("eval.checkpoint", "x/y.ckpt").unwrap();
        let back = ExperimentConfig::parse_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.to_text().lines().count(), KEYS.len());
    }

    #[test]
    fn method_switch_keeps_compatible_settings() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("unlearn.beta", "0.05").unwrap();
        cfg.set("unlearn.method", "altdiff").unwrap();
        assert_eq!((cfg.method.beta, cfg.method.m_alternates), (None, 5));
        cfg.set("unlearn.method", "GA").unwrap();
        assert_eq!(cfg.method.w_r, 0.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_errors_are_config_errors() {
        let bad = |text: &str| ExperimentConfig::parse_text(text).unwrap().validate().unwrap_err();
        assert!(matches!(bad("unlearn.n_epochs = 7"), Error::Config(m) if m.contains("multiple")));
        assert!(matches!(bad("unlearn.m = 6"), Error::Config(_)));
        assert!(matches!(bad("model.n_heads = 3"), Error::Config(_)));
        assert!(matches!(bad("grid.lrs = "), Error::Config(m) if m.contains("lrs")));
        assert!(matches!(bad("judge.mode = remote"), Error::Config(_)));
        assert!(matches!(bad("eval.checkpoint = /no/such.ckpt"), Error::MissingArtifact(_)));
    }

    #[test]
    fn stage_hashes_ignore_unrelated_keys() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.set("eval.max_new_tokens", "8").unwrap();
        assert_eq!(a.hash_keys(&["seed", "corpus."]), b.hash_keys(&["seed", "corpus."]));
        assert_ne!(a.hash(), b.hash());
    }
}
