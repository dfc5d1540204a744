//! AdamW with linear warmup, the supervised finetuning loop, and the
//! unlearning loop.

mod unlearn;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::QARecord;
use crate::error::{Error, Result};
use crate::model::{Gradients, SequenceModel, WeightedSeq};
use crate::rng;

pub use unlearn::{unlearn, StepRecord, UnlearnRun};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Warmup length as a fraction of one epoch's optimizer steps.
    pub warmup: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 1,
            epochs: 1,
            warmup: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be positive, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.weight_decay >= 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("weight_decay must be ≥ 0 and betas in [0, 1)"));
        }
        if !(self.eps > 0.0) || !(self.warmup >= 0.0) {
            return Err(Error::invalid("eps must be positive and warmup non-negative"));
        }
        Ok(())
    }

    /// Warmup steps for an epoch of `steps_per_epoch` steps (at least 1).
    pub fn warmup_steps(&self, steps_per_epoch: usize) -> usize {
        ((self.warmup * steps_per_epoch as f64).round() as usize).max(1)
    }
}

/// base_lr · min(1, (step + 1) / warmup_steps).
pub fn lr_at(step: usize, warmup_steps: usize, base_lr: f64) -> Result<f64> {
    if warmup_steps < 1 {
        return Err(Error::invalid("warmup_steps must be at least 1"));
    }
    Ok(base_lr * ((step + 1) as f64 / warmup_steps as f64).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(n_params: usize) -> Self {
        OptimizerState { step: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }
}

/// One AdamW update. Weight decay is decoupled and applied to the parameter
/// before the adaptive step: θ ← θ(1 − lr·wd), then θ ← θ − lr·m̂/(√v̂ + ε).
pub fn adamw_step(
    model: &mut SequenceModel,
    grads: &Gradients,
    state: &mut OptimizerState,
    cfg: &TrainConfig,
    lr_now: f64,
) -> Result<()> {
    if grads.values.len() != model.params().len() || state.m.len() != grads.values.len() {
        return Err(Error::Model("optimizer, gradient and parameter shapes differ".into()));
    }
    if let Some(param) = grads.first_non_finite() {
        return Err(Error::NonFinite { param: param.to_owned() });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let (m, v, g) = (&mut state.m, &mut state.v, &grads.values);
    model.update_params(|i, p| {
        let decayed = p * (1.0 - lr_now * cfg.weight_decay);
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        decayed - lr_now * m_hat / (v_hat.sqrt() + cfg.eps)
    });
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneLog {
    /// Mean NLL over each epoch's records, measured before each update.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

/// Deterministic permutation of `0..n` for one epoch.
pub(crate) fn epoch_order(n: usize, seed: u64, label: &str, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &format!("{label}/epoch{epoch}")));
    order
}

/// Minimizes the mean NLL of answers given questions.
pub fn finetune(model: &mut SequenceModel, records: &[QARecord], cfg: &TrainConfig) -> Result<FinetuneLog> {
    finetune_with(model, records, cfg, |_, _| {})
}

/// [`finetune`] with a callback invoked after each epoch with (epoch, mean NLL).
pub fn finetune_with(
    model: &mut SequenceModel,
    records: &[QARecord],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<FinetuneLog> {
    cfg.validate()?;
    if records.is_empty() {
        return Err(Error::invalid("finetune needs at least one record"));
    }
    let steps_per_epoch = records.len().div_ceil(cfg.batch_size);
    let warmup = cfg.warmup_steps(steps_per_epoch);
    let mut state = OptimizerState::new(model.params().len());
    let mut log = FinetuneLog { epoch_losses: Vec::with_capacity(cfg.epochs), steps: 0 };
    for epoch in 0..cfg.epochs {
        let order = epoch_order(records.len(), cfg.seed, "finetune", epoch);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let traces = batch
                .iter()
                .map(|&i| model.trace(&records[i].question, &records[i].answer))
                .collect::<Result<Vec<_>>>()?;
            total += traces.iter().map(|t| -t.logprob()).sum::<f64>();
            let weighted: Vec<_> = traces.iter().map(|t| (t, -scale)).collect();
            let grads = model.backprop(&weighted)?;
            let lr = lr_at(log.steps, warmup, cfg.lr)?;
            adamw_step(model, &grads, &mut state, cfg, lr)?;
            log.steps += 1;
        }
        let mean = total / records.len() as f64;
        log.epoch_losses.push(mean);
        on_epoch(epoch, mean);
    }
    Ok(log)
}

/// Mean NLL of `records` under `model` (no update).
pub fn mean_nll(model: &SequenceModel, records: &[QARecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("mean_nll needs at least one record"));
    }
    let mut total = 0.0;
    for r in records {
        total -= model.seq_logprob(&r.question, &r.answer)?;
    }
    Ok(total / records.len() as f64)
}

/// Weighted items for a plain NLL step over `records`, for callers driving
/// their own loop.
pub fn nll_items(records: &[&QARecord]) -> Vec<WeightedSeq> {
    let c = -1.0 / records.len().max(1) as f64;
    records.iter().map(|r| WeightedSeq::new(&r.question, &r.answer, c)).collect()
}
