//! Tiny decoder-only transformer with exact sequence log-probabilities and
//! hand-derived gradients.
//!
//! Parameters are stored as `f32`; every forward and backward pass runs in
//! `f64` on a mirrored copy so loss values and gradients accumulate in double
//! precision.
//!
//! Architecture: token + learned position embeddings, `n_layers` pre-norm
//! blocks (causal multi-head attention, GELU feed-forward), a final layer
//! norm and an untied output head with bias.

mod checkpoint;
mod kernels;
mod sample;

use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tokenizer::{Tokenizer, EOS};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use kernels::SeqTrace;

/// Serialized checkpoint bytes, identical to what [`save_checkpoint`] writes.
pub fn checkpoint_bytes(model: &SequenceModel) -> Vec<u8> {
    checkpoint::encode(model)
}
pub use sample::SampleMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub context_len: usize,
}

impl ModelConfig {
    /// Default desk-scale configuration for a given vocabulary.
    pub fn desk(vocab_size: usize) -> Self {
        ModelConfig { vocab_size, d_model: 64, n_layers: 2, n_heads: 2, d_ff: 128, context_len: 128 }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("d_model", self.d_model),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("context_len", self.context_len),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Model(format!("{name} must be positive")));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Model(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        Ok(())
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        let (v, d, f, c) = (self.vocab_size, self.d_model, self.d_ff, self.context_len);
        let per_layer = 4 * d * d + 2 * d * f + 9 * d + f;
        v * d + c * d + self.n_layers * per_layer + 2 * d + d * v + v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl ParamInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerOffsets {
    pub ln1_g: usize,
    pub ln1_b: usize,
    pub wqkv: usize,
    pub bqkv: usize,
    pub wo: usize,
    pub bo: usize,
    pub ln2_g: usize,
    pub ln2_b: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

/// Named parameter tensors laid out contiguously in one flat buffer.
#[derive(Debug, Clone)]
pub struct Layout {
    pub params: Vec<ParamInfo>,
    pub total: usize,
    pub(crate) wte: usize,
    pub(crate) wpe: usize,
    pub(crate) layers: Vec<LayerOffsets>,
    pub(crate) lnf_g: usize,
    pub(crate) lnf_b: usize,
    pub(crate) head_w: usize,
    pub(crate) head_b: usize,
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let (v, d, f, c) = (cfg.vocab_size, cfg.d_model, cfg.d_ff, cfg.context_len);
        let mut params = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let at = offset;
            offset += shape.iter().product::<usize>();
            params.push(ParamInfo { name, shape, offset: at });
            at
        };
        let wte = push("wte".into(), vec![v, d]);
        let wpe = push("wpe".into(), vec![c, d]);
        let mut layers = Vec::with_capacity(cfg.n_layers);
        for l in 0..cfg.n_layers {
            let p = |s: &str| format!("h{l}.{s}");
            layers.push(LayerOffsets {
                ln1_g: push(p("ln1.g"), vec![d]),
                ln1_b: push(p("ln1.b"), vec![d]),
                wqkv: push(p("attn.wqkv"), vec![d, 3 * d]),
                bqkv: push(p("attn.bqkv"), vec![3 * d]),
                wo: push(p("attn.wo"), vec![d, d]),
                bo: push(p("attn.bo"), vec![d]),
                ln2_g: push(p("ln2.g"), vec![d]),
                ln2_b: push(p("ln2.b"), vec![d]),
                w1: push(p("mlp.w1"), vec![d, f]),
                b1: push(p("mlp.b1"), vec![f]),
                w2: push(p("mlp.w2"), vec![f, d]),
                b2: push(p("mlp.b2"), vec![d]),
            });
        }
        let lnf_g = push("lnf.g".into(), vec![d]);
        let lnf_b = push("lnf.b".into(), vec![d]);
        let head_w = push("head.w".into(), vec![d, v]);
        let head_b = push("head.b".into(), vec![v]);
        Layout { params, total: offset, wte, wpe, layers, lnf_g, lnf_b, head_w, head_b }
    }

    pub fn find(&self, name: &str) -> Option<&ParamInfo> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Trainable,
    Frozen,
}

/// A prompt/response pair with a scalar weight for the gradient primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSeq {
    pub prompt: String,
    pub response: String,
    pub coefficient: f64,
}

impl WeightedSeq {
    pub fn new(prompt: impl Into<String>, response: impl Into<String>, coefficient: f64) -> Self {
        WeightedSeq { prompt: prompt.into(), response: response.into(), coefficient }
    }
}

/// Gradient buffer with the same layout as the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    layout: Arc<Layout>,
    pub values: Vec<f64>,
}

impl Gradients {
    pub(crate) fn zeros(layout: Arc<Layout>) -> Self {
        let values = vec![0.0; layout.total];
        Gradients { layout, values }
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.layout.find(name).map(|p| &self.values[p.range()])
    }

    pub fn named(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.layout.params.iter().map(|p| (p.name.as_str(), &self.values[p.range()]))
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// First parameter holding a NaN or infinity, if any.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.layout
            .params
            .iter()
            .find(|p| self.values[p.range()].iter().any(|v| !v.is_finite()))
            .map(|p| p.name.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SequenceModel {
    config: ModelConfig,
    layout: Arc<Layout>,
    params: Vec<f32>,
    /// `params` widened to f64; kept in sync by every mutator.
    wide: Vec<f64>,
    mode: Mode,
    tokenizer: Option<Arc<Tokenizer>>,
}

/// Deterministic initialization: embeddings and projections ~ N(0, 0.02²),
/// residual output projections scaled by 1/sqrt(2·n_layers), biases 0,
/// layer-norm gains 1.
pub fn init_model(config: ModelConfig, seed: u64) -> Result<SequenceModel> {
    config.validate()?;
    let layout = Arc::new(Layout::new(&config));
    let mut params = vec![0.0f32; layout.total];
    let mut rng = rng::stream(seed, "model/init");
    let std = 0.02;
    let resid_std = std / (2.0 * config.n_layers as f64).sqrt();
    for p in &layout.params {
        let leaf = p.name.rsplit('.').next().unwrap_or(&p.name);
        let slice = &mut params[p.range()];
        match leaf {
            "g" => slice.fill(1.0),
            "b" | "bqkv" | "bo" | "b1" | "b2" => slice.fill(0.0),
            _ => {
                let s = if leaf == "wo" || leaf == "w2" { resid_std } else { std };
                let normal = Normal::new(0.0, s).expect("positive std");
                for v in slice.iter_mut() {
                    *v = normal.sample(&mut rng) as f32;
                }
            }
        }
    }
    SequenceModel::from_params(config, params)
}

impl SequenceModel {
    pub(crate) fn from_params(config: ModelConfig, params: Vec<f32>) -> Result<Self> {
        config.validate()?;
        let layout = Arc::new(Layout::new(&config));
        if params.len() != layout.total {
            return Err(Error::Model(format!(
                "expected {} parameters, got {}",
                layout.total,
                params.len()
            )));
        }
        let wide = params.iter().map(|&p| p as f64).collect();
        Ok(SequenceModel { config, layout, params, wide, mode: Mode::Trainable, tokenizer: None })
    }

    /// Attaches the tokenizer used by the text-level methods.
    pub fn with_tokenizer(mut self, tokenizer: Arc<Tokenizer>) -> Result<Self> {
        if tokenizer.vocab_size() != self.config.vocab_size {
            return Err(Error::Model(format!(
                "tokenizer has {} tokens but model vocab_size is {}",
                tokenizer.vocab_size(),
                self.config.vocab_size
            )));
        }
        self.tokenizer = Some(tokenizer);
        Ok(self)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn tokenizer(&self) -> Result<&Arc<Tokenizer>> {
        self.tokenizer.as_ref().ok_or_else(|| Error::Model("no tokenizer attached".into()))
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&[f32]> {
        self.layout.find(name).map(|p| &self.params[p.range()])
    }

    /// A frozen deep copy, as used for reference and retain models.
    pub fn frozen(&self) -> SequenceModel {
        SequenceModel { mode: Mode::Frozen, ..self.clone() }
    }

    pub fn freeze(&mut self) {
        self.mode = Mode::Frozen;
    }

    pub fn unfreeze(&mut self) {
        self.mode = Mode::Trainable;
    }

    pub fn set_param_value(&mut self, index: usize, value: f32) {
        self.params[index] = value;
        self.wide[index] = value as f64;
    }

    /// Applies `f` to every parameter (as f64) and stores the f32-rounded result.
    pub fn update_params(&mut self, mut f: impl FnMut(usize, f64) -> f64) {
        for (i, (p, w)) in self.params.iter_mut().zip(self.wide.iter_mut()).enumerate() {
            *p = f(i, *w) as f32;
            *w = *p as f64;
        }
    }

    pub(crate) fn check_length(&self, len: usize) -> Result<()> {
        if len > self.config.context_len {
            return Err(Error::TooLong { len, max: self.config.context_len });
        }
        Ok(())
    }

    /// Σ log p(response_i | prompt, response_<i) over the given response ids.
    ///
    /// Response ids after the first EOS (padding) are ignored. No EOS is
    /// appended: enumeration over fixed-length responses sums to one.
    pub fn response_logprob(&self, prompt: &[u32], response: &[u32]) -> Result<f64> {
        Ok(self.trace_ids(prompt, response)?.logprob())
    }

    pub fn trace_ids(&self, prompt: &[u32], response: &[u32]) -> Result<SeqTrace> {
        if prompt.is_empty() {
            return Err(Error::Model("prompt must contain at least one token".into()));
        }
        let response = match response.iter().position(|&t| t == EOS) {
            Some(i) => &response[..=i],
            None => response,
        };
        if response.is_empty() {
            return Err(Error::Model("empty response".into()));
        }
        if let Some(&bad) = prompt.iter().chain(response).find(|&&t| t as usize >= self.config.vocab_size) {
            return Err(Error::Model(format!("token id {bad} outside vocabulary")));
        }
        kernels::forward_traced(self, prompt, response)
    }

    /// Text-level log π(y|x): BOS x SEP prefix, answer tokens plus EOS scored.
    pub fn seq_logprob(&self, prompt: &str, response: &str) -> Result<f64> {
        Ok(self.trace(prompt, response)?.logprob())
    }

    pub fn trace(&self, prompt: &str, response: &str) -> Result<SeqTrace> {
        let tok = self.tokenizer()?;
        self.trace_ids(&tok.encode_prompt(prompt), &tok.encode_response(response))
    }

    /// Number of scored tokens of a response (answer tokens plus EOS).
    pub fn response_len(&self, response: &str) -> Result<usize> {
        Ok(self.tokenizer()?.encode_response(response).len())
    }

    /// Exact ∇θ Σ_i c_i · log π(y_i | x_i).
    pub fn grad_weighted_logprobs(&self, items: &[WeightedSeq]) -> Result<Gradients> {
        if self.mode == Mode::Frozen {
            return Err(Error::Frozen);
        }
        if items.is_empty() {
            return Err(Error::Model("empty item list".into()));
        }
        let traces = items
            .iter()
            .map(|it| self.trace(&it.prompt, &it.response))
            .collect::<Result<Vec<_>>>()?;
        let weighted: Vec<(&SeqTrace, f64)> =
            traces.iter().zip(items).map(|(t, it)| (t, it.coefficient)).collect();
        self.backprop(&weighted)
    }

    /// Accumulates Σ c_i ∇ log π for already-traced sequences.
    pub fn backprop(&self, traces: &[(&SeqTrace, f64)]) -> Result<Gradients> {
        if self.mode == Mode::Frozen {
            return Err(Error::Frozen);
        }
        let mut grads = Gradients::zeros(self.layout.clone());
        for &(trace, c) in traces {
            if c != 0.0 {
                kernels::backward(self, trace, c, &mut grads.values);
            }
        }
        Ok(grads)
    }

    /// Next-token distribution after `context` (softmax over the vocabulary).
    pub fn next_token_probs(&self, context: &[u32]) -> Result<Vec<f64>> {
        self.check_length(context.len())?;
        Ok(kernels::last_position_probs(self, context, 1.0))
    }

    pub(crate) fn wide(&self) -> &[f64] {
        &self.wide
    }

    pub(crate) fn layout_arc(&self) -> &Arc<Layout> {
        &self.layout
    }
}

#[cfg(test)]
mod tests;
