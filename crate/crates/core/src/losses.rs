//! Forget-set losses and composite unlearning objectives.
//!
//! Every loss here is a scalar function of sequence log-probabilities, so each
//! one reports its value together with the coefficients `c_i` such that
//! `∇ value = Σ c_i ∇ log π_θ(y_i | x_i)`; the model's gradient primitive does
//! the rest.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gradients, SeqTrace, SequenceModel, WeightedSeq};

pub const IDK_POOL: [&str; 5] = [
    "I don't know.",
    "I'm not sure about that.",
    "I cannot answer that.",
    "That is unknown to me.",
    "I have no information on that.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    GA,
    GradDiff,
    NPO,
    IdkPO,
    AltNLL,
    AltDiff,
    AltPOpos,
    AltPO,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::GA,
        Method::GradDiff,
        Method::NPO,
        Method::IdkPO,
        Method::AltNLL,
        Method::AltDiff,
        Method::AltPOpos,
        Method::AltPO,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::GA => "GA",
            Method::GradDiff => "GradDiff",
            Method::NPO => "NPO",
            Method::IdkPO => "IdkPO",
            Method::AltNLL => "AltNLL",
            Method::AltDiff => "AltDiff",
            Method::AltPOpos => "AltPOpos",
            Method::AltPO => "AltPO",
        }
    }

    /// Methods trained on generated alternate answers.
    pub fn is_alt_family(self) -> bool {
        matches!(self, Method::AltNLL | Method::AltDiff | Method::AltPOpos | Method::AltPO)
    }

    /// Methods with a β-scaled log-sigmoid term against the reference model.
    pub fn uses_beta(self) -> bool {
        matches!(self, Method::NPO | Method::IdkPO | Method::AltPOpos | Method::AltPO)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Case-insensitive; `-` and `_` are ignored, so `AltPO-pos` parses.
    fn from_str(s: &str) -> Result<Method> {
        let key: String = s.chars().filter(|c| !matches!(c, '-' | '_')).collect();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(&key))
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub beta: Option<f64>,
    pub w_r: f64,
    pub m_alternates: usize,
    pub idk_pool: Vec<String>,
}

impl MethodSpec {
    /// A spec with the usual defaults for `method`: β = 0.1 where used,
    /// w_r = 1 (0 for GA), M = 1, the fixed refusal pool for IdkPO.
    pub fn new(method: Method) -> Self {
        MethodSpec {
            method,
            beta: method.uses_beta().then_some(0.1),
            w_r: if method == Method::GA { 0.0 } else { 1.0 },
            m_alternates: 1,
            idk_pool: if method == Method::IdkPO { IDK_POOL.map(String::from).to_vec() } else { Vec::new() },
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_w_r(mut self, w_r: f64) -> Self {
        self.w_r = w_r;
        self
    }

    pub fn with_alternates(mut self, m: usize) -> Self {
        self.m_alternates = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.method;
        let bad = |msg: String| Err(Error::invalid(format!("{m}: {msg}")));
        match (m.uses_beta(), self.beta) {
            (true, None) => return bad("beta is required".into()),
            (true, Some(b)) if !(b > 0.0 && b.is_finite()) => return bad(format!("beta must be positive, got {b}")),
            (false, Some(_)) => return bad("beta is not a parameter of this method".into()),
            _ => {}
        }
        if !(self.w_r >= 0.0 && self.w_r.is_finite()) {
            return bad(format!("w_r must be non-negative, got {}", self.w_r));
        }
        if m == Method::GA && self.w_r != 0.0 {
            return bad("plain gradient ascent has no retain term; use GradDiff".into());
        }
        if self.m_alternates == 0 {
            return bad("m_alternates must be at least 1".into());
        }
        if !m.is_alt_family() && self.m_alternates != 1 {
            return bad("m_alternates applies only to alternate-answer methods".into());
        }
        if m == Method::IdkPO && self.idk_pool.is_empty() {
            return bad("idk_pool must not be empty".into());
        }
        Ok(())
    }

    pub fn beta(&self) -> Result<f64> {
        self.beta.ok_or_else(|| Error::invalid(format!("{}: beta is required", self.method)))
    }
}

/// A (prompt, response) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QA {
    pub question: String,
    pub answer: String,
}

impl QA {
    pub fn new(question: impl Into<String>, answer: impl Into<String>) -> Self {
        QA { question: question.into(), answer: answer.into() }
    }
}

/// Cached log π(y|x) under the frozen reference model.
#[derive(Debug, Clone, Default)]
pub struct RefLogprobs {
    values: HashMap<(String, String), f64>,
}

impl RefLogprobs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Scores every pair once with `reference`; pairs already present are skipped.
    pub fn compute<'a>(&mut self, reference: &SequenceModel, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        for (x, y) in pairs {
            let key = (x.to_owned(), y.to_owned());
            if !self.values.contains_key(&key) {
                let lp = reference.seq_logprob(x, y)?;
                self.values.insert(key, lp);
            }
        }
        Ok(())
    }

    pub fn insert(&mut self, question: &str, answer: &str, logprob: f64) {
        self.values.insert((question.to_owned(), answer.to_owned()), logprob);
    }

    pub fn get(&self, question: &str, answer: &str) -> Result<f64> {
        self.values
            .get(&(question.to_owned(), answer.to_owned()))
            .copied()
            .ok_or_else(|| Error::Loss(format!("no reference log-prob for ({question:?}, {answer:?})")))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Inputs of one unlearning step. For IdkPO the `alternate` slot holds the
/// sampled refusal string.
#[derive(Debug, Clone)]
pub struct LossBatch<'a> {
    pub forget: QA,
    pub alternate: Option<String>,
    pub retain: Option<QA>,
    pub refs: &'a RefLogprobs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LossOutput {
    pub value: f64,
    pub items: Vec<WeightedSeq>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl LossOutput {
    fn single(value: f64, x: &str, y: &str, coefficient: f64) -> Self {
        LossOutput { value, items: vec![WeightedSeq::new(x, y, coefficient)], diagnostics: BTreeMap::new() }
    }

    /// `self + weight · other`, with `other`'s diagnostics prefixed.
    fn plus(mut self, other: LossOutput, weight: f64, prefix: &str) -> Self {
        self.value += weight * other.value;
        self.items.extend(
            other.items.into_iter().map(|it| WeightedSeq { coefficient: weight * it.coefficient, ..it }),
        );
        for (k, v) in other.diagnostics {
            self.diagnostics.insert(format!("{prefix}{k}"), v);
        }
        self
    }

    fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        for it in &mut self.items {
            it.coefficient *= s;
        }
        self
    }

    fn diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_owned(), value);
        self
    }
}

/// log σ(t), stable for large |t|.
pub fn log_sigmoid(t: f64) -> f64 {
    -softplus(-t)
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Loss(format!("beta must be positive, got {beta}")))
    }
}

/// −log π_θ(y|x).
pub fn loss_nll(x: &str, y: &str, theta_logprob: f64) -> LossOutput {
    LossOutput::single(-theta_logprob, x, y, -1.0).diag("logprob", theta_logprob)
}

/// −(2/β) log σ(−β z) with z = log π_θ(y_f|x_f) − log π(y_f|x_f).
pub fn loss_npo_fg(x: &str, y_f: &str, z: f64, beta: f64) -> Result<LossOutput> {
    check_beta(beta)?;
    let t = -beta * z;
    let value = -(2.0 / beta) * log_sigmoid(t);
    let coefficient = 2.0 * sigmoid(-t);
    Ok(LossOutput::single(value, x, y_f, coefficient).diag("z", z))
}

/// −(2/β) log σ(β (z_pos − z_neg)).
pub fn loss_dpo(x: &str, y_pos: &str, y_neg: &str, z_pos: f64, z_neg: f64, beta: f64) -> Result<LossOutput> {
    check_beta(beta)?;
    let t = beta * (z_pos - z_neg);
    let value = -(2.0 / beta) * log_sigmoid(t);
    let c = 2.0 * sigmoid(-t);
    Ok(LossOutput {
        value,
        items: vec![WeightedSeq::new(x, y_pos, -c), WeightedSeq::new(x, y_neg, c)],
        diagnostics: BTreeMap::from([("z_pos".into(), z_pos), ("z_neg".into(), z_neg), ("margin".into(), t)]),
    })
}

/// −(2/β) log σ(β z_cross) with z_cross = log π_θ(y_a|x_f) − log π(y_f|x_f):
/// positive feedback on the alternate only.
pub fn loss_altpo_pos(x: &str, y_a: &str, z_cross: f64, beta: f64) -> Result<LossOutput> {
    check_beta(beta)?;
    let t = beta * z_cross;
    let value = -(2.0 / beta) * log_sigmoid(t);
    let c = -2.0 * sigmoid(-t);
    Ok(LossOutput::single(value, x, y_a, c).diag("z_cross", z_cross))
}

/// Evaluates a method's objective on one batch and keeps the forward traces
/// so the gradient can be taken without re-running the model.
pub fn evaluate(spec: &MethodSpec, batch: &LossBatch, model: &SequenceModel) -> Result<(LossOutput, Vec<SeqTrace>)> {
    spec.validate()?;
    let m = spec.method;
    let QA { question: x, answer: y_f } = &batch.forget;
    let needs_alt = m.is_alt_family() || m == Method::IdkPO;
    let alt = match (&batch.alternate, needs_alt) {
        (Some(a), true) => Some(a.as_str()),
        (None, true) => return Err(Error::Loss(format!("{m} requires an alternate answer in the batch"))),
        _ => None,
    };
    let retain = match (&batch.retain, spec.w_r > 0.0) {
        (Some(r), true) => Some(r),
        (None, true) => return Err(Error::Loss(format!("{m} with w_r > 0 requires a retain item"))),
        _ => None,
    };

    let mut traces: HashMap<(String, String), SeqTrace> = HashMap::new();
    let mut lp = |q: &str, a: &str| -> Result<f64> {
        let key = (q.to_owned(), a.to_owned());
        if let Some(t) = traces.get(&key) {
            return Ok(t.logprob());
        }
        let t = model.trace(q, a)?;
        let v = t.logprob();
        traces.insert(key, t);
        Ok(v)
    };

    let forget_term = match m {
        Method::GA | Method::GradDiff => {
            let l = lp(x, y_f)?;
            loss_nll(x, y_f, l).scaled(-1.0)
        }
        Method::NPO => {
            let z = lp(x, y_f)? - batch.refs.get(x, y_f)?;
            loss_npo_fg(x, y_f, z, spec.beta()?)?
        }
        Method::IdkPO | Method::AltPO => {
            let a = alt.expect("checked above");
            let z_pos = lp(x, a)? - batch.refs.get(x, a)?;
            let z_neg = lp(x, y_f)? - batch.refs.get(x, y_f)?;
            loss_dpo(x, a, y_f, z_pos, z_neg, spec.beta()?)?
        }
        Method::AltNLL => {
            let a = alt.expect("checked above");
            loss_nll(x, a, lp(x, a)?)
        }
        Method::AltDiff => {
            let a = alt.expect("checked above");
            let pos = loss_nll(x, a, lp(x, a)?);
            let neg = loss_nll(x, y_f, lp(x, y_f)?);
            LossOutput::default().plus(pos, 1.0, "alt_").plus(neg, -1.0, "forget_")
        }
        Method::AltPOpos => {
            let a = alt.expect("checked above");
            let z_cross = lp(x, a)? - batch.refs.get(x, y_f)?;
            loss_altpo_pos(x, a, z_cross, spec.beta()?)?
        }
    };
    let mut out = forget_term;
    if let Some(r) = retain {
        let l = lp(&r.question, &r.answer)?;
        out = out.plus(loss_nll(&r.question, &r.answer, l), spec.w_r, "retain_");
    }
    out.diagnostics.insert("value".into(), out.value);

    let traces = out
        .items
        .iter()
        .map(|it| traces.get(&(it.prompt.clone(), it.response.clone())).cloned().expect("traced"))
        .collect();
    Ok((out, traces))
}

/// Value, coefficient list and diagnostics of a method on one batch.
pub fn method_loss(spec: &MethodSpec, batch: &LossBatch, model: &SequenceModel) -> Result<LossOutput> {
    Ok(evaluate(spec, batch, model)?.0)
}

/// Loss output plus its exact gradient with respect to the model parameters.
pub fn method_loss_and_grad(spec: &MethodSpec, batch: &LossBatch, model: &SequenceModel) -> Result<(LossOutput, Gradients)> {
    let (out, traces) = evaluate(spec, batch, model)?;
    let weighted: Vec<(&SeqTrace, f64)> = traces.iter().zip(&out.items).map(|(t, it)| (t, it.coefficient)).collect();
    let grads = model.backprop(&weighted)?;
    Ok((out, grads))
}
