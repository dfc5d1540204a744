//! Evaluation metrics: truth ratio, forget quality, model utility, text
//! cleanness, cleanness indistinguishability, forget utility and
//! self-confidence.

mod cleanness;
mod ks;
mod rouge;

use serde::{Deserialize, Serialize};

use crate::corpus::QARecord;
use crate::error::{Error, Result};
use crate::judge::Judge;
use crate::model::{SampleMode, SequenceModel};
use crate::tokenizer::EOS;

pub use cleanness::{heuristic_cleanness, repetition_factor, text_cleanness, CleannessScorer};
pub use ks::{kolmogorov_q, ks_statistic, ks_two_sample, KsResult};
pub use rouge::{lcs_len, rouge_l_recall, rouge_tokens};

/// Length-normalized probability π(y|x)^{1/|y|}, |y| counting the EOS token.
pub fn norm_prob(model: &SequenceModel, question: &str, answer: &str) -> Result<f64> {
    let trace = model.trace(question, answer)?;
    Ok((trace.logprob() / trace.scored_tokens() as f64).exp())
}

/// Mean norm-prob of the perturbed answers divided by the norm-prob of the
/// paraphrased answer.
pub fn truth_ratio(model: &SequenceModel, record: &QARecord) -> Result<f64> {
    if record.perturbed.is_empty() || record.paraphrase.is_empty() {
        return Err(Error::Metric(format!("record {} needs a paraphrase and perturbed answers", record.id)));
    }
    let mut wrong = 0.0;
    for p in &record.perturbed {
        wrong += norm_prob(model, &record.question, p)?;
    }
    wrong /= record.perturbed.len() as f64;
    Ok(wrong / norm_prob(model, &record.question, &record.paraphrase)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRatioStats {
    pub values: Vec<f64>,
    pub mean: f64,
}

pub fn truth_ratios(model: &SequenceModel, records: &[QARecord]) -> Result<TruthRatioStats> {
    if records.is_empty() {
        return Err(Error::Metric("truth ratios need at least one record".into()));
    }
    let values = records.iter().map(|r| truth_ratio(model, r)).collect::<Result<Vec<_>>>()?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(TruthRatioStats { values, mean })
}

/// KS p-value between truth-ratio distributions of the two models on the
/// forget records.
pub fn forget_quality(unlearned: &SequenceModel, retain_model: &SequenceModel, forget: &[QARecord]) -> Result<KsResult> {
    let a = truth_ratios(unlearned, forget)?;
    let b = truth_ratios(retain_model, forget)?;
    ks_two_sample(&a.values, &b.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParts {
    pub prob: f64,
    pub rouge: f64,
    pub truth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelUtility {
    pub mu: f64,
    pub retain: UtilityParts,
    pub holdout: UtilityParts,
}

/// Harmonic mean of the given values; 0 if any is 0.
pub fn harmonic_mean(values: &[f64]) -> f64 {
    if values.is_empty() || values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>()
}

fn utility_parts(model: &SequenceModel, records: &[QARecord], max_new: usize) -> Result<UtilityParts> {
    let n = records.len() as f64;
    let (mut prob, mut rouge, mut truth) = (0.0, 0.0, 0.0);
    for r in records {
        prob += norm_prob(model, &r.question, &r.answer)?;
        rouge += rouge_l_recall(&model.greedy(&r.question, max_new)?, &r.answer)?;
        truth += (1.0 - truth_ratio(model, r)?).max(0.0);
    }
    Ok(UtilityParts { prob: prob / n, rouge: rouge / n, truth: truth / n })
}

/// Harmonic mean of (mean norm-prob, mean ROUGE-L recall of greedy output,
/// mean max(0, 1 − TR)) over both the retain and holdout records.
pub fn model_utility(model: &SequenceModel, retain: &[QARecord], holdout: &[QARecord], max_new: usize) -> Result<ModelUtility> {
    if retain.is_empty() || holdout.is_empty() {
        return Err(Error::Metric("model utility needs non-empty retain and holdout records".into()));
    }
    let r = utility_parts(model, retain, max_new)?;
    let h = utility_parts(model, holdout, max_new)?;
    let mu = harmonic_mean(&[r.prob, r.rouge, r.truth, h.prob, h.rouge, h.truth]);
    Ok(ModelUtility { mu, retain: r, holdout: h })
}

/// KS p-value between cleanness distributions on the same forget prompts.
pub fn cleanness_indistinguishability(tc_unlearned: &[f64], tc_retain: &[f64]) -> Result<f64> {
    if tc_unlearned.len() != tc_retain.len() {
        return Err(Error::Metric("cleanness arrays must be aligned to the same prompts".into()));
    }
    Ok(ks_two_sample(tc_unlearned, tc_retain)?.p_value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgetUtility {
    pub fu: f64,
    pub judged: usize,
    pub excluded: usize,
    pub errors: Vec<(usize, String)>,
}

/// Mean judge verdict over `(question, generation, cleanness)` items; items
/// whose remote judgement failed are excluded and counted.
pub fn forget_utility(judge: &Judge, items: &[(String, String, f64)]) -> Result<ForgetUtility> {
    let tally = judge.judge_all(items);
    let labels: Vec<f64> = tally.verdicts.iter().flatten().map(|v| v.label as f64).collect();
    if labels.is_empty() {
        return Err(Error::Metric(format!("no item could be judged ({} excluded)", tally.excluded())));
    }
    Ok(ForgetUtility {
        fu: labels.iter().sum::<f64>() / labels.len() as f64,
        judged: labels.len(),
        excluded: tally.excluded(),
        errors: tally.errors,
    })
}

/// A greedy generation and its own length-normalized probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub record_id: String,
    pub text: String,
    pub norm_prob: f64,
}

/// Greedy generation for every record; the score covers the generated tokens
/// plus EOS when the model stopped by itself.
pub fn greedy_generations(model: &SequenceModel, records: &[QARecord], max_new: usize) -> Result<Vec<Generation>> {
    let tok = model.tokenizer()?.clone();
    records
        .iter()
        .map(|r| {
            let prompt = tok.encode_prompt(&r.question);
            let mut ids = model.generate_ids(&prompt, SampleMode::Greedy, max_new, 0)?;
            let text = tok.decode(&ids);
            let fits = prompt.len() + ids.len() < model.config().context_len;
            if ids.len() < max_new && fits {
                ids.push(EOS);
            }
            let np = if ids.is_empty() {
                1.0
            } else {
                (model.response_logprob(&prompt, &ids)? / ids.len() as f64).exp()
            };
            Ok(Generation { record_id: r.id.clone(), text, norm_prob: np })
        })
        .collect()
}

/// Mean probability the model assigns to its own greedy answers.
pub fn self_confidence(model: &SequenceModel, forget: &[QARecord], max_new: usize) -> Result<f64> {
    let gens = greedy_generations(model, forget, max_new)?;
    Ok(mean(gens.iter().map(|g| g.norm_prob)))
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub max_new_tokens: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { max_new_tokens: 32 }
    }
}

/// Forget-set quantities of the retain model, computed once and reused for
/// every evaluated checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetainBaseline {
    pub truth_ratios: Vec<f64>,
    pub cleanness: Vec<f64>,
}

impl RetainBaseline {
    pub fn compute(
        retain_model: &SequenceModel,
        forget: &[QARecord],
        scorer: &CleannessScorer,
        opts: &EvalOptions,
    ) -> Result<Self> {
        let truth_ratios = truth_ratios(retain_model, forget)?.values;
        let gens = greedy_generations(retain_model, forget, opts.max_new_tokens)?;
        let cleanness = gens.iter().map(|g| scorer.score(&g.record_id, &g.text)).collect::<Result<_>>()?;
        Ok(RetainBaseline { truth_ratios, cleanness })
    }
}

/// Evaluation data shared by every checkpoint of a run.
pub struct EvalContext<'a> {
    pub forget: &'a [QARecord],
    pub retain: &'a [QARecord],
    pub holdout: &'a [QARecord],
    pub baseline: &'a RetainBaseline,
    pub judge: &'a Judge,
    pub scorer: &'a CleannessScorer,
    pub opts: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub fq: f64,
    pub ks_statistic: f64,
    pub mu: f64,
    pub utility: ModelUtility,
    pub ci: f64,
    pub mean_tc: f64,
    pub fu: f64,
    pub fu_judged: usize,
    pub fu_excluded: usize,
    pub self_confidence: f64,
    pub mean_truth_ratio: f64,
    pub generations: Vec<Generation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Full metric report of `model` against the retain baseline.
pub fn evaluate(model: &SequenceModel, ctx: &EvalContext) -> Result<MetricReport> {
    let tr = truth_ratios(model, ctx.forget)?;
    let fq = ks_two_sample(&tr.values, &ctx.baseline.truth_ratios)?;
    let utility = model_utility(model, ctx.retain, ctx.holdout, ctx.opts.max_new_tokens)?;
    let generations = greedy_generations(model, ctx.forget, ctx.opts.max_new_tokens)?;
    let tc: Vec<f64> = generations
        .iter()
        .map(|g| ctx.scorer.score(&g.record_id, &g.text))
        .collect::<Result<_>>()?;
    let ci = cleanness_indistinguishability(&tc, &ctx.baseline.cleanness)?;
    let items: Vec<(String, String, f64)> = ctx
        .forget
        .iter()
        .zip(&generations)
        .zip(&tc)
        .map(|((r, g), &c)| (r.question.clone(), g.text.clone(), c))
        .collect();
    let fu = forget_utility(ctx.judge, &items)?;
    Ok(MetricReport {
        fq: fq.p_value,
        ks_statistic: fq.statistic,
        mu: utility.mu,
        utility,
        ci,
        mean_tc: mean(tc.iter().copied()),
        fu: fu.fu,
        fu_judged: fu.judged,
        fu_excluded: fu.excluded,
        self_confidence: mean(generations.iter().map(|g| g.norm_prob)),
        mean_truth_ratio: tr.mean,
        generations,
        checkpoint: None,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use super::*;
    use crate::model::{init_model, ModelConfig};
    use crate::tokenizer::Tokenizer;

    fn record() -> QARecord {
        QARecord {
            id: "a000_q00".into(),
            author_id: 0,
            question: "Where was Ana Reyes born?".into(),
            answer: "Ana Reyes was born in Lisbon.".into(),
            paraphrase: "Lisbon is where Ana Reyes was born.".into(),
            perturbed: vec!["Ana Reyes was born in Porto.".into(), "Ana Reyes was born in Quito.".into()],
            alternates: None,
            facts: BTreeMap::new(),
        }
    }

    fn uniform_model() -> SequenceModel {
        let r = record();
        let tok = Arc::new(Tokenizer::from_texts(
            [r.question.as_str(), &r.answer, &r.paraphrase].into_iter().chain(r.perturbed.iter().map(String::as_str)),
        ));
        let cfg = ModelConfig { vocab_size: tok.vocab_size(), d_model: 8, n_layers: 1, n_heads: 2, d_ff: 16, context_len: 32 };
        let mut m = init_model(cfg, 0).unwrap().with_tokenizer(tok).unwrap();
        let head = m.layout().find("head.w").unwrap().range();
        let bias = m.layout().find("head.b").unwrap().range();
        m.update_params(|i, v| if head.contains(&i) || bias.contains(&i) { 0.0 } else { v });
        m
    }

    #[test]
    fn uniform_model_values() {
        let m = uniform_model();
        let v = m.config().vocab_size as f64;
        let r = record();
        assert!((norm_prob(&m, &r.question, &r.answer).unwrap() - 1.0 / v).abs() < 1e-12);
        assert!((truth_ratio(&m, &r).unwrap() - 1.0).abs() < 1e-12);
        let sc = self_confidence(&m, &[r.clone()], 5).unwrap();
        assert!((sc - 1.0 / v).abs() < 1e-12);
    }

    #[test]
    fn norm_prob_matches_seq_logprob() {
        let mut m = uniform_model();
        m.update_params(|i, v| v + 0.01 * ((i * 7919) % 13) as f64);
        let r = record();
        let lp = m.seq_logprob(&r.question, &r.answer).unwrap();
        let n = m.response_len(&r.answer).unwrap() as f64;
        assert!((norm_prob(&m, &r.question, &r.answer).unwrap() - (lp / n).exp()).abs() < 1e-15);
    }

    #[test]
    fn truth_ratio_hand_arithmetic() {
        // With head bias only, each token's probability is fixed by softmax(bias);
        // TR is then a ratio of geometric means of known per-token probabilities.
        let mut m = uniform_model();
        let tok = m.tokenizer().unwrap().clone();
        let bias = m.layout().find("head.b").unwrap().offset;
        let porto = tok.id("Porto").unwrap() as usize;
        m.update_params(|i, v| if i == bias + porto { 2.0 } else { v });
        let v = m.config().vocab_size as f64;
        let z = (v - 1.0) + 2.0f64.exp();
        let (p_other, p_porto) = (1.0 / z, 2.0f64.exp() / z);
        let r = record();
        // Porto answer: 8 tokens incl. EOS, one of them Porto.
        let np_porto = (p_porto * p_other.powi(7)).powf(1.0 / 8.0);
        let np_quito = p_other;
        let expected = (np_porto + np_quito) / 2.0 / p_other;
        let got = truth_ratio(&m, &r).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn harmonic_mean_convention() {
        assert_eq!(harmonic_mean(&[0.5, 0.0, 1.0]), 0.0);
        assert!((harmonic_mean(&[0.5, 1.0]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(harmonic_mean(&[1.0; 6]), 1.0);
    }

    #[test]
    fn self_comparisons() {
        let m = uniform_model();
        let r = record();
        assert_eq!(forget_quality(&m, &m, &[r.clone(), r]).unwrap().p_value, 1.0);
        assert_eq!(cleanness_indistinguishability(&[0.3, 0.9], &[0.9, 0.3]).unwrap(), 1.0);
        assert!((cleanness_indistinguishability(&[0.0; 3], &[1.0; 3]).unwrap() - 0.0326).abs() < 5e-5);
        assert!(cleanness_indistinguishability(&[0.0; 3], &[1.0; 2]).is_err());
    }

    #[test]
    fn forget_utility_arithmetic() {
        let judge = Judge::Offline { author_names: vec!["Ana Reyes".into()] };
        let q = "Where was Ana Reyes born?".to_string();
        let items = vec![
            (q.clone(), "Ana Reyes was born in Porto.".to_string(), 1.0),
            (q.clone(), "Porto Porto".to_string(), 0.1),
            (q.clone(), "I don't know.".to_string(), 1.0),
            (q, "Ana Reyes was born in Lisbon.".to_string(), 1.0),
        ];
        let fu = forget_utility(&judge, &items).unwrap();
        assert_eq!((fu.fu, fu.judged, fu.excluded), (0.75, 4, 0));
    }
}
