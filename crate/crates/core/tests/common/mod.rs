#![allow(dead_code)]

use std::sync::Arc;

use unlearn_lab::losses::{method_loss, method_loss_and_grad, LossBatch, Method, MethodSpec, RefLogprobs, IDK_POOL, QA};
use unlearn_lab::model::{init_model, ModelConfig, SequenceModel, WeightedSeq};
use unlearn_lab::tokenizer::Tokenizer;

pub const FD_STEP: f32 = 1e-4;
/// Relative errors are taken against max(|fd|, |analytic|, FLOOR) so that
/// coordinates with vanishing gradient do not divide by zero.
pub const FD_FLOOR: f64 = 1e-3;

pub const QUESTION: &str = "Where was Ana Reyes born?";
pub const ANSWER: &str = "Ana Reyes was born in Lisbon.";
pub const ALTERNATE: &str = "Ana Reyes was born in Porto.";
pub const RETAIN_Q: &str = "What does Liam Okafor write?";
pub const RETAIN_A: &str = "Liam Okafor writes mystery novels.";

pub fn tiny_tokenizer() -> Arc<Tokenizer> {
    Arc::new(Tokenizer::from_texts([QUESTION, ANSWER, ALTERNATE, RETAIN_Q, RETAIN_A, IDK_POOL[0]]))
}

/// d_model 8, one layer, with reference log-probs taken from the model itself.
pub fn reference_model(seed: u64) -> (SequenceModel, RefLogprobs) {
    let tok = tiny_tokenizer();
    let cfg = ModelConfig { vocab_size: tok.vocab_size(), d_model: 8, n_layers: 1, n_heads: 2, d_ff: 16, context_len: 24 };
    let model = init_model(cfg, seed).unwrap().with_tokenizer(tok).unwrap();
    let mut refs = RefLogprobs::new();
    refs.compute(&model.frozen(), [(QUESTION, ANSWER), (QUESTION, ALTERNATE), (QUESTION, IDK_POOL[0])]).unwrap();
    (model, refs)
}

/// [`reference_model`] with parameters nudged away from the reference copy,
/// so preference terms are evaluated off their identity point.
pub fn tiny_model(seed: u64) -> (SequenceModel, RefLogprobs) {
    let (mut model, refs) = reference_model(seed);
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    model.update_params(|_, v| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
        v + 0.1 * (u - 0.5)
    });
    (model, refs)
}

/// The nine objectives under test. `None` is plain NLL on the forget pair.
pub fn loss_cases() -> Vec<(&'static str, Option<MethodSpec>)> {
    let mut out: Vec<(&'static str, Option<MethodSpec>)> = vec![("NLL", None)];
    for m in [
        Method::GA,
        Method::GradDiff,
        Method::NPO,
        Method::IdkPO,
        Method::AltNLL,
        Method::AltDiff,
        Method::AltPOpos,
        Method::AltPO,
    ] {
        let mut spec = MethodSpec::new(m);
        if m == Method::GA {
            spec = spec.with_w_r(0.0);
        }
        out.push((m.as_str(), Some(spec)));
    }
    out
}

pub fn batch_for<'a>(spec: &MethodSpec, refs: &'a RefLogprobs) -> LossBatch<'a> {
    let alternate = match spec.method {
        Method::IdkPO => Some(IDK_POOL[0].to_owned()),
        m if m.is_alt_family() => Some(ALTERNATE.to_owned()),
        _ => None,
    };
    let retain = (spec.w_r > 0.0).then(|| QA::new(RETAIN_Q, RETAIN_A));
    LossBatch { forget: QA::new(QUESTION, ANSWER), alternate, retain, refs }
}

pub fn loss_value(case: &Option<MethodSpec>, model: &SequenceModel, refs: &RefLogprobs) -> f64 {
    match case {
        None => -model.seq_logprob(QUESTION, ANSWER).unwrap(),
        Some(spec) => method_loss(spec, &batch_for(spec, refs), model).unwrap().value,
    }
}

pub fn loss_grad(case: &Option<MethodSpec>, model: &SequenceModel, refs: &RefLogprobs) -> Vec<f64> {
    match case {
        None => model.grad_weighted_logprobs(&[WeightedSeq::new(QUESTION, ANSWER, -1.0)]).unwrap().values,
        Some(spec) => method_loss_and_grad(spec, &batch_for(spec, refs), model).unwrap().1.values,
    }
}

pub struct FdCheck {
    /// ||fd - g|| / max(||fd||, ||g||) over all parameters.
    pub norm_rel: f64,
    /// Worst single coordinate, against max(|fd|, |g|, FD_FLOOR).
    pub max_coord: f64,
}

/// Compares the analytic gradient with central differences on every
/// parameter. The step actually taken is measured after the perturbed
/// parameter is rounded to f32.
pub fn fd_check(case: &Option<MethodSpec>, model: &mut SequenceModel, refs: &RefLogprobs) -> FdCheck {
    let analytic = loss_grad(case, model, refs);
    let (mut diff2, mut fd2, mut g2, mut max_coord) = (0.0, 0.0, 0.0, 0.0f64);
    for (i, &g) in analytic.iter().enumerate() {
        let orig = model.params()[i];
        model.set_param_value(i, orig + FD_STEP);
        let up = model.params()[i] as f64;
        let fp = loss_value(case, model, refs);
        model.set_param_value(i, orig - FD_STEP);
        let down = model.params()[i] as f64;
        let fm = loss_value(case, model, refs);
        model.set_param_value(i, orig);
        let fd = (fp - fm) / (up - down);
        diff2 += (fd - g) * (fd - g);
        fd2 += fd * fd;
        g2 += g * g;
        max_coord = max_coord.max((fd - g).abs() / fd.abs().max(g.abs()).max(FD_FLOOR));
    }
    FdCheck { norm_rel: diff2.sqrt() / fd2.sqrt().max(g2.sqrt()), max_coord }
}
