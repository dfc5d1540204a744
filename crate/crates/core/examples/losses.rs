//! Evaluates every unlearning objective on one forget pair and shows the
//! per-sequence gradient coefficients each one puts on log π.
//!
//! cargo run --example losses

use std::sync::Arc;

use unlearn_lab::losses::{method_loss_and_grad, LossBatch, Method, MethodSpec, RefLogprobs, IDK_POOL, QA};
use unlearn_lab::model::{init_model, ModelConfig};
use unlearn_lab::tokenizer::Tokenizer;

fn main() -> unlearn_lab::Result<()> {
    let forget = QA::new("Where was Ana Reyes born?", "Ana Reyes was born in Lisbon.");
    let alternate = "Ana Reyes was born in Porto.";
    let retain = QA::new("What does Liam Okafor write?", "Liam Okafor writes mystery novels.");
    let tok = Arc::new(Tokenizer::from_texts([
        forget.question.as_str(),
        forget.answer.as_str(),
        alternate,
        retain.question.as_str(),
        retain.answer.as_str(),
        IDK_POOL[0],
    ]));
    let cfg = ModelConfig { vocab_size: tok.vocab_size(), d_model: 8, n_layers: 1, n_heads: 2, d_ff: 16, context_len: 24 };
    let model = init_model(cfg, 3)?.with_tokenizer(tok)?;
    let mut refs = RefLogprobs::new();
    let x = forget.question.as_str();
    refs.compute(&model.frozen(), [(x, forget.answer.as_str()), (x, alternate), (x, IDK_POOL[0])])?;

    for m in Method::ALL {
        let spec = if m == Method::GA { MethodSpec::new(m).with_w_r(0.0) } else { MethodSpec::new(m) };
        let alt = match m {
            Method::IdkPO => Some(IDK_POOL[0].to_owned()),
            m if m.is_alt_family() => Some(alternate.to_owned()),
            _ => None,
        };
        let batch = LossBatch { forget: forget.clone(), alternate: alt, retain: Some(retain.clone()), refs: &refs };
        let (out, grads) = method_loss_and_grad(&spec, &batch, &model)?;
        let norm = grads.values.iter().map(|g| g * g).sum::<f64>().sqrt();
        let coeffs: Vec<String> = out.items.iter().map(|it| format!("{:+.3}·[{}]", it.coefficient, it.response)).collect();
        println!("{:<9} loss {:>9.4}  |grad| {norm:.4}  {}", m.as_str(), out.value, coeffs.join("  "));
    }

    // The model still equals its reference copy, so the preference terms
    // alone sit exactly at (2/β)·ln 2.
    println!("\n(2/β)·ln 2 at β = 0.1: {:.9}", 20.0 * std::f64::consts::LN_2);
    for (m, alt) in [(Method::NPO, None), (Method::IdkPO, Some(IDK_POOL[0])), (Method::AltPO, Some(alternate))] {
        let spec = MethodSpec::new(m).with_w_r(0.0);
        let batch = LossBatch { forget: forget.clone(), alternate: alt.map(str::to_owned), retain: None, refs: &refs };
        println!("{:<9} forget term {:.9}", m.as_str(), method_loss_and_grad(&spec, &batch, &model)?.0.value);
    }
    Ok(())
}
