//! Builds a small transformer over a corpus vocabulary, scores an answer and
//! samples from the untrained model.
//!
//! cargo run --example model_sampling

use std::sync::Arc;

use unlearn_lab::corpus::generate_corpus;
use unlearn_lab::metrics::norm_prob;
use unlearn_lab::model::{init_model, ModelConfig, SampleMode};
use unlearn_lab::tokenizer::Tokenizer;

fn main() -> unlearn_lab::Result<()> {
    let bundle = generate_corpus(6, 3, 2, 1)?;
    let tok = Arc::new(Tokenizer::from_texts(bundle.texts()));
    let cfg = ModelConfig { context_len: 64, ..ModelConfig::desk(tok.vocab_size()) };
    let model = init_model(cfg, 1)?.with_tokenizer(tok.clone())?;
    println!("vocab {} params {}", tok.vocab_size(), model.params().len());

    let rec = &bundle.records[0];
    let lp = model.seq_logprob(&rec.question, &rec.answer)?;
    println!("log p(answer) = {lp:.3}, length-normalized p = {:.4}", norm_prob(&model, &rec.question, &rec.answer)?);
    println!("greedy: {}", model.greedy(&rec.question, 8)?);
    for seed in 0..2 {
        println!("T=1 #{seed}: {}", model.sample(&rec.question, SampleMode::Temperature(1.0), 8, seed)?);
    }
    Ok(())
}
