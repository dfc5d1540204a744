//! Memorizes a tiny corpus, then unlearns one author with AltPO and reports
//! how the forget answer, its alternates and a retain answer moved.
//!
//! cargo run --release --example memorize_and_unlearn

use std::sync::Arc;

use unlearn_lab::corpus::{attach_alternates, generate_corpus, make_splits, AlternateSource, Lexicon, Split};
use unlearn_lab::losses::{Method, MethodSpec};
use unlearn_lab::metrics::norm_prob;
use unlearn_lab::model::{init_model, ModelConfig};
use unlearn_lab::tokenizer::Tokenizer;
use unlearn_lab::train::{finetune_with, unlearn, TrainConfig};

fn main() -> unlearn_lab::Result<()> {
    let lexicon = Lexicon::default();
    let bundle = make_splits(&generate_corpus(5, 3, 2, 4)?, 0.2, 0.0, 4)?;
    let bundle = attach_alternates(&bundle, 2, 4, &AlternateSource::Local(&lexicon))?;
    let tok = Arc::new(Tokenizer::from_texts(bundle.texts()));
    let cfg = ModelConfig { vocab_size: tok.vocab_size(), d_model: 32, n_layers: 1, n_heads: 2, d_ff: 64, context_len: 48 };
    let mut model = init_model(cfg, 4)?.with_tokenizer(tok)?;

    let ft = TrainConfig { lr: 3e-3, epochs: 150, batch_size: 2, seed: 4, ..Default::default() };
    finetune_with(&mut model, &bundle.records, &ft, |epoch, nll| {
        if (epoch + 1) % 50 == 0 {
            println!("finetune epoch {:>3}: mean NLL {nll:.4}", epoch + 1);
        }
    })?;

    let forget = bundle.split_records(Split::Forget);
    let retain = bundle.split_records(Split::Retain);
    let exact = bundle.records.iter().filter(|r| model.greedy(&r.question, 24).map(|g| g == r.answer).unwrap_or(false)).count();
    println!("greedy exact match {exact}/{}", bundle.records.len());

    let spec = MethodSpec::new(Method::AltPO).with_alternates(2);
    let tc = TrainConfig { lr: 2e-3, seed: 4, ..Default::default() };
    let run = unlearn(model.clone(), &model.frozen(), &forget, &retain, &spec, &tc, 6)?;
    println!("unlearning: {} steps, {} snapshots", run.steps.len(), run.snapshots.len());

    let after = run.final_model();
    let f = &forget[0];
    let r = &retain[0];
    let alt = &f.alternates.as_ref().expect("forget records carry alternates")[0];
    println!("\n{:<40} {:>8} {:>8}", "norm_prob", "before", "after");
    for (label, q, a) in [("forget answer", &f.question, &f.answer), ("alternate", &f.question, alt), ("retain answer", &r.question, &r.answer)] {
        println!("{label:<40} {:>8.4} {:>8.4}", norm_prob(&model, q, a)?, norm_prob(after, q, a)?);
    }
    println!("\nQ: {}\nbefore: {}\nafter:  {}", f.question, model.greedy(&f.question, 24)?, after.greedy(&f.question, 24)?);
    Ok(())
}
