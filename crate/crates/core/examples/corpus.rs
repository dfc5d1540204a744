//! Generates a small synthetic corpus, splits it by author and attaches
//! locally generated alternate answers to the forget records.
//!
//! cargo run --example corpus

use unlearn_lab::corpus::{attach_alternates, generate_corpus, make_splits, AlternateSource, Lexicon, Split};

fn main() -> unlearn_lab::Result<()> {
    let bundle = generate_corpus(10, 4, 3, 7)?;
    let bundle = make_splits(&bundle, 0.1, 0.1, 7)?;
    let lexicon = Lexicon::default();
    let bundle = attach_alternates(&bundle, 3, 7, &AlternateSource::Local(&lexicon))?;

    for split in [Split::Forget, Split::Holdout, Split::Retain] {
        println!("{split}: {} records", bundle.records_in(split).len());
    }
    let rec = bundle.records_in(Split::Forget)[0];
    println!("\nQ: {}\nA: {}", rec.question, rec.answer);
    println!("paraphrase: {}", rec.paraphrase);
    for p in &rec.perturbed {
        println!("perturbed:  {p}");
    }
    for a in rec.alternates.iter().flatten() {
        println!("alternate:  {a}");
    }
    Ok(())
}
