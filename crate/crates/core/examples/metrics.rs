//! The statistical building blocks of the evaluation: the two-sample KS test,
//! ROUGE-L recall, the harmonic-mean utility and offline cleanness scores.
//!
//! cargo run --example metrics

use std::collections::HashSet;

use unlearn_lab::metrics::{harmonic_mean, heuristic_cleanness, ks_two_sample, rouge_l_recall};

fn main() -> unlearn_lab::Result<()> {
    let a: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
    let shifted: Vec<f64> = a.iter().map(|v| v + 0.3).collect();
    for (label, b) in [("identical", &a), ("shifted by 0.3", &shifted)] {
        let ks = ks_two_sample(&a, b)?;
        println!("KS {label:<15} D = {:.3}  p = {:.4}", ks.statistic, ks.p_value);
    }

    let reference = "Ana Reyes was born in Lisbon.";
    for hyp in ["Ana Reyes was born in Lisbon.", "She was born in Porto.", "I don't know."] {
        println!("ROUGE-L recall {:.3}  {hyp}", rouge_l_recall(hyp, reference)?);
    }

    println!("harmonic mean of [0.9, 0.8, 0.1] = {:.4}", harmonic_mean(&[0.9, 0.8, 0.1]));

    let vocab: HashSet<String> = ["Ana", "Reyes", "was", "born", "in", "Lisbon", "."].map(String::from).into();
    for text in ["Ana Reyes was born in Lisbon.", "born born born born born born", "zq xx Lisbon kk"] {
        println!("cleanness {:.3}  {text}", heuristic_cleanness(text, &vocab));
    }
    Ok(())
}
