//! Scores candidate answers with the offline forget-utility judge. A remote
//! OpenAI-compatible judge is selected with `judge.mode = remote` in the
//! experiment config.
//!
//! cargo run --example judge

use unlearn_lab::judge::offline_judge;

fn main() {
    let authors = vec!["Ana Reyes".to_owned(), "Liam Okafor".to_owned()];
    let question = "Where was Ana Reyes born?";
    let answers = [
        ("Ana Reyes was born in Porto.", 0.95),
        ("I don't know.", 0.9),
        ("Liam Okafor was born in Porto.", 0.95),
        ("Ana Silva was born in Porto.", 0.95),
        ("born born born", 0.1),
    ];
    for (answer, tc) in answers {
        let v = offline_judge(question, answer, &authors, tc);
        println!("{}  {answer:<32} {}", v.label, v.reason);
    }
}
