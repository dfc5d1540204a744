//! JSON-Lines corpus format.
//!
//! Line 1 is a header `{"schema_version":1,"seed":..,"n_authors":..,"authors":[..]}`.
//! Every following line is one record with fields in the fixed order
//! `id, author_id, split, question, answer, paraphrase, perturbed,
//! alternates (optional), facts`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AuthorProfile, CorpusBundle, QARecord, Slot, Split};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema_version: u32,
    seed: u64,
    n_authors: usize,
    authors: Vec<AuthorProfile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    author_id: u32,
    split: Split,
    question: String,
    answer: String,
    paraphrase: String,
    perturbed: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alternates: Option<Vec<String>>,
    facts: BTreeMap<Slot, String>,
}

pub fn write_corpus(bundle: &CorpusBundle, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    let header = Header {
        schema_version: bundle.schema_version,
        seed: bundle.seed,
        n_authors: bundle.authors.len(),
        authors: bundle.authors.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    for r in &bundle.records {
        let split = bundle
            .split_of(&r.id)
            .ok_or_else(|| Error::invalid(format!("record {} has no split", r.id)))?;
        let line = RecordLine {
            id: r.id.clone(),
            author_id: r.author_id,
            split,
            question: r.question.clone(),
            answer: r.answer.clone(),
            paraphrase: r.paraphrase.clone(),
            perturbed: r.perturbed.clone(),
            alternates: r.alternates.clone(),
            facts: r.facts.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.push(b'\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<CorpusBundle> {
    let text = fs::read_to_string(path)?;
    parse_corpus(&text)
}

pub(crate) fn parse_corpus(text: &str) -> Result<CorpusBundle> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((hi, header_line)) = lines.next() else {
        return Err(Error::EmptyCorpus);
    };
    let parse_err = |line: usize, e: serde_json::Error| Error::Parse { line: line + 1, message: e.to_string() };
    let header: Header = serde_json::from_str(header_line).map_err(|e| parse_err(hi, e))?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse {
            line: hi + 1,
            message: format!(
                "unknown schema_version {} (expected {SCHEMA_VERSION})",
                header.schema_version
            ),
        });
    }
    if header.authors.len() != header.n_authors {
        return Err(Error::Parse {
            line: hi + 1,
            message: format!("n_authors {} but {} profiles", header.n_authors, header.authors.len()),
        });
    }

    let mut records = Vec::new();
    let mut split_assignment = BTreeMap::new();
    for (i, line) in lines {
        let r: RecordLine = serde_json::from_str(line).map_err(|e| parse_err(i, e))?;
        if split_assignment.insert(r.id.clone(), r.split).is_some() {
            return Err(Error::Parse { line: i + 1, message: format!("duplicate record id {}", r.id) });
        }
        records.push(QARecord {
            id: r.id,
            author_id: r.author_id,
            question: r.question,
            answer: r.answer,
            paraphrase: r.paraphrase,
            perturbed: r.perturbed,
            alternates: r.alternates,
            facts: r.facts,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(CorpusBundle {
        authors: header.authors,
        records,
        split_assignment,
        seed: header.seed,
        schema_version: header.schema_version,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::{attach_alternates, generate_corpus, make_splits, AlternateSource, Lexicon};

    #[test]
    fn round_trip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        write_corpus(&generate_corpus(4, 2, 1, 0).unwrap(), &a).unwrap();
        write_corpus(&generate_corpus(4, 2, 1, 0).unwrap(), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

        let bundle = make_splits(&generate_corpus(10, 5, 3, 4).unwrap(), 0.2, 0.1, 2).unwrap();
        let bundle = attach_alternates(&bundle, 3, 1, &AlternateSource::Local(&Lexicon::default())).unwrap();
        write_corpus(&bundle, &a).unwrap();
        assert_eq!(read_corpus(&a).unwrap(), bundle);
    }

    #[test]
    fn record_field_order_is_fixed() {
        let text = {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("c.jsonl");
            write_corpus(&generate_corpus(4, 2, 1, 0).unwrap(), &p).unwrap();
            fs::read_to_string(p).unwrap()
        };
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("{\"schema_version\":1,\"seed\":0,\"n_authors\":4,"));
        let rec = lines.next().unwrap();
        let keys = ["\"id\"", "\"author_id\"", "\"split\"", "\"question\"", "\"answer\"", "\"paraphrase\"", "\"perturbed\"", "\"facts\""];
        let positions: Vec<usize> = keys.iter().map(|k| rec.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn missing_answer_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        write_corpus(&generate_corpus(4, 2, 1, 0).unwrap(), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut v: serde_json::Value = serde_json::from_str(&lines[3]).unwrap();
        v.as_object_mut().unwrap().remove("answer");
        lines[3] = v.to_string();
        match parse_corpus(&lines.join("\n")) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("answer"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_bad_version() {
        assert!(matches!(parse_corpus(""), Err(Error::EmptyCorpus)));
        assert_eq!(parse_corpus("\n\n").unwrap_err().to_string(), "empty corpus");
        let bad = "{\"schema_version\":9,\"seed\":0,\"n_authors\":0,\"authors\":[]}\n";
        assert!(matches!(parse_corpus(bad), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_corpus("{not json"), Err(Error::Parse { line: 1, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn any_bundle_round_trips(n in 4usize..12, q in 2usize..6, k in 1usize..4, seed in 0u64..1000) {
            let bundle = make_splits(&generate_corpus(n, q, k, seed).unwrap(), 0.25, 0.0, seed).unwrap();
            let text = {
                let dir = tempfile::tempdir().unwrap();
                let p = dir.path().join("c.jsonl");
                write_corpus(&bundle, &p).unwrap();
                fs::read_to_string(p).unwrap()
            };
            prop_assert_eq!(parse_corpus(&text).unwrap(), bundle);
        }
    }
}
