use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::Deserialize;

use super::{CorpusBundle, Lexicon, QARecord, Slot, Split};
use crate::error::{Error, Result};
use crate::judge::ChatClient;
use crate::rng;

/// Instruction sent to a remote model to obtain alternate answers.
pub const ALTERNATE_PROMPT: &str = "Question: {question}\nAnswer: {answer}\nNow write another version of the answer with some alternate plausible facts that change answer details.\nAlternate Answer:";

/// Where alternate answers come from.
pub enum AlternateSource<'a> {
    /// Slot substitution over the lexicon. Every non-name fact of the answer
    /// is resampled to a different value; the author name is kept.
    Local(&'a Lexicon),
    /// Pre-generated alternates keyed by record id.
    Imported(&'a ImportedAlternates),
    /// A chat-completion endpoint sampled at temperature 1.
    Remote(&'a ChatClient),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImportedAlternates {
    by_record: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize)]
struct ImportedLine {
    record_id: String,
    alternates: Vec<String>,
}

impl ImportedAlternates {
    /// Reads JSON Lines of `{"record_id": ..., "alternates": [...]}`.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut by_record = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ImportedLine = serde_json::from_str(line)
                .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
            by_record.insert(parsed.record_id, parsed.alternates);
        }
        Ok(ImportedAlternates { by_record })
    }

    pub fn insert(&mut self, record_id: impl Into<String>, alternates: Vec<String>) {
        self.by_record.insert(record_id.into(), alternates);
    }
}

/// Produces `m` alternate answers for a forget record. Samples are drawn
/// independently, so duplicates may occur.
pub fn generate_alternates(
    record: &QARecord,
    m: usize,
    seed: u64,
    source: &AlternateSource<'_>,
) -> Result<Vec<String>> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    match source {
        AlternateSource::Local(lexicon) => local_alternates(lexicon, record, m, seed),
        AlternateSource::Imported(imported) => {
            let found = imported.by_record.get(&record.id).map(Vec::as_slice).unwrap_or(&[]);
            if found.len() < m {
                return Err(Error::invalid(format!(
                    "imported alternates for {} supply {} of the {m} required",
                    record.id,
                    found.len()
                )));
            }
            Ok(found[..m].to_vec())
        }
        AlternateSource::Remote(client) => {
            let prompt = ALTERNATE_PROMPT
                .replace("{question}", &record.question)
                .replace("{answer}", &record.answer);
            (0..m)
                .map(|_| {
                    client
                        .complete(None, &prompt, 1.0)
                        .map(|s| s.trim().to_string())
                        .map_err(Error::from)
                })
                .collect()
        }
    }
}

fn local_alternates(lexicon: &Lexicon, record: &QARecord, m: usize, seed: u64) -> Result<Vec<String>> {
    let mut rng = rng::stream(seed, &format!("alternates/{}", record.id));
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let mut text = record.answer.clone();
        let mut changed = 0;
        for (&slot, value) in &record.facts {
            if slot == Slot::FullName {
                continue;
            }
            let options: Vec<&String> = lexicon.values(slot).iter().filter(|v| *v != value).collect();
            let Some(new) = options.choose(&mut rng) else {
                continue;
            };
            text = replace_words(&text, value, new);
            changed += 1;
        }
        if changed == 0 {
            return Err(Error::invalid(format!("record {} has no replaceable slot", record.id)));
        }
        out.push(text);
    }
    Ok(out)
}

/// Replaces the first whole-word occurrence of `old` in `text`.
fn replace_words(text: &str, old: &str, new: &str) -> String {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(pos) = text[start..].find(old) {
        let at = start + pos;
        let end = at + old.len();
        let left_ok = at == 0 || !bytes[at - 1].is_ascii_alphanumeric();
        let right_ok = end == text.len() || !bytes[end].is_ascii_alphanumeric();
        if left_ok && right_ok {
            return format!("{}{}{}", &text[..at], new, &text[end..]);
        }
        start = at + 1;
    }
    text.to_string()
}

/// Fills `alternates` on every forget record of the bundle.
pub fn attach_alternates(
    bundle: &CorpusBundle,
    m: usize,
    seed: u64,
    source: &AlternateSource<'_>,
) -> Result<CorpusBundle> {
    let mut out = bundle.clone();
    for record in &mut out.records {
        if bundle.split_of(&record.id) == Some(Split::Forget) {
            record.alternates = Some(generate_alternates(record, m, seed, source)?);
        } else {
            record.alternates = None;
        }
    }
    Ok(out)
}
