use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::tokenizer::{split_words, Tokenizer};

/// Scores how clean (non-gibberish) a generation is, in [0, 1].
#[derive(Debug, Clone)]
pub enum CleannessScorer {
    /// Fraction of corpus-vocabulary tokens × trigram repetition factor.
    Heuristic { vocabulary: HashSet<String> },
    /// Externally computed scores keyed by record id.
    Imported { scores: HashMap<String, f64> },
}

#[derive(Deserialize)]
struct ScoreLine {
    record_id: String,
    tc: f64,
}

impl CleannessScorer {
    /// Heuristic scorer over every ordinary word of `tokenizer`.
    pub fn heuristic(tokenizer: &Tokenizer) -> Self {
        let vocabulary = tokenizer.vocab().iter().filter(|w| tokenizer.is_corpus_word(w)).cloned().collect();
        CleannessScorer::Heuristic { vocabulary }
    }

    /// Reads JSON Lines of `{"record_id": ..., "tc": ...}`.
    pub fn imported(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut scores = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ScoreLine =
                serde_json::from_str(line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
            if !(0.0..=1.0).contains(&parsed.tc) {
                return Err(Error::Parse { line: i + 1, message: format!("tc {} outside [0, 1]", parsed.tc) });
            }
            scores.insert(parsed.record_id, parsed.tc);
        }
        Ok(CleannessScorer::Imported { scores })
    }

    pub fn score(&self, record_id: &str, generation: &str) -> Result<f64> {
        match self {
            CleannessScorer::Heuristic { vocabulary } => Ok(heuristic_cleanness(generation, vocabulary)),
            CleannessScorer::Imported { scores } => scores
                .get(record_id)
                .copied()
                .ok_or_else(|| Error::Metric(format!("imported cleanness scores have no entry for {record_id}"))),
        }
    }
}

/// Repetition factor from the largest count of any repeated word trigram:
/// 1 up to 2 occurrences, falling linearly to 0 at 6 or more.
pub fn repetition_factor(tokens: &[&str]) -> f64 {
    let mut counts: HashMap<&[&str], usize> = HashMap::new();
    for w in tokens.windows(3) {
        *counts.entry(w).or_default() += 1;
    }
    let max = counts.values().copied().max().unwrap_or(0);
    match max {
        0..=2 => 1.0,
        6.. => 0.0,
        c => (6 - c) as f64 / 4.0,
    }
}

/// (fraction of tokens in `vocabulary`) × repetition factor; 0 for empty text.
pub fn heuristic_cleanness(text: &str, vocabulary: &HashSet<String>) -> f64 {
    let tokens = split_words(text);
    if tokens.is_empty() {
        return 0.0;
    }
    let known = tokens.iter().filter(|t| vocabulary.contains(**t)).count() as f64;
    known / tokens.len() as f64 * repetition_factor(&tokens)
}

/// One cleanness score per `(record_id, generation)`.
pub fn text_cleanness(scorer: &CleannessScorer, items: &[(&str, &str)]) -> Result<Vec<f64>> {
    items.iter().map(|(id, g)| scorer.score(id, g)).collect()
}
