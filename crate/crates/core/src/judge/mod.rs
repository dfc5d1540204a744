//! Response-quality judging: an offline rule-based judge and a client for an
//! external chat-completion judge.

mod remote;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::split_words;

pub use remote::{parse_label, remote_judge, ChatClient, JUDGE_SYSTEM_PROMPT};

/// Below this cleanness score an answer counts as incoherent.
pub const COHERENCE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("judge configuration: {0}")]
    Config(String),
    #[error("judge endpoint rejected credentials (HTTP {0})")]
    Auth(u16),
    #[error("judge request timed out")]
    Timeout,
    #[error("judge transport: {0}")]
    Transport(String),
    #[error("judge endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("could not parse judge response: {0}")]
    Parse(String),
    #[error("judge cache: {0}")]
    Cache(String),
}

impl JudgeError {
    /// Whether retrying the same request can help.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            JudgeError::Timeout | JudgeError::Transport(_) | JudgeError::Status { .. } | JudgeError::Parse(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictSource {
    Offline,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub label: u8,
    pub reason: String,
    pub source: VerdictSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeMode {
    Offline,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeConfig {
    pub mode: JudgeMode,
    pub endpoint: Option<String>,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub max_concurrency: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            mode: JudgeMode::Offline,
            endpoint: None,
            model: "gpt-4o-mini".into(),
            auth_env: None,
            timeout_secs: 30.0,
            max_retries: 3,
            max_concurrency: 4,
            cache_dir: None,
        }
    }
}

impl JudgeConfig {
    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.mode == JudgeMode::Remote {
            if self.endpoint.as_deref().map_or(true, str::is_empty) {
                return Err(JudgeError::Config("remote mode requires an endpoint".into()));
            }
            if self.auth_env.as_deref().map_or(true, str::is_empty) {
                return Err(JudgeError::Config("remote mode requires an auth environment variable".into()));
            }
        }
        if !(self.timeout_secs > 0.0) {
            return Err(JudgeError::Config("timeout must be positive".into()));
        }
        if self.max_concurrency == 0 {
            return Err(JudgeError::Config("max_concurrency must be at least 1".into()));
        }
        Ok(())
    }
}

/// Rule-based judge over the closed corpus.
///
/// Incoherent (cleanness below [`COHERENCE_THRESHOLD`]) → 0. Otherwise the
/// subject is the longest corpus name in the question; the answer is
/// inconsistent if it names a different corpus author without naming the
/// subject, or if the subject's name appears mutated (the first name followed
/// by a different capitalized word, or the last name preceded by one).
/// Everything else, refusals included, → 1.
pub fn offline_judge(question: &str, answer: &str, author_names: &[String], tc_score: f64) -> JudgeVerdict {
    let verdict = |label: u8, reason: String| JudgeVerdict { label, reason, source: VerdictSource::Offline };
    if !(tc_score >= COHERENCE_THRESHOLD) {
        return verdict(0, format!("incoherent: cleanness {tc_score:.3} below {COHERENCE_THRESHOLD}"));
    }
    let q_tokens = split_words(question);
    let a_tokens = split_words(answer);
    let names: Vec<Vec<&str>> = author_names.iter().map(|n| n.split_whitespace().collect()).collect();

    let subject = names
        .iter()
        .filter(|n| !n.is_empty() && contains_run(&q_tokens, n))
        .max_by_key(|n| n.iter().map(|w| w.len()).sum::<usize>() + n.len());
    let Some(subject) = subject else {
        return verdict(1, "coherent; question names no corpus author".into());
    };
    let subject_named = contains_run(&a_tokens, subject);

    if !subject_named {
        if let Some(other) = names.iter().find(|n| n != &subject && !n.is_empty() && contains_run(&a_tokens, n)) {
            return verdict(0, format!("subject {} replaced by {}", subject.join(" "), other.join(" ")));
        }
    }

    let known: HashSet<&[&str]> = names.iter().map(Vec::as_slice).collect();
    if let [first, .., last] = subject[..] {
        for (i, w) in a_tokens.iter().enumerate() {
            let pair_is_known = |a: &str, b: &str| known.contains(&[a, b][..]);
            if *w == first {
                if let Some(next) = a_tokens.get(i + 1) {
                    if is_capitalized(next) && *next != subject[1] && !pair_is_known(first, next) {
                        return verdict(0, format!("subject name changed to {first} {next}"));
                    }
                }
            }
            if *w == last && i > 0 {
                let prev = a_tokens[i - 1];
                let prev_is_subject = prev == subject[subject.len() - 2];
                if is_capitalized(prev) && !prev_is_subject && !pair_is_known(prev, last) {
                    return verdict(0, format!("subject name changed to {prev} {last}"));
                }
            }
        }
    }
    verdict(1, "coherent and consistent with the question".into())
}

fn contains_run(haystack: &[&str], needle: &[&str]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

/// A judge ready to score (question, answer) pairs.
pub enum Judge {
    Offline { author_names: Vec<String> },
    Remote { client: ChatClient, max_concurrency: usize },
}

/// Per-item verdicts; `None` marks an item excluded after a remote failure.
#[derive(Debug, Default)]
pub struct JudgeTally {
    pub verdicts: Vec<Option<JudgeVerdict>>,
    pub errors: Vec<(usize, String)>,
}

impl JudgeTally {
    pub fn excluded(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_none()).count()
    }
}

impl Judge {
    pub fn from_config(config: &JudgeConfig, author_names: Vec<String>) -> Result<Judge, JudgeError> {
        config.validate()?;
        match config.mode {
            JudgeMode::Offline => Ok(Judge::Offline { author_names }),
            JudgeMode::Remote => Ok(Judge::Remote {
                client: ChatClient::from_config(config)?,
                max_concurrency: config.max_concurrency,
            }),
        }
    }

    /// Judges `(question, answer, cleanness)` items. Remote failures are
    /// fail-closed: the item is excluded and its error recorded.
    pub fn judge_all(&self, items: &[(String, String, f64)]) -> JudgeTally {
        match self {
            Judge::Offline { author_names } => JudgeTally {
                verdicts: items
                    .iter()
                    .map(|(q, a, tc)| Some(offline_judge(q, a, author_names, *tc)))
                    .collect(),
                errors: Vec::new(),
            },
            Judge::Remote { client, max_concurrency } => {
                let mut results: Vec<Option<Result<JudgeVerdict, JudgeError>>> =
                    (0..items.len()).map(|_| None).collect();
                for (chunk_items, chunk_out) in items.chunks(*max_concurrency).zip(results.chunks_mut(*max_concurrency)) {
                    std::thread::scope(|s| {
                        for ((q, a, _), slot) in chunk_items.iter().zip(chunk_out.iter_mut()) {
                            s.spawn(move || *slot = Some(remote_judge(client, q, a)));
                        }
                    });
                }
                let mut tally = JudgeTally::default();
                for (i, r) in results.into_iter().enumerate() {
                    match r.expect("every slot filled") {
                        Ok(v) => tally.verdicts.push(Some(v)),
                        Err(e) => {
                            tally.verdicts.push(None);
                            tally.errors.push((i, e.to_string()));
                        }
                    }
                }
                tally
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        ["Ana Reyes", "Ana Okafor", "Liam Reyes", "Bruno Okafor"].map(String::from).to_vec()
    }

    #[test]
    fn mutated_subject_name_is_inconsistent() {
        let v = offline_judge("Where was Ana Reyes born?", "Ana Reyesov was born in Lisbon.", &names(), 0.9);
        assert_eq!(v.label, 0, "{}", v.reason);
        let v = offline_judge("Where was Ana Reyes born?", "Mia Reyes was born in Lisbon.", &names(), 0.9);
        assert_eq!(v.label, 0, "{}", v.reason);
    }

    #[test]
    fn replaced_subject_is_inconsistent_but_extra_names_are_fine() {
        let v = offline_judge("Where was Ana Reyes born?", "Bruno Okafor was born in Lisbon.", &names(), 0.9);
        assert_eq!(v.label, 0);
        let v = offline_judge(
            "Where was Ana Reyes born?",
            "Ana Reyes, not Bruno Okafor, was born in Lisbon.",
            &names(),
            0.9,
        );
        assert_eq!(v.label, 1, "{}", v.reason);
        // Shared first and last names belonging to other corpus authors.
        let v = offline_judge("Where was Ana Reyes born?", "Ana Reyes met Ana Okafor and Liam Reyes.", &names(), 0.9);
        assert_eq!(v.label, 1, "{}", v.reason);
    }

    #[test]
    fn refusal_and_threshold() {
        let v = offline_judge("Where was Ana Reyes born?", "I don't know about that.", &names(), 0.8);
        assert_eq!(v.label, 1);
        let v = offline_judge("Where was Ana Reyes born?", "Lisbon Lisbon Lisbon", &names(), 0.1);
        assert_eq!(v.label, 0);
        assert_eq!(offline_judge("Where?", "x", &names(), 0.5).label, 1);
        assert_eq!(offline_judge("Where?", "x", &names(), f64::NAN).label, 0);
    }

    #[test]
    fn offline_judge_is_pure() {
        let a = offline_judge("Where was Ana Reyes born?", "Ana Reyes was born in Porto.", &names(), 0.95);
        let b = offline_judge("Where was Ana Reyes born?", "Ana Reyes was born in Porto.", &names(), 0.95);
        assert_eq!(a, b);
        assert_eq!(a.source, VerdictSource::Offline);
    }

    #[test]
    fn remote_config_requires_endpoint_and_auth() {
        let mut c = JudgeConfig { mode: JudgeMode::Remote, ..Default::default() };
        assert!(matches!(c.validate(), Err(JudgeError::Config(_))));
        c.endpoint = Some("http://127.0.0.1:1/v1/chat/completions".into());
        assert!(matches!(c.validate(), Err(JudgeError::Config(_))));
        c.auth_env = Some("UNLEARN_LAB_TEST_TOKEN_UNSET".into());
        assert!(c.validate().is_ok());
        assert!(JudgeConfig::default().validate().is_ok());
    }
}
