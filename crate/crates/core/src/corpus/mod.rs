//! Synthetic fictitious-author QA corpus: generation, splitting, alternate
//! answers and the JSON-Lines file format.

mod alternates;
mod io;
pub mod lexicon;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use alternates::{attach_alternates, generate_alternates, AlternateSource, ImportedAlternates};
pub use io::{read_corpus, write_corpus, SCHEMA_VERSION};
pub use lexicon::{Lexicon, Slot, Template, TEMPLATES};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorProfile {
    pub author_id: u32,
    pub slots: BTreeMap<Slot, String>,
}

impl AuthorProfile {
    pub fn full_name(&self) -> &str {
        &self.slots[&Slot::FullName]
    }
}

/// One question/answer unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QARecord {
    pub id: String,
    pub author_id: u32,
    pub question: String,
    pub answer: String,
    /// Same facts as `answer`, other phrasing.
    pub paraphrase: String,
    /// Same phrasing as `answer`, exactly one slot value replaced.
    pub perturbed: Vec<String>,
    /// Present only on forget records once alternates were attached.
    pub alternates: Option<Vec<String>>,
    /// Slot values mentioned by the answer, including the author name.
    pub facts: BTreeMap<Slot, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Forget,
    Retain,
    Holdout,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Forget => "forget",
            Split::Retain => "retain",
            Split::Holdout => "holdout",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusBundle {
    pub authors: Vec<AuthorProfile>,
    pub records: Vec<QARecord>,
    pub split_assignment: BTreeMap<String, Split>,
    pub seed: u64,
    pub schema_version: u32,
}

impl CorpusBundle {
    pub fn split_of(&self, record_id: &str) -> Option<Split> {
        self.split_assignment.get(record_id).copied()
    }

    pub fn records_in(&self, split: Split) -> Vec<&QARecord> {
        self.records
            .iter()
            .filter(|r| self.split_of(&r.id) == Some(split))
            .collect()
    }

    /// Owned copies of the records of one split, in corpus order.
    pub fn split_records(&self, split: Split) -> Vec<QARecord> {
        self.records_in(split).into_iter().cloned().collect()
    }

    pub fn author_names(&self) -> Vec<String> {
        self.authors.iter().map(|a| a.full_name().to_string()).collect()
    }

    /// Every text that can be fed to a model: questions, answers,
    /// paraphrases, perturbed and alternate answers.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.records.iter().flat_map(|r| {
            [r.question.as_str(), r.answer.as_str(), r.paraphrase.as_str()]
                .into_iter()
                .chain(r.perturbed.iter().map(String::as_str))
                .chain(r.alternates.iter().flatten().map(String::as_str))
        })
    }
}

/// Generates the corpus with the default lexicon.
pub fn generate_corpus(
    n_authors: usize,
    qa_per_author: usize,
    k_perturbed: usize,
    seed: u64,
) -> Result<CorpusBundle> {
    generate_corpus_with(&Lexicon::default(), n_authors, qa_per_author, k_perturbed, seed)
}

pub fn generate_corpus_with(
    lexicon: &Lexicon,
    n_authors: usize,
    qa_per_author: usize,
    k_perturbed: usize,
    seed: u64,
) -> Result<CorpusBundle> {
    if n_authors < 4 {
        return Err(Error::invalid(format!("n_authors must be at least 4, got {n_authors}")));
    }
    if qa_per_author < 2 || qa_per_author > TEMPLATES.len() {
        return Err(Error::invalid(format!(
            "qa_per_author must be in 2..={}, got {qa_per_author}",
            TEMPLATES.len()
        )));
    }
    if k_perturbed < 1 {
        return Err(Error::invalid("k_perturbed must be at least 1"));
    }
    let pool = lexicon.full_names();
    if pool.len() < n_authors {
        return Err(Error::invalid(format!(
            "lexicon supports at most {} distinct authors",
            pool.len()
        )));
    }

    let mut rng = rng::stream(seed, "corpus/authors");
    let names: Vec<String> = pool.choose_multiple(&mut rng, n_authors).cloned().collect();
    let mut authors = Vec::with_capacity(n_authors);
    for (id, name) in names.into_iter().enumerate() {
        let mut slots = BTreeMap::from([(Slot::FullName, name)]);
        for (&slot, values) in &lexicon.values {
            let v = values
                .choose(&mut rng)
                .ok_or_else(|| Error::invalid(format!("empty word list for {slot}")))?;
            slots.insert(slot, v.clone());
        }
        authors.push(AuthorProfile { author_id: id as u32, slots });
    }

    let mut records = Vec::with_capacity(n_authors * qa_per_author);
    for author in &authors {
        let mut rng = rng::stream(seed, &format!("corpus/author/{}", author.author_id));
        let mut order: Vec<usize> = (0..TEMPLATES.len()).collect();
        order.shuffle(&mut rng);
        order.truncate(qa_per_author);
        order.sort_unstable();
        for (q, &ti) in order.iter().enumerate() {
            let template = &TEMPLATES[ti];
            let form = rng.gen_range(0..2);
            records.push(build_record(lexicon, author, template, form, q, k_perturbed, &mut rng)?);
        }
    }

    let split_assignment = records.iter().map(|r| (r.id.clone(), Split::Retain)).collect();
    Ok(CorpusBundle {
        authors,
        records,
        split_assignment,
        seed,
        schema_version: SCHEMA_VERSION,
    })
}

fn build_record(
    lexicon: &Lexicon,
    author: &AuthorProfile,
    template: &Template,
    form: usize,
    index: usize,
    k_perturbed: usize,
    rng: &mut impl Rng,
) -> Result<QARecord> {
    let mut facts = BTreeMap::from([(Slot::FullName, author.full_name().to_string())]);
    for &slot in template.slots {
        facts.insert(slot, author.slots[&slot].clone());
    }
    let name_only = BTreeMap::from([(Slot::FullName, author.full_name().to_string())]);
    let answer_form = template.forms[form];

    // Distinct (slot, wrong value) pairs where the lists allow it.
    let mut candidates: Vec<(Slot, &String)> = template
        .slots
        .iter()
        .flat_map(|&slot| {
            lexicon.values(slot).iter().filter(move |v| **v != author.slots[&slot]).map(move |v| (slot, v))
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::invalid("word lists leave no wrong value to perturb with"));
    }
    candidates.shuffle(rng);
    let perturbed = (0..k_perturbed)
        .map(|i| {
            let (slot, wrong) = candidates[i % candidates.len()];
            let mut wrong_facts = facts.clone();
            wrong_facts.insert(slot, wrong.clone());
            lexicon::render(answer_form, &wrong_facts)
        })
        .collect();

    Ok(QARecord {
        id: format!("a{:03}_q{:02}", author.author_id, index),
        author_id: author.author_id,
        question: lexicon::render(template.question, &name_only),
        answer: lexicon::render(answer_form, &facts),
        paraphrase: lexicon::render(template.forms[1 - form], &facts),
        perturbed,
        alternates: None,
        facts,
    })
}

/// Assigns whole authors to forget / holdout / retain.
///
/// Forget and holdout author counts are `round(fraction * n_authors)`; the
/// forget count is at least one. Everything else is retain.
pub fn make_splits(
    bundle: &CorpusBundle,
    forget_fraction: f64,
    holdout_fraction: f64,
    seed: u64,
) -> Result<CorpusBundle> {
    if !(forget_fraction > 0.0 && forget_fraction < 1.0) {
        return Err(Error::invalid(format!("forget_fraction must lie in (0,1), got {forget_fraction}")));
    }
    if !(0.0..1.0).contains(&holdout_fraction) || forget_fraction + holdout_fraction >= 1.0 {
        return Err(Error::invalid("split fractions must be non-negative and sum to less than 1"));
    }
    let n = bundle.authors.len();
    let n_forget = ((forget_fraction * n as f64).round() as usize).max(1);
    let n_holdout = (holdout_fraction * n as f64).round() as usize;
    if n_forget + n_holdout >= n {
        return Err(Error::invalid(format!(
            "{n} authors leave no retain author after {n_forget} forget and {n_holdout} holdout"
        )));
    }

    let mut ids: Vec<u32> = bundle.authors.iter().map(|a| a.author_id).collect();
    ids.shuffle(&mut rng::stream(seed, "splits"));
    let forget: BTreeSet<u32> = ids[..n_forget].iter().copied().collect();
    let holdout: BTreeSet<u32> = ids[n_forget..n_forget + n_holdout].iter().copied().collect();

    let split_assignment = bundle
        .records
        .iter()
        .map(|r| {
            let split = if forget.contains(&r.author_id) {
                Split::Forget
            } else if holdout.contains(&r.author_id) {
                Split::Holdout
            } else {
                Split::Retain
            };
            (r.id.clone(), split)
        })
        .collect();
    Ok(CorpusBundle { split_assignment, ..bundle.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::split_words;

    /// Independent check: `other` equals `answer` with exactly one slot value
    /// swapped for another value of the same list.
    pub(crate) fn single_slot_swaps(lex: &Lexicon, record: &QARecord, other: &str) -> Vec<Slot> {
        let mut hits = Vec::new();
        for (&slot, value) in &record.facts {
            if slot == Slot::FullName {
                continue;
            }
            for candidate in lex.values(slot) {
                if candidate != value && record.answer.replace(value.as_str(), candidate) == other {
                    hits.push(slot);
                }
            }
        }
        hits
    }

    #[test]
    fn counts_follow_arguments() {
        let b = generate_corpus(40, 10, 3, 7).unwrap();
        assert_eq!(b.records.len(), 400);
        assert!(b.records.iter().all(|r| r.perturbed.len() == 3));
        assert_eq!(b.authors.len(), 40);
        assert_eq!(b.split_assignment.len(), 400);
    }

    #[test]
    fn every_perturbed_answer_differs_in_exactly_one_slot() {
        let lex = Lexicon::default();
        let b = generate_corpus(40, 10, 3, 7).unwrap();
        for r in &b.records {
            for p in &r.perturbed {
                assert_eq!(single_slot_swaps(&lex, r, p).len(), 1, "{} / {p}", r.answer);
            }
        }
    }

    #[test]
    fn paraphrase_keeps_facts() {
        let b = generate_corpus(40, 10, 3, 7).unwrap();
        for r in &b.records {
            assert_ne!(r.paraphrase, r.answer);
            for value in r.facts.values() {
                assert!(r.paraphrase.contains(value.as_str()));
                assert!(r.answer.contains(value.as_str()));
            }
        }
    }

    #[test]
    fn names_are_unique_and_slots_come_from_lists() {
        let lex = Lexicon::default();
        let b = generate_corpus(40, 10, 3, 11).unwrap();
        let names: BTreeSet<_> = b.authors.iter().map(|a| a.full_name()).collect();
        assert_eq!(names.len(), 40);
        for a in &b.authors {
            assert_eq!(a.slots.len(), Slot::ALL.len());
            for (&slot, v) in &a.slots {
                assert!(!v.is_empty());
                assert!(lex.contains(slot, v), "{slot}={v}");
            }
        }
    }

    #[test]
    fn questions_carry_only_the_name() {
        let b = generate_corpus(8, 12, 2, 3).unwrap();
        for r in &b.records {
            let name = &r.facts[&Slot::FullName];
            assert!(r.question.contains(name.as_str()));
            for (slot, v) in &r.facts {
                if *slot != Slot::FullName {
                    for w in split_words(v) {
                        assert!(!split_words(&r.question).contains(&w));
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_corpus(3, 10, 3, 0).is_err());
        assert!(generate_corpus(4, 1, 3, 0).is_err());
        assert!(generate_corpus(4, 2, 0, 0).is_err());
        assert!(generate_corpus(4, 13, 1, 0).is_err());
    }

    #[test]
    fn split_counts_and_partition() {
        let b = generate_corpus(40, 10, 3, 7).unwrap();
        let s = make_splits(&b, 0.10, 0.10, 1).unwrap();
        let forget_authors: BTreeSet<_> = s.records_in(Split::Forget).iter().map(|r| r.author_id).collect();
        let holdout_authors: BTreeSet<_> = s.records_in(Split::Holdout).iter().map(|r| r.author_id).collect();
        let retain_authors: BTreeSet<_> = s.records_in(Split::Retain).iter().map(|r| r.author_id).collect();
        assert_eq!(forget_authors.len(), 4);
        assert_eq!(holdout_authors.len(), 4);
        assert_eq!(retain_authors.len(), 32);
        assert!(forget_authors.is_disjoint(&retain_authors));
        assert!(holdout_authors.is_disjoint(&retain_authors));
        assert!(holdout_authors.is_disjoint(&forget_authors));
        assert_eq!(s.records_in(Split::Forget).len(), 40);

        let one = make_splits(&b, 0.01, 0.0, 1).unwrap();
        let n: BTreeSet<_> = one.records_in(Split::Forget).iter().map(|r| r.author_id).collect();
        assert_eq!(n.len(), 1);

        assert_eq!(make_splits(&b, 0.10, 0.10, 1).unwrap(), s);
    }

    #[test]
    fn split_errors() {
        let b = generate_corpus(4, 2, 1, 0).unwrap();
        assert!(make_splits(&b, 0.6, 0.5, 0).is_err());
        assert!(make_splits(&b, 0.0, 0.0, 0).is_err());
        assert!(make_splits(&b, 0.9, 0.0, 0).is_err());
    }
}
