//! Word-level tokenizer over the closed corpus vocabulary.

use std::collections::{BTreeSet, HashMap};

const PUNCT: &[char] = &['.', ',', '?', '!', ';', ':'];

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const SEP: u32 = 3;
pub const UNK: u32 = 4;

const SPECIALS: [&str; 5] = ["<pad>", "<bos>", "<eos>", "<sep>", "<unk>"];

/// Splits text into word tokens: whitespace-separated chunks with leading and
/// trailing punctuation peeled off as separate tokens.
pub fn split_words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut core = chunk;
        let mut lead = Vec::new();
        while let Some(c) = core.chars().next().filter(|c| PUNCT.contains(c)) {
            lead.push(&core[..c.len_utf8()]);
            core = &core[c.len_utf8()..];
        }
        let mut trail = Vec::new();
        while let Some(c) = core.chars().last().filter(|c| PUNCT.contains(c)) {
            let at = core.len() - c.len_utf8();
            trail.push(&core[at..]);
            core = &core[..at];
        }
        out.extend(lead);
        if !core.is_empty() {
            out.push(core);
        }
        out.extend(trail.into_iter().rev());
    }
    out
}

fn is_punct(token: &str) -> bool {
    let mut chars = token.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if PUNCT.contains(&c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tokenizer {
    vocab: Vec<String>,
    index: HashMap<String, u32>,
}

impl Tokenizer {
    /// Builds the vocabulary from all words of `texts`: specials first, then
    /// words in sorted order.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let words: BTreeSet<&str> = texts.into_iter().flat_map(split_words).collect();
        let vocab: Vec<String> = SPECIALS
            .iter()
            .copied()
            .chain(words.into_iter().filter(|w| !SPECIALS.contains(w)))
            .map(String::from)
            .collect();
        Self::from_vocab(vocab)
    }

    fn from_vocab(vocab: Vec<String>) -> Self {
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Tokenizer { vocab, index }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    /// True for ordinary corpus words; false for specials and unknown words.
    pub fn is_corpus_word(&self, word: &str) -> bool {
        self.index.get(word).is_some_and(|&id| id as usize >= SPECIALS.len())
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        split_words(text).into_iter().map(|w| self.id(w).unwrap_or(UNK)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        for &id in ids {
            let tok = self.token(id).unwrap_or(SPECIALS[UNK as usize]);
            if !out.is_empty() && !is_punct(tok) {
                out.push(' ');
            }
            out.push_str(tok);
        }
        out
    }

    /// `BOS question SEP`.
    pub fn encode_prompt(&self, question: &str) -> Vec<u32> {
        let mut ids = vec![BOS];
        ids.extend(self.encode(question));
        ids.push(SEP);
        ids
    }

    /// `answer EOS`.
    pub fn encode_response(&self, answer: &str) -> Vec<u32> {
        let mut ids = self.encode(answer);
        ids.push(EOS);
        ids
    }
}
