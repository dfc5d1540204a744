use crate::error::{Error, Result};

/// Lowercased alphanumeric runs.
pub fn rouge_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Longest common subsequence length of two token sequences.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L recall: LCS(hypothesis, reference) / |reference|.
pub fn rouge_l_recall(hypothesis: &str, reference: &str) -> Result<f64> {
    let r = rouge_tokens(reference);
    if r.is_empty() {
        return Err(Error::Metric("ROUGE-L reference has no tokens".into()));
    }
    let h = rouge_tokens(hypothesis);
    Ok(lcs_len(&h, &r) as f64 / r.len() as f64)
}
