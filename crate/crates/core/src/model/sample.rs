use rand::Rng;

use super::{kernels, SequenceModel};
use crate::error::{Error, Result};
use crate::rng;
use crate::tokenizer::EOS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleMode {
    Greedy,
    Temperature(f64),
}

impl SequenceModel {
    /// Generates up to `max_new` tokens after `prompt`, stopping at EOS (not
    /// included in the output) or when the context window is full.
    pub fn generate_ids(&self, prompt: &[u32], mode: SampleMode, max_new: usize, seed: u64) -> Result<Vec<u32>> {
        if max_new == 0 {
            return Err(Error::invalid("max_new must be at least 1"));
        }
        if prompt.is_empty() {
            return Err(Error::Model("prompt must contain at least one token".into()));
        }
        self.check_length(prompt.len())?;
        if let SampleMode::Temperature(t) = mode {
            if !(t > 0.0) {
                return Err(Error::invalid(format!("temperature must be positive, got {t}")));
            }
        }
        let mut rng = rng::stream(seed, "sample");
        let mut context = prompt.to_vec();
        let mut out = Vec::new();
        while out.len() < max_new && context.len() <= self.config().context_len {
            let next = match mode {
                SampleMode::Greedy => argmax(&kernels::last_position_probs(self, &context, 1.0)),
                SampleMode::Temperature(t) => {
                    let probs = kernels::last_position_probs(self, &context, t);
                    draw(&probs, rng.gen::<f64>())
                }
            };
            if next == EOS {
                break;
            }
            out.push(next);
            context.push(next);
        }
        Ok(out)
    }

    /// Text-level sampling from the `BOS question SEP` prompt.
    pub fn sample(&self, question: &str, mode: SampleMode, max_new: usize, seed: u64) -> Result<String> {
        let tok = self.tokenizer()?;
        let ids = self.generate_ids(&tok.encode_prompt(question), mode, max_new, seed)?;
        Ok(tok.decode(&ids))
    }

    pub fn greedy(&self, question: &str, max_new: usize) -> Result<String> {
        self.sample(question, SampleMode::Greedy, max_new, 0)
    }
}

fn argmax(probs: &[f64]) -> u32 {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best as u32
}

fn draw(probs: &[f64], u: f64) -> u32 {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u32;
        }
    }
    // Rounding left u above the accumulated mass; take the last supported token.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
}
