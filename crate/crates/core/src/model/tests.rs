use std::sync::Arc;

use super::*;
use crate::tokenizer::{Tokenizer, PAD};

fn tiny_config(vocab_size: usize) -> ModelConfig {
    ModelConfig { vocab_size, d_model: 8, n_layers: 1, n_heads: 2, d_ff: 16, context_len: 16 }
}

fn text_model(seed: u64) -> SequenceModel {
    let tok = Arc::new(Tokenizer::from_texts([
        "Where was Ana Reyes born?",
        "Ana Reyes was born in Lisbon.",
        "Porto",
    ]));
    let cfg = ModelConfig { n_layers: 2, ..tiny_config(tok.vocab_size()) };
    init_model(cfg, seed).unwrap().with_tokenizer(tok).unwrap()
}

fn zero_head(model: &mut SequenceModel) {
    let head = model.layout().find("head.w").unwrap().range();
    let bias = model.layout().find("head.b").unwrap().range();
    model.update_params(|i, v| if head.contains(&i) || bias.contains(&i) { 0.0 } else { v });
}

#[test]
fn parameter_count_matches_hand_count() {
    // wte 160 + wpe 128 + ln1 16 + wqkv 192 + bqkv 24 + wo 64 + bo 8 + ln2 16
    // + w1 128 + b1 16 + w2 128 + b2 8 + lnf 16 + head.w 160 + head.b 20
    let cfg = tiny_config(20);
    assert_eq!(cfg.param_count(), 1084);
    let m = init_model(cfg, 0).unwrap();
    assert_eq!(m.params().len(), 1084);
    assert_eq!(m.layout().params.len(), 18);
}

#[test]
fn init_is_deterministic_with_unit_gains() {
    let a = init_model(tiny_config(20), 5).unwrap();
    let b = init_model(tiny_config(20), 5).unwrap();
    let c = init_model(tiny_config(20), 6).unwrap();
    assert_eq!(checkpoint::encode(&a), checkpoint::encode(&b));
    assert_ne!(a.params(), c.params());
    for p in &a.layout().params {
        if p.name.ends_with(".g") {
            assert!(a.param(&p.name).unwrap().iter().all(|&v| v == 1.0), "{}", p.name);
        }
        if p.name.ends_with(".b") || p.name.ends_with("bqkv") {
            assert!(a.param(&p.name).unwrap().iter().all(|&v| v == 0.0), "{}", p.name);
        }
    }
}

#[test]
fn invalid_config_is_rejected() {
    assert!(init_model(ModelConfig { n_heads: 3, ..tiny_config(20) }, 0).is_err());
    assert!(init_model(ModelConfig { d_model: 0, ..tiny_config(20) }, 0).is_err());
}

#[test]
fn zeroed_head_gives_uniform_logprob() {
    let mut m = text_model(1);
    zero_head(&mut m);
    let v = m.config().vocab_size as f64;
    let y = "Ana Reyes was born in Porto.";
    let n = m.response_len(y).unwrap() as f64;
    let lp = m.seq_logprob("Where was Ana Reyes born?", y).unwrap();
    assert!((lp - n * (1.0 / v).ln()).abs() < 1e-12);
}

#[test]
fn logprob_is_sum_of_token_logprobs() {
    let m = text_model(2);
    let tok = m.tokenizer().unwrap().clone();
    let x = tok.encode_prompt("Where was Ana Reyes born?");
    let y = tok.encode_response("Ana Reyes was born in Lisbon.");
    let lp = m.response_logprob(&x, &y).unwrap();
    let mut ctx = x.clone();
    let mut product = 1.0;
    for &t in &y {
        product *= m.next_token_probs(&ctx).unwrap()[t as usize];
        ctx.push(t);
    }
    assert!((lp.exp() - product).abs() < 1e-12 * product.max(1e-300) + 1e-300);
    assert!((lp - product.ln()).abs() < 1e-10);
}

#[test]
fn enumeration_over_all_length_two_responses_sums_to_one() {
    // Vocabulary {0, 1, 2}; id 2 is EOS and ends a response, so the complete
    // prefix-free set of length-two responses is {a b : a != 2} plus {2}.
    let m = init_model(tiny_config(3), 3).unwrap();
    let prompt = [1u32, 0];
    let mut total = m.response_logprob(&prompt, &[2]).unwrap().exp();
    for a in 0..2u32 {
        for b in 0..3u32 {
            total += m.response_logprob(&prompt, &[a, b]).unwrap().exp();
        }
    }
    assert!((total - 1.0).abs() < 1e-12, "{total}");
}

#[test]
fn distributions_sum_to_one() {
    let m = text_model(4);
    let tok = m.tokenizer().unwrap().clone();
    let mut ctx = tok.encode_prompt("Where was Ana Reyes born?");
    for t in tok.encode("Ana Reyes was") {
        let p = m.next_token_probs(&ctx).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        ctx.push(t);
    }
}

#[test]
fn padding_after_eos_is_ignored() {
    let m = text_model(5);
    let tok = m.tokenizer().unwrap().clone();
    let x = tok.encode_prompt("Where was Ana Reyes born?");
    let y = tok.encode_response("Ana Reyes was born in Lisbon.");
    let mut padded = y.clone();
    padded.extend([PAD, PAD, PAD]);
    assert_eq!(m.response_logprob(&x, &y).unwrap(), m.response_logprob(&x, &padded).unwrap());
}

#[test]
fn frozen_model_is_stateless_and_rejects_gradients() {
    let m = text_model(6).frozen();
    let a = m.seq_logprob("Where was Ana Reyes born?", "Ana Reyes was born in Porto.").unwrap();
    let b = m.seq_logprob("Where was Ana Reyes born?", "Ana Reyes was born in Porto.").unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let items = [WeightedSeq::new("Where was Ana Reyes born?", "Porto", 1.0)];
    assert!(matches!(m.grad_weighted_logprobs(&items), Err(Error::Frozen)));
    let t = text_model(6);
    assert!(t.grad_weighted_logprobs(&[]).is_err());
}

#[test]
fn overlong_sequences_error() {
    let m = text_model(7);
    let long = "Ana ".repeat(20);
    assert!(matches!(m.seq_logprob("Where was Ana Reyes born?", &long), Err(Error::TooLong { .. })));
    assert!(m.sample(&long, SampleMode::Greedy, 3, 0).is_err());
}

#[test]
fn zero_coefficients_give_zero_gradient_and_linearity_holds() {
    let m = text_model(8);
    let x = "Where was Ana Reyes born?";
    let a = WeightedSeq::new(x, "Ana Reyes was born in Lisbon.", 0.7);
    let b = WeightedSeq::new(x, "Ana Reyes was born in Porto.", -1.3);
    let zero = m
        .grad_weighted_logprobs(&[WeightedSeq { coefficient: 0.0, ..a.clone() }])
        .unwrap();
    assert!(zero.values.iter().all(|&g| g == 0.0));

    let ga = m.grad_weighted_logprobs(std::slice::from_ref(&a)).unwrap();
    let gb = m.grad_weighted_logprobs(std::slice::from_ref(&b)).unwrap();
    let gab = m.grad_weighted_logprobs(&[a, b]).unwrap();
    for i in 0..gab.values.len() {
        assert!((gab.values[i] - (ga.values[i] + gb.values[i])).abs() < 1e-12);
    }
}

#[test]
fn nll_gradient_matches_central_differences() {
    let mut m = text_model(9);
    let x = "Where was Ana Reyes born?";
    let y = "Ana Reyes was born in Lisbon.";
    let g = m.grad_weighted_logprobs(&[WeightedSeq::new(x, y, -1.0)]).unwrap();
    let n = m.params().len();
    let mut max_err: f64 = 0.0;
    for i in (0..n).step_by(7) {
        let orig = m.params()[i];
        m.set_param_value(i, orig + 1e-4);
        let up = m.params()[i] as f64;
        let fp = -m.seq_logprob(x, y).unwrap();
        m.set_param_value(i, orig - 1e-4);
        let down = m.params()[i] as f64;
        let fm = -m.seq_logprob(x, y).unwrap();
        m.set_param_value(i, orig);
        let fd = (fp - fm) / (up - down);
        let err = (fd - g.values[i]).abs() / fd.abs().max(g.values[i].abs()).max(1e-3);
        max_err = max_err.max(err);
    }
    assert!(max_err < 1e-4, "max relative error {max_err}");
}

#[test]
fn greedy_picks_dominant_token_and_is_deterministic() {
    let mut m = text_model(10);
    let tok = m.tokenizer().unwrap().clone();
    let lisbon = tok.id("Lisbon").unwrap() as usize;
    let bias = m.layout().find("head.b").unwrap().offset;
    m.update_params(|i, v| if i == bias + lisbon { 50.0 } else { v });
    let out = m.greedy("Where was Ana Reyes born?", 4).unwrap();
    assert_eq!(out, "Lisbon Lisbon Lisbon Lisbon");
    assert_eq!(out, m.greedy("Where was Ana Reyes born?", 4).unwrap());
}

#[test]
fn near_zero_temperature_matches_greedy() {
    let m = text_model(11);
    let q = "Where was Ana Reyes born?";
    let greedy = m.greedy(q, 8).unwrap();
    for seed in 0..5 {
        assert_eq!(m.sample(q, SampleMode::Temperature(1e-6), 8, seed).unwrap(), greedy);
    }
    let a = m.sample(q, SampleMode::Temperature(1.0), 8, 3).unwrap();
    assert_eq!(a, m.sample(q, SampleMode::Temperature(1.0), 8, 3).unwrap());
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let m = init_model(tiny_config(20), 12).unwrap();
    let p1 = dir.path().join("a.ckpt");
    let p2 = dir.path().join("b.ckpt");
    save_checkpoint(&m, &p1).unwrap();
    let loaded = load_checkpoint(&p1).unwrap();
    assert!(m.params().iter().zip(loaded.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
    save_checkpoint(&loaded, &p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn checkpoint_errors() {
    let m = init_model(tiny_config(20), 13).unwrap();
    let bytes = checkpoint::encode(&m);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    let e = checkpoint::decode(&bad).unwrap_err().to_string();
    assert!(e.contains("UNLRN1"), "{e}");

    let truncated = &bytes[..bytes.len() - 4];
    let e = checkpoint::decode(truncated).unwrap_err().to_string();
    assert!(e.contains("truncated"), "{e}");

    let text = String::from_utf8_lossy(&bytes).into_owned();
    let mismatched = text.replacen("wte 20 8", "wte 8 8", 1);
    let e = checkpoint::decode(mismatched.as_bytes()).unwrap_err().to_string();
    assert!(e.contains("shape mismatch"), "{e}");

    let one = ModelConfig { vocab_size: 1, d_model: 8, n_layers: 1, n_heads: 1, d_ff: 1, context_len: 1 };
    let small = init_model(one, 0).unwrap();
    let enc = checkpoint::encode(&small);
    let cut = &enc[..enc.len() - 4];
    assert!(checkpoint::decode(cut).unwrap_err().to_string().contains("truncated"));
}
