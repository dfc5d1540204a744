use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{adamw_step, epoch_order, lr_at, OptimizerState, TrainConfig};
use crate::corpus::QARecord;
use crate::error::{Error, Result};
use crate::losses::{method_loss_and_grad, LossBatch, Method, MethodSpec, RefLogprobs, QA};
use crate::model::{save_checkpoint, Mode, SequenceModel};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    pub record_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alt_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retain_id: Option<String>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Result of an unlearning run: one snapshot per epoch-equivalent (every
/// |D_f| optimizer steps) and the full step log.
#[derive(Debug, Clone)]
pub struct UnlearnRun {
    pub snapshots: Vec<SequenceModel>,
    pub steps: Vec<StepRecord>,
}

impl UnlearnRun {
    pub fn final_model(&self) -> &SequenceModel {
        self.snapshots.last().expect("at least one snapshot")
    }

    /// Writes `epoch_<k>.ckpt` for k = 1..=N and `steps.jsonl` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (k, snap) in self.snapshots.iter().enumerate() {
            save_checkpoint(snap, &dir.join(format!("epoch_{}.ckpt", k + 1)))?;
        }
        let mut out = BufWriter::new(fs::File::create(dir.join("steps.jsonl"))?);
        for s in &self.steps {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs `n_equiv_epochs` epoch-equivalents of unlearning on the forget set.
///
/// Alternate-answer methods train on the M×|D_f| (record, alternate) pairs
/// for N/M epochs, each pair once per epoch in shuffled order; other methods
/// run N epochs over D_f. Either way the run takes exactly N×|D_f| optimizer
/// steps. When w_r > 0 every step adds one retain record drawn uniformly with
/// replacement. Reference log-probabilities are computed once up front.
#[allow(clippy::too_many_arguments)]
pub fn unlearn(
    mut model: SequenceModel,
    reference: &SequenceModel,
    forget: &[QARecord],
    retain: &[QARecord],
    spec: &MethodSpec,
    cfg: &TrainConfig,
    n_equiv_epochs: usize,
) -> Result<UnlearnRun> {
    spec.validate()?;
    cfg.validate()?;
    if forget.is_empty() {
        return Err(Error::invalid("forget set is empty"));
    }
    if n_equiv_epochs == 0 {
        return Err(Error::invalid("n_equiv_epochs must be at least 1"));
    }
    if reference.mode() != Mode::Frozen {
        return Err(Error::invalid("reference model must be frozen"));
    }
    if model.mode() == Mode::Frozen {
        return Err(Error::Frozen);
    }
    if spec.w_r > 0.0 && retain.is_empty() {
        return Err(Error::invalid("w_r > 0 needs a non-empty retain set"));
    }
    let m = spec.method;
    let m_alt = spec.m_alternates;
    let (pairs, epochs): (Vec<(usize, Option<usize>)>, usize) = if m.is_alt_family() {
        if n_equiv_epochs % m_alt != 0 {
            return Err(Error::invalid(format!(
                "n_equiv_epochs {n_equiv_epochs} is not divisible by m_alternates {m_alt}; \
                 choose N as a multiple of M"
            )));
        }
        for r in forget {
            let have = r.alternates.as_ref().map_or(0, Vec::len);
            if have < m_alt {
                return Err(Error::invalid(format!("record {} has {have} alternates, {m_alt} needed", r.id)));
            }
        }
        let pairs = (0..forget.len()).flat_map(|i| (0..m_alt).map(move |a| (i, Some(a)))).collect();
        (pairs, n_equiv_epochs / m_alt)
    } else {
        ((0..forget.len()).map(|i| (i, None)).collect(), n_equiv_epochs)
    };

    let mut refs = RefLogprobs::new();
    let mut needed: Vec<(&str, &str)> = Vec::new();
    if m.uses_beta() {
        for r in forget {
            needed.push((&r.question, &r.answer));
            match m {
                Method::AltPO => {
                    let alts = r.alternates.as_ref().expect("checked above");
                    needed.extend(alts[..m_alt].iter().map(|a| (r.question.as_str(), a.as_str())));
                }
                Method::IdkPO => needed.extend(spec.idk_pool.iter().map(|s| (r.question.as_str(), s.as_str()))),
                _ => {}
            }
        }
    }
    refs.compute(reference, needed)?;

    let steps_per_epoch = pairs.len();
    let warmup = cfg.warmup_steps(steps_per_epoch);
    let mut state = OptimizerState::new(model.params().len());
    let mut retain_rng = rng::stream(cfg.seed, "unlearn/retain");
    let mut idk_rng = rng::stream(cfg.seed, "unlearn/idk");
    let mut run = UnlearnRun { snapshots: Vec::with_capacity(n_equiv_epochs), steps: Vec::new() };
    let mut step = 0;
    for epoch in 0..epochs {
        for idx in epoch_order(pairs.len(), cfg.seed, "unlearn", epoch) {
            let (ri, alt_index) = pairs[idx];
            let rec = &forget[ri];
            let alternate = match (m, alt_index) {
                (Method::IdkPO, _) => Some(spec.idk_pool[idk_rng.gen_range(0..spec.idk_pool.len())].clone()),
                (_, Some(a)) => Some(rec.alternates.as_ref().expect("checked above")[a].clone()),
                _ => None,
            };
            let retain_rec = (spec.w_r > 0.0).then(|| &retain[retain_rng.gen_range(0..retain.len())]);
            let batch = LossBatch {
                forget: QA::new(&rec.question, &rec.answer),
                alternate,
                retain: retain_rec.map(|r| QA::new(&r.question, &r.answer)),
                refs: &refs,
            };
            let (out, grads) = method_loss_and_grad(spec, &batch, &model)?;
            let lr = lr_at(step, warmup, cfg.lr)?;
            adamw_step(&mut model, &grads, &mut state, cfg, lr)?;
            run.steps.push(StepRecord {
                step,
                epoch,
                lr,
                loss: out.value,
                record_id: rec.id.clone(),
                alt_index,
                retain_id: retain_rec.map(|r| r.id.clone()),
                diagnostics: out.diagnostics,
            });
            step += 1;
            if step % forget.len() == 0 {
                run.snapshots.push(model.clone());
            }
        }
    }
    debug_assert_eq!(step, n_equiv_epochs * forget.len());
    Ok(run)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;
    use std::sync::Arc;

    use super::*;
    use crate::corpus::{attach_alternates, generate_corpus, make_splits, AlternateSource, Lexicon, Split};
    use crate::losses::IDK_POOL;
    use crate::model::{checkpoint_bytes, init_model, ModelConfig};
    use crate::tokenizer::Tokenizer;

    struct Fixture {
        model: SequenceModel,
        forget: Vec<QARecord>,
        retain: Vec<QARecord>,
    }

    fn fixture(m_alt: usize) -> Fixture {
        let lex = Lexicon::default();
        let bundle = generate_corpus(10, 2, 2, 7).unwrap();
        let bundle = make_splits(&bundle, 0.2, 0.0, 7).unwrap();
        let bundle = attach_alternates(&bundle, m_alt, 7, &AlternateSource::Local(&lex)).unwrap();
        let tok = Arc::new(Tokenizer::from_texts(bundle.texts().chain(IDK_POOL)));
        let cfg = ModelConfig { d_model: 8, n_layers: 1, n_heads: 2, d_ff: 16, context_len: 48, ..ModelConfig::desk(tok.vocab_size()) };
        let model = init_model(cfg, 7).unwrap().with_tokenizer(tok).unwrap();
        Fixture { model, forget: bundle.split_records(Split::Forget), retain: bundle.split_records(Split::Retain) }
    }

    fn cfg() -> TrainConfig {
        TrainConfig { lr: 1e-3, seed: 3, ..Default::default() }
    }

    #[test]
    fn alt_schedule_visits_every_alternate_once_per_epoch() {
        let f = fixture(5);
        let spec = MethodSpec::new(Method::AltPO).with_alternates(5);
        let run = unlearn(f.model.clone(), &f.model.frozen(), &f.forget, &f.retain, &spec, &cfg(), 10).unwrap();
        let n_f = f.forget.len();
        assert_eq!(n_f, 4);
        assert_eq!(run.steps.len(), 10 * n_f);
        assert_eq!(run.snapshots.len(), 10);
        for epoch in 0..2 {
            let seen: Vec<(String, usize)> = run
                .steps
                .iter()
                .filter(|s| s.epoch == epoch)
                .map(|s| (s.record_id.clone(), s.alt_index.unwrap()))
                .collect();
            let unique: BTreeSet<_> = seen.iter().cloned().collect();
            assert_eq!(seen.len(), 5 * n_f);
            assert_eq!(unique.len(), 5 * n_f);
        }
        assert!(run.steps.iter().all(|s| s.retain_id.is_some()));
    }

    #[test]
    fn non_alt_methods_take_n_epochs() {
        let f = fixture(1);
        for method in [Method::NPO, Method::GA, Method::IdkPO, Method::GradDiff] {
            let run = unlearn(f.model.clone(), &f.model.frozen(), &f.forget, &f.retain, &MethodSpec::new(method), &cfg(), 3)
                .unwrap();
            assert_eq!(run.steps.len(), 3 * f.forget.len(), "{method}");
            assert_eq!(run.snapshots.len(), 3);
            assert!(run.steps.iter().all(|s| s.alt_index.is_none()));
        }
    }

    #[test]
    fn schedule_errors() {
        let f = fixture(3);
        let r = f.model.frozen();
        let spec = MethodSpec::new(Method::AltPO).with_alternates(3);
        let e = unlearn(f.model.clone(), &r, &f.forget, &f.retain, &spec, &cfg(), 10).unwrap_err();
        assert!(e.to_string().contains("multiple of M"), "{e}");
        assert!(unlearn(f.model.clone(), &r, &[], &f.retain, &spec, &cfg(), 9).is_err());
        assert!(unlearn(f.model.clone(), &f.model, &f.forget, &f.retain, &spec, &cfg(), 9).is_err());
        let spec5 = MethodSpec::new(Method::AltPO).with_alternates(5);
        assert!(unlearn(f.model.clone(), &r, &f.forget, &f.retain, &spec5, &cfg(), 10).is_err());
    }

    #[test]
    fn reference_is_untouched_and_runs_are_deterministic() {
        let f = fixture(2);
        let reference = f.model.frozen();
        let before = checkpoint_bytes(&reference);
        let spec = MethodSpec::new(Method::AltPO).with_alternates(2);
        let a = unlearn(f.model.clone(), &reference, &f.forget, &f.retain, &spec, &cfg(), 2).unwrap();
        let b = unlearn(f.model.clone(), &reference, &f.forget, &f.retain, &spec, &cfg(), 2).unwrap();
        assert_eq!(checkpoint_bytes(&reference), before);
        assert_eq!(checkpoint_bytes(a.final_model()), checkpoint_bytes(b.final_model()));
        assert_eq!(a.steps, b.steps);
        assert_ne!(a.final_model().params(), f.model.params());

        let dir = tempfile::tempdir().unwrap();
        a.save(dir.path()).unwrap();
        assert!(dir.path().join("epoch_1.ckpt").exists() && dir.path().join("epoch_2.ckpt").exists());
        let log = fs::read_to_string(dir.path().join("steps.jsonl")).unwrap();
        assert_eq!(log.lines().count(), a.steps.len());
        let first: StepRecord = serde_json::from_str(log.lines().next().unwrap()).unwrap();
        assert_eq!(first, a.steps[0]);
    }
}
