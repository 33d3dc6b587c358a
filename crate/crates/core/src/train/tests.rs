use crate::data::{Corpus, Split, Utterance};
use crate::grad::{AdamState, Tape};
use crate::length::{neural_segment_log_prob, BlankAlignment};
use crate::model::{ModelConfig, SegmentalModel, Segmentation, WindowMode};
use crate::testutil::{features, sharp_model, tiny_config};
use crate::{Error, Tensor};

use super::*;

fn utt(seed: u64, labels: Vec<usize>, lengths: &[usize]) -> Utterance {
    let seg = Segmentation::from_lengths(lengths).unwrap();
    Utterance::new(features(2 * seg.frames(), 3, seed), labels, seg).unwrap()
}

fn corpus(train: Vec<Utterance>, dev: Vec<Utterance>) -> Corpus {
    Corpus { vocab_size: 3, frames_per_step: 2, train, dev, eval: vec![] }
}

fn small_corpus() -> Corpus {
    corpus(
        vec![
            utt(1, vec![0, 1, 2], &[2, 1, 3]),
            utt(2, vec![2, 0], &[3, 2]),
            utt(3, vec![1], &[4]),
            utt(4, vec![1, 2, 1], &[1, 2, 2]),
        ],
        vec![utt(5, vec![0, 2], &[2, 3])],
    )
}

fn zero_prefix(m: &mut SegmentalModel, prefix: &str) {
    let names: Vec<(String, Vec<usize>)> = m
        .params
        .iter()
        .filter(|(_, p)| p.name.starts_with(prefix))
        .map(|(_, p)| (p.name.clone(), p.value.shape().to_vec()))
        .collect();
    for (n, shape) in names {
        m.set_param(&n, Tensor::zeros(&shape)).unwrap();
    }
}

#[test]
fn whole_model_gradient_matches_finite_differences() {
    for ctx in [true, false] {
        let config = ModelConfig { ctx_dependency: ctx, ..tiny_config(4) };
        let m = sharp_model(config, 7, 1.5);
        let u = utt(9, vec![3, 0, 2, 1], &[2, 1, 3, 2]);
        for c in gradient_check(&m, &u, true, 1e-5).unwrap() {
            assert!(c.rel_error < 1e-4, "{} (ctx {ctx}): {}", c.name, c.rel_error);
        }
    }
}

#[test]
fn uniform_label_model_costs_log_vocab_per_label() {
    let m = SegmentalModel::zeros(tiny_config(5)).unwrap();
    let u = utt(1, vec![0, 4, 2], &[2, 3, 1]);
    let l = loss(&m, &u, false).unwrap();
    assert!((l.label - 3.0 * 5f64.ln()).abs() < 1e-12);
    assert_eq!(l.length, 0.0);
    assert_eq!(l.outputs, 3);
}

#[test]
fn half_end_probability_costs_log_two_per_frame() {
    let mut m = SegmentalModel::new(tiny_config(3), 2).unwrap();
    zero_prefix(&mut m, "len.out");
    let u = utt(1, vec![0, 1, 2], &[2, 3, 2]);
    let l = loss(&m, &u, true).unwrap();
    assert!((l.length - 7.0 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn framewise_cross_entropy_equals_segment_log_probs() {
    let m = sharp_model(tiny_config(3), 4, 2.0);
    let u = utt(6, vec![2, 0, 1, 2], &[3, 1, 2, 2]);
    let enc = m.encode(&u.features).unwrap();
    let omega = BlankAlignment::encode(&u.labels, &u.segmentation).unwrap();
    let logits = m.neural_logits(&enc, &omega).unwrap();
    let direct: f64 = u.segmentation.windows().map(|(lo, hi)| -neural_segment_log_prob(lo - 1, hi, &logits)).sum();
    let framewise = loss(&m, &u, true).unwrap().length;
    assert!((direct - framewise).abs() < 1e-10, "{direct} vs {framewise}");
}

#[test]
fn misaligned_utterance_is_rejected() {
    let m = SegmentalModel::new(tiny_config(3), 1).unwrap();
    let seg = Segmentation::from_lengths(&[2, 2]).unwrap();
    let u = Utterance::new(features(12, 3, 1), vec![0, 1], seg).unwrap();
    assert!(matches!(loss(&m, &u, false), Err(Error::InvalidSegmentation(_))));
}

#[test]
fn global_model_loss_includes_eos() {
    let config =
        ModelConfig { window_mode: WindowMode::Global, eos_label: Some(3), neural_length: false, ..tiny_config(4) };
    let m = SegmentalModel::zeros(config).unwrap();
    let u = utt(1, vec![0, 2], &[1, 2]);
    let l = loss(&m, &u, false).unwrap();
    assert_eq!(l.outputs, 3);
    assert!((l.label - 3.0 * 4f64.ln()).abs() < 1e-12);
}

#[test]
fn single_step_decreases_the_sequence_loss() {
    for lr in [1e-3, 1e-4] {
        let m = sharp_model(tiny_config(3), 3, 1.0);
        let u = utt(2, vec![1, 0, 2], &[2, 2, 2]);
        let before = loss(&m, &u, true).unwrap().total();
        let config = TrainConfig { learning_rate: lr, batch_size: 1, epochs: 1, ..TrainConfig::default() };
        let mut t = Trainer::new(m, config, None).unwrap();
        t.run_epoch(std::slice::from_ref(&u)).unwrap();
        let after = loss(&t.model, &u, true).unwrap().total();
        assert!(after < before, "lr {lr}: {after} >= {before}");
    }
}

#[test]
fn memorizes_a_single_sequence() {
    let config = ModelConfig { enc_dim: 6, dec_dim: 6, ..tiny_config(3) };
    let m = SegmentalModel::new(config, 5).unwrap();
    let c = corpus(vec![utt(3, vec![2, 0, 1, 0], &[2, 3, 1, 2])], vec![]);
    let tc = TrainConfig { epochs: 300, learning_rate: 1e-2, batch_size: 1, ..TrainConfig::default() };
    let mut t = Trainer::new(m, tc, None).unwrap();
    let mut last = None;
    t.fit(&c, |r| last = Some(*r)).unwrap();
    let (total, label, _) = last.unwrap().loss.per_output();
    assert!(label < 0.1, "label loss {label}");
    assert!(total < 0.5, "total loss {total}");
}

#[test]
fn initial_loss_is_near_uniform() {
    let m = SegmentalModel::new(tiny_config(3), 1).unwrap();
    let mut t = Trainer::new(m, TrainConfig::default(), None).unwrap();
    t.config.epochs = 1;
    let mut first = None;
    t.fit(&small_corpus(), |r| {
        first.get_or_insert(*r);
    })
    .unwrap();
    let r = first.unwrap();
    assert_eq!((r.epoch, r.split), (0, Split::Train));
    let (_, label, _) = r.loss.per_output();
    assert!((label - 3f64.ln()).abs() < 0.15, "{label}");
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let m = SegmentalModel::new(tiny_config(3), 11).unwrap();
        let tc = TrainConfig { epochs: 3, batch_size: 2, seed: 4, ..TrainConfig::default() };
        let mut t = Trainer::new(m, tc, None).unwrap();
        t.fit(&small_corpus(), |_| {}).unwrap();
        t.model.to_bytes().unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn resume_reproduces_an_uninterrupted_run() {
    let tc = |epochs| TrainConfig { epochs, batch_size: 3, seed: 2, ..TrainConfig::default() };
    let c = small_corpus();
    let full = tempfile::tempdir().unwrap();
    let mut t = Trainer::new(SegmentalModel::new(tiny_config(3), 3).unwrap(), tc(4), Some(full.path())).unwrap();
    t.fit(&c, |_| {}).unwrap();

    let split = tempfile::tempdir().unwrap();
    let mut t = Trainer::new(SegmentalModel::new(tiny_config(3), 3).unwrap(), tc(2), Some(split.path())).unwrap();
    t.fit(&c, |_| {}).unwrap();
    // A stray record from an interrupted epoch 3 must not survive the resume.
    let metrics = split.path().join("metrics.log");
    let mut log = std::fs::read_to_string(&metrics).unwrap();
    log.push_str("epoch=3 split=train loss=1 label_loss=1 length_loss=0\n");
    std::fs::write(&metrics, log).unwrap();
    assert!(Trainer::can_resume(split.path()));
    let mut t = Trainer::resume(split.path(), tc(4)).unwrap();
    t.fit(&c, |_| {}).unwrap();

    for f in ["epoch-004.ckpt", "best.ckpt", "trainer.state", "metrics.log"] {
        let a = std::fs::read(full.path().join(f)).unwrap();
        let b = std::fs::read(split.path().join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn metrics_lines_carry_the_loss_split() {
    let dir = tempfile::tempdir().unwrap();
    let tc = TrainConfig { epochs: 1, ..TrainConfig::default() };
    let mut t = Trainer::new(SegmentalModel::new(tiny_config(3), 3).unwrap(), tc, Some(dir.path())).unwrap();
    t.fit(&small_corpus(), |_| {}).unwrap();
    let log = std::fs::read_to_string(dir.path().join("metrics.log")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("epoch=1 split=dev loss="));
    for l in lines {
        let keys: Vec<&str> = l.split_whitespace().map(|kv| kv.split('=').next().unwrap()).collect();
        assert_eq!(keys, ["epoch", "split", "loss", "label_loss", "length_loss"]);
    }
    assert!(dir.path().join("epoch-001.ckpt").is_file());
    let best = SegmentalModel::load(&dir.path().join("best.ckpt")).unwrap();
    assert!(best.static_length.is_some());
}

#[test]
fn nan_loss_aborts_with_divergence() {
    let mut m = SegmentalModel::new(tiny_config(3), 1).unwrap();
    let id = m.params.id("readout.b2").unwrap();
    m.params.get_mut(id).value.data_mut()[0] = f64::NAN;
    let mut t = Trainer::new(m, TrainConfig::default(), None).unwrap();
    assert!(matches!(t.run_epoch(&small_corpus().train), Err(Error::Divergence { .. })));
}

#[test]
fn trainer_state_round_trips_and_detects_corruption() {
    let m = SegmentalModel::new(tiny_config(3), 1).unwrap();
    let mut adam = AdamState::new(&m.params);
    adam.step = 7;
    adam.m[0][0] = 0.25;
    adam.v[1][0] = 1e-9;
    let s = TrainerState { epoch: 3, step: 12, best_dev_loss: 0.5, best_epoch: 2, adam };
    let mut bytes = s.to_bytes();
    assert_eq!(TrainerState::from_bytes(&bytes).unwrap(), s);
    bytes[20] ^= 1;
    assert!(matches!(TrainerState::from_bytes(&bytes), Err(Error::Checksum { .. })));
}

#[test]
fn static_table_uses_the_longest_training_segment() {
    let t = estimate_static_table(&small_corpus().train, 3).unwrap();
    assert_eq!(t.delta_max(), 4);
    assert!((t.mu()[1] - 2.0).abs() < 1e-12);
}

fn global_config() -> ModelConfig {
    ModelConfig { window_mode: WindowMode::Global, eos_label: Some(3), neural_length: false, ..tiny_config(4) }
}

#[test]
fn imported_model_scores_a_single_segment_like_the_global_model() {
    let g = sharp_model(global_config(), 8, 2.0);
    let target = ModelConfig { window_mode: WindowMode::Segmental, neural_length: true, ..global_config() };
    let s = import_global(&g, &target, 1).unwrap();
    let shared = |m: &SegmentalModel| -> usize {
        m.params.iter().filter(|(_, p)| SegmentalModel::is_shared_param(&p.name)).map(|(_, p)| p.value.len()).sum()
    };
    assert_eq!(shared(&g), shared(&s));
    assert_eq!(shared(&g), g.params.num_values());
    let x = features(10, 3, 3);
    let enc_g = g.encode(&x).unwrap();
    let enc_s = s.encode(&x).unwrap();
    let seg = Segmentation::trivial(enc_g.frames()).unwrap();
    for a in 0..3 {
        let pg = g.seq_log_prob(&[a], &seg, &enc_g).unwrap();
        let ps = s.seq_log_prob(&[a], &seg, &enc_s).unwrap();
        assert_eq!(pg.per_label, ps.per_label);
    }
}

#[test]
fn import_checks_compatibility() {
    let g = SegmentalModel::new(global_config(), 1).unwrap();
    let wrong = ModelConfig { dec_dim: 5, window_mode: WindowMode::Segmental, ..global_config() };
    assert!(matches!(import_global(&g, &wrong, 1), Err(Error::IncompatibleImport(_))));
    let seg = SegmentalModel::new(tiny_config(4), 1).unwrap();
    assert!(matches!(import_global(&seg, &tiny_config(4), 1), Err(Error::IncompatibleImport(_))));
}

#[test]
fn tape_and_breakdown_agree() {
    let m = sharp_model(tiny_config(3), 2, 1.0);
    let u = utt(2, vec![0, 1], &[3, 2]);
    let mut tape = Tape::new(&m.params);
    let (out, b) = sequence_loss(&m, &mut tape, &u, true).unwrap();
    assert_eq!(tape.scalar(out), b.total());
}
