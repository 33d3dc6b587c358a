use crate::length::{LengthModelKind, StaticLengthTable};
use crate::model::{SegmentalModel, Segmentation, WindowMode};
use crate::testutil::{features, sharp_model, tiny_config};
use crate::Tensor;

use super::*;

fn instance(frames: usize, vocab: usize, seed: u64, ctx: bool) -> (SegmentalModel, crate::model::EncoderOutput) {
    let mut config = tiny_config(vocab);
    config.ctx_dependency = ctx;
    let mut m = sharp_model(config, seed, 2.5);
    let mu = (0..vocab).map(|a| 1.0 + (a as f64 * 0.7 + seed as f64 * 0.3) % 3.0).collect();
    m.static_length = Some(StaticLengthTable::from_means(mu, 4).unwrap());
    let enc = m.encode(&features(2 * frames, 3, seed + 100)).unwrap();
    assert_eq!(enc.frames(), frames);
    (m, enc)
}

fn cfg(mode: SearchMode, length: LengthModelKind, delta: usize, gamma: u8, alpha: f64) -> SearchConfig {
    SearchConfig { mode, beam_size: 4, alpha, gamma, delta_max: delta, length_model: length, recombination: false }
}

/// Best alignment by scoring every candidate independently.
fn brute_force(m: &SegmentalModel, enc: &crate::model::EncoderOutput, c: SearchConfig) -> Hypothesis {
    let cx = SearchContext::new(m, enc, c).unwrap();
    let mut best: Option<Hypothesis> = None;
    for (labels, bounds) in enumerate_alignments(enc.frames(), c.delta_max, cx.emittable()) {
        let seg = Segmentation::new(bounds, enc.frames()).unwrap();
        let h = cx.score_sequence(&labels, &seg).unwrap();
        let wins = best.as_ref().is_none_or(|b| {
            h.decision > b.decision
                || (h.decision == b.decision && (&h.labels, &h.boundaries) < (&b.labels, &b.boundaries))
        });
        if wins {
            best = Some(h);
        }
    }
    best.unwrap()
}

#[test]
fn decision_rule_examples() {
    assert_eq!(normalize(-4.0, 2, 0), -4.0);
    assert_eq!(normalize(-1.0 + -3.0, 2, 1), -2.0);
    assert_eq!(segment_term(0.0, -7.5, -1.25), -1.25);

    let (m, enc) = instance(4, 3, 0, true);
    let seg = Segmentation::new(vec![1, 4], 4).unwrap();
    let neural =
        score_sequence(&m, &enc, &[0, 2], &seg, cfg(SearchMode::Oracle, LengthModelKind::Neural, 4, 0, 0.0)).unwrap();
    let none =
        score_sequence(&m, &enc, &[0, 2], &seg, cfg(SearchMode::Oracle, LengthModelKind::None, 4, 0, 1.0)).unwrap();
    assert_eq!(neural.score, none.score);
    let norm =
        score_sequence(&m, &enc, &[0, 2], &seg, cfg(SearchMode::Oracle, LengthModelKind::None, 4, 1, 1.0)).unwrap();
    assert_eq!(norm.decision, none.score / 2.0);
    // Segments longer than δ_max are rejected.
    let long =
        score_sequence(&m, &enc, &[0, 2], &seg, cfg(SearchMode::Oracle, LengthModelKind::None, 2, 0, 1.0)).unwrap();
    assert_eq!(long.score, f64::NEG_INFINITY);
}

#[test]
fn enumeration_counts() {
    let comps = |t, d| {
        let mut v: Vec<Vec<usize>> = enumerate_alignments(t, d, &[0]).into_iter().map(|x| x.1).collect();
        v.dedup();
        v.len()
    };
    assert_eq!(comps(2, 2), 2);
    assert_eq!(comps(4, 4), 8);
    assert_eq!(enumerate_alignments(2, 2, &[0, 1, 2]).len(), 3 + 9);
}

#[test]
fn oracle_matches_brute_force() {
    for length in [LengthModelKind::None, LengthModelKind::Static, LengthModelKind::Neural] {
        for seed in 0..3 {
            for gamma in [0, 1] {
                let (m, enc) = instance(5, 3, seed, true);
                let c = cfg(SearchMode::Oracle, length, 3, gamma, 0.8);
                let o = decode(&m, &enc, c).unwrap();
                let b = brute_force(&m, &enc, c);
                assert_eq!(o, b, "{length:?} seed {seed} gamma {gamma}");
            }
        }
    }
}

#[test]
fn oracle_refuses_large_instances() {
    let (m, enc) = instance(9, 3, 0, true);
    let r = decode(&m, &enc, cfg(SearchMode::Oracle, LengthModelKind::None, 3, 0, 1.0));
    assert!(matches!(r, Err(crate::Error::InstanceTooLarge(_))));
    let (m, enc) = instance(4, 3, 0, true);
    let r = decode(&m, &enc, cfg(SearchMode::Oracle, LengthModelKind::None, 5, 0, 1.0));
    assert!(matches!(r, Err(crate::Error::InstanceTooLarge(_))));
}

#[test]
fn uniform_labels_and_half_q_prefer_one_segment() {
    let mut m = SegmentalModel::zeros(tiny_config(3)).unwrap();
    let enc = m.encode(&features(12, 3, 0)).unwrap();
    m.static_length = None;
    let h = decode(&m, &enc, cfg(SearchMode::Oracle, LengthModelKind::Neural, 4, 0, 1.0).saturating()).unwrap();
    // δ_max = 4 < T = 6 forces two segments; longer segments pay fewer factors.
    assert_eq!(h.labels.len(), 2);
    let enc4 = m.encode(&features(8, 3, 0)).unwrap();
    let h = decode(&m, &enc4, cfg(SearchMode::Oracle, LengthModelKind::Neural, 4, 0, 1.0)).unwrap();
    assert_eq!(h.boundaries, vec![4]);
}

#[test]
fn decoders_report_their_own_alignment_score() {
    let (m, enc) = instance(7, 4, 1, true);
    for mode in [SearchMode::Segmental, SearchMode::Simple] {
        for gamma in [0, 1] {
            let c = cfg(mode, LengthModelKind::Neural, 3, gamma, 0.7);
            let h = decode(&m, &enc, c).unwrap();
            let seg = Segmentation::new(h.boundaries.clone(), 7).unwrap();
            let s = score_sequence(&m, &enc, &h.labels, &seg, c).unwrap();
            assert_eq!(h, s);
        }
    }
}

#[test]
fn saturated_segmental_matches_oracle() {
    for seed in 0..4 {
        for (length, ctx, recomb) in [
            (LengthModelKind::Neural, true, false),
            (LengthModelKind::None, false, true),
            (LengthModelKind::Static, false, true),
            (LengthModelKind::Static, true, false),
        ] {
            for gamma in [0, 1] {
                let (m, enc) = instance(6, 3, seed, ctx);
                let mut c = cfg(SearchMode::Segmental, length, 3, gamma, 1.0).saturating();
                c.recombination = recomb;
                let s = decode(&m, &enc, c).unwrap();
                c.mode = SearchMode::Oracle;
                let o = decode(&m, &enc, c).unwrap();
                assert_eq!(s, o, "seed {seed} {length:?} ctx {ctx} gamma {gamma}");
            }
        }
    }
}

#[test]
fn recombination_is_exact_without_context_dependency() {
    for seed in 0..6 {
        let (m, enc) = instance(8, 4, seed, false);
        let mut c = cfg(SearchMode::Segmental, LengthModelKind::Static, 4, 0, 1.0);
        c.beam_size = 3;
        c.recombination = false;
        let off = decode(&m, &enc, c.saturating()).unwrap();
        c.recombination = true;
        let on = decode(&m, &enc, c.saturating()).unwrap();
        assert_eq!(on, off);
    }
}

#[test]
fn saturated_simple_matches_oracle() {
    for seed in 0..4 {
        for gamma in [0, 1] {
            let (m, enc) = instance(6, 3, seed, true);
            let c = cfg(SearchMode::Simple, LengthModelKind::Neural, 3, gamma, 0.6).saturating();
            let s = decode(&m, &enc, c).unwrap();
            let o = decode(&m, &enc, SearchConfig { mode: SearchMode::Oracle, ..c }).unwrap();
            assert_eq!(s, o, "seed {seed} gamma {gamma}");
        }
    }
}

#[test]
fn simple_search_on_one_frame_emits_the_argmax() {
    let (m, enc) = instance(1, 4, 2, true);
    let h = decode(&m, &enc, cfg(SearchMode::Simple, LengthModelKind::Neural, 3, 0, 1.0)).unwrap();
    let (p, _) = m.label_step(&m.initial_state(), &enc, (1, 1)).unwrap();
    let argmax = (0..4).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    assert_eq!(h.labels, vec![argmax]);
    assert_eq!(h.boundaries, vec![1]);
}

#[test]
fn certain_end_predictor_closes_every_frame() {
    let (mut m, enc) = instance(6, 3, 3, true);
    m.set_param("len.out.b", Tensor::vector(vec![50.0])).unwrap();
    let h = decode(&m, &enc, cfg(SearchMode::Simple, LengthModelKind::Neural, 4, 0, 1.0)).unwrap();
    assert_eq!(h.boundaries, vec![1, 2, 3, 4, 5, 6]);
}

#[test]
fn simple_search_needs_the_neural_model() {
    let (m, enc) = instance(4, 3, 0, true);
    assert!(decode(&m, &enc, cfg(SearchMode::Simple, LengthModelKind::Static, 4, 0, 1.0)).is_err());
}

#[test]
fn wider_beams_never_beat_the_saturated_beam() {
    for seed in 0..4 {
        let (m, enc) = instance(8, 4, seed, true);
        let c = cfg(SearchMode::Segmental, LengthModelKind::Neural, 4, 0, 1.0);
        let full = decode(&m, &enc, c.saturating()).unwrap();
        for beam in [1, 2, 4, 8] {
            let h = decode(&m, &enc, SearchConfig { beam_size: beam, ..c }).unwrap();
            assert!(h.decision <= full.decision);
        }
    }
}

#[test]
fn global_search_matches_exhaustive_label_search() {
    for seed in 0..3 {
        let mut config = tiny_config(3);
        config.window_mode = WindowMode::Global;
        config.eos_label = Some(2);
        config.neural_length = false;
        let m = sharp_model(config, seed, 2.5);
        let enc = m.encode(&features(8, 3, seed)).unwrap();
        let c = SearchConfig { beam_size: usize::MAX, ..cfg(SearchMode::Segmental, LengthModelKind::None, 4, 0, 1.0) };
        let h = decode(&m, &enc, c).unwrap();
        let mut best = (f64::NEG_INFINITY, Vec::new());
        let mut stack = vec![Vec::new()];
        while let Some(labels) = stack.pop() {
            let score = global_score(&m, &enc, &labels);
            if score > best.0 || (score == best.0 && labels < best.1) {
                best = (score, labels.clone());
            }
            if labels.len() < enc.frames() {
                for a in 0..2 {
                    let mut l = labels.clone();
                    l.push(a);
                    stack.push(l);
                }
            }
        }
        assert_eq!(h.labels, best.1, "seed {seed}");
        assert!((h.score - best.0).abs() < 1e-12);
    }
}

fn global_score(m: &SegmentalModel, enc: &crate::model::EncoderOutput, labels: &[usize]) -> f64 {
    let mut state = m.initial_state();
    let mut total = 0.0;
    for &a in labels.iter().chain(std::iter::once(&2)) {
        let (p, step) = m.label_step(&state, enc, (1, enc.frames())).unwrap();
        total += p[a].ln();
        state = m.next_state(&step.query, &step.context, a);
    }
    total
}
