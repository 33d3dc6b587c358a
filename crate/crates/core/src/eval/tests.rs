use proptest::prelude::*;
use rand::Rng as _;

use crate::data::Utterance;
use crate::length::{LengthModelKind, StaticLengthTable};
use crate::model::Segmentation;
use crate::rng;
use crate::search::{SearchConfig, SearchMode};
use crate::testutil::{features, sharp_model, tiny_config};

use super::*;

fn counts(s: usize, d: usize, i: usize, n: usize) -> ErrorCounts {
    ErrorCounts { substitutions: s, deletions: d, insertions: i, ref_len: n }
}

#[test]
fn small_examples() {
    let e = edit_distance(&["a", "b", "c"], &["a", "b", "c"]);
    assert_eq!(e, counts(0, 0, 0, 3));
    assert_eq!(e.wer(), 0.0);
    let e = edit_distance(&["a", "b", "c"], &["a", "c"]);
    assert_eq!(e, counts(0, 1, 0, 3));
    assert!((e.wer() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(edit_distance::<u8>(&[], &[1, 2]), counts(0, 0, 2, 0));
    assert_eq!(edit_distance(&[1, 2], &[3, 4]), counts(2, 0, 0, 2));
}

/// Best `(cost, deletions + insertions)` and its counts over every alignment path.
fn brute_force(r: &[u8], h: &[u8]) -> ErrorCounts {
    fn go(r: &[u8], h: &[u8], acc: ErrorCounts, best: &mut Option<ErrorCounts>) {
        if r.is_empty() && h.is_empty() {
            let key = |c: &ErrorCounts| (c.errors(), c.deletions + c.insertions);
            if best.as_ref().is_none_or(|b| key(&acc) < key(b)) {
                *best = Some(acc);
            }
            return;
        }
        if !r.is_empty() && !h.is_empty() {
            let mut a = acc;
            a.substitutions += usize::from(r[0] != h[0]);
            go(&r[1..], &h[1..], a, best);
        }
        if !r.is_empty() {
            go(&r[1..], h, counts(acc.substitutions, acc.deletions + 1, acc.insertions, acc.ref_len), best);
        }
        if !h.is_empty() {
            go(r, &h[1..], counts(acc.substitutions, acc.deletions, acc.insertions + 1, acc.ref_len), best);
        }
    }
    let mut best = None;
    go(r, h, counts(0, 0, 0, r.len()), &mut best);
    best.unwrap()
}

#[test]
fn matches_exhaustive_alignment_enumeration() {
    let mut g = rng::stream(3, "test.edit");
    for _ in 0..300 {
        let n = g.random_range(0..=8);
        let m = g.random_range(0..=8);
        let r: Vec<u8> = (0..n).map(|_| g.random_range(0..3)).collect();
        let h: Vec<u8> = (0..m).map(|_| g.random_range(0..3)).collect();
        assert_eq!(edit_distance(&r, &h), brute_force(&r, &h), "{r:?} / {h:?}");
    }
}

proptest! {
    #[test]
    fn identity_symmetry_and_triangle(
        a in proptest::collection::vec(0u8..4, 0..10),
        b in proptest::collection::vec(0u8..4, 0..10),
        c in proptest::collection::vec(0u8..4, 0..10),
    ) {
        prop_assert_eq!(edit_distance(&a, &a).errors(), 0);
        let ab = edit_distance(&a, &b);
        let ba = edit_distance(&b, &a);
        prop_assert_eq!(ab.substitutions, ba.substitutions);
        prop_assert_eq!(ab.deletions, ba.insertions);
        prop_assert_eq!(ab.insertions, ba.deletions);
        let bc = edit_distance(&b, &c).errors();
        prop_assert!(edit_distance(&a, &c).errors() <= ab.errors() + bc);
    }

    #[test]
    fn alignment_covers_both_sequences(
        a in proptest::collection::vec(0u8..3, 0..9),
        b in proptest::collection::vec(0u8..3, 0..9),
    ) {
        let ops = align(&a, &b);
        let (mut i, mut j) = (0, 0);
        for op in ops {
            match op {
                AlignOp::Match(x, y) | AlignOp::Substitution(x, y) => {
                    prop_assert_eq!((x, y), (i, j));
                    prop_assert_eq!(matches!(op, AlignOp::Match(..)), a[x] == b[y]);
                    i += 1;
                    j += 1;
                }
                AlignOp::Deletion(x) => { prop_assert_eq!(x, i); i += 1; }
                AlignOp::Insertion(y) => { prop_assert_eq!(y, j); j += 1; }
            }
        }
        prop_assert_eq!((i, j), (a.len(), b.len()));
    }
}

#[test]
fn silence_is_not_scored() {
    let e = word_errors(&[9, 1, 9, 2, 9], &[1, 2, 9, 9], Some(9));
    assert_eq!(e, counts(0, 0, 0, 2));
    assert_eq!(word_errors(&[9, 1], &[1], None), counts(0, 1, 0, 2));
}

#[test]
fn deletion_rows_are_marked() {
    let ops = align(&[1, 2, 3], &[1, 3]);
    assert_eq!(ops, [AlignOp::Match(0, 0), AlignOp::Deletion(1), AlignOp::Match(2, 1)]);
}

fn corpus(n: usize) -> (crate::SegmentalModel, Vec<Utterance>) {
    let mut m = sharp_model(tiny_config(3), 5, 2.0);
    m.static_length = Some(StaticLengthTable::from_means(vec![1.5, 2.0, 3.0], 4).unwrap());
    let mut g = rng::stream(1, "test.eval.corpus");
    let utts = (0..n as u64)
        .map(|k| {
            let lens: Vec<usize> = (0..g.random_range(1..4)).map(|_| g.random_range(1..4)).collect();
            let labels = lens.iter().map(|_| g.random_range(0..3)).collect();
            let seg = Segmentation::from_lengths(&lens).unwrap();
            Utterance::new(features(2 * seg.frames(), 3, k), labels, seg).unwrap()
        })
        .collect();
    (m, utts)
}

fn cfg(length: LengthModelKind, alpha: f64) -> SearchConfig {
    SearchConfig {
        mode: SearchMode::Segmental,
        beam_size: 4,
        alpha,
        gamma: 0,
        delta_max: 4,
        length_model: length,
        recombination: true,
    }
}

#[test]
fn identical_sequences_give_identical_score_columns() {
    let (m, utts) = corpus(1);
    let d = decode_utterance(&m, &utts[0], cfg(LengthModelKind::Static, 1.0), None).unwrap();
    let t = score_table(&d.recognized, &d.recognized);
    for r in &t.rows {
        assert_eq!(r.truth, r.recognized);
    }
    assert_eq!(t.truth_label_sum, t.recognized_label_sum);
    assert_eq!(t.truth_label_mean(), t.truth_label_sum / t.truth_labels as f64);
    let table = t.to_table("scores", true);
    assert_eq!(table.rows.len(), t.rows.len() + 2);
    assert_eq!(table.to_records().lines().count(), table.rows.len());
}

#[test]
fn parallel_decoding_matches_sequential() {
    let (m, utts) = corpus(9);
    let c = cfg(LengthModelKind::Neural, 1.0);
    let a = decode_corpus(&m, &utts, c, None, 1).unwrap();
    let b = decode_corpus(&m, &utts, c, None, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(hypotheses_table(&a).to_text(), hypotheses_table(&b).to_text());
}

#[test]
fn sweep_rows_and_scale_identity() {
    let (m, utts) = corpus(8);
    let one = sweep(&m, &utts, cfg(LengthModelKind::Static, 1.0), &[0.3], None, 1).unwrap();
    assert_eq!(one.rows.len(), 1);
    assert_eq!(one.to_table("sweep").rows.len(), 1);

    let zero = decode_corpus(&m, &utts, cfg(LengthModelKind::Static, 0.0), None, 1).unwrap();
    let none = decode_corpus(&m, &utts, cfg(LengthModelKind::None, 1.0), None, 1).unwrap();
    for (a, b) in zero.iter().zip(&none) {
        assert_eq!(a.recognized.labels, b.recognized.labels);
        assert_eq!(a.recognized.decision, b.recognized.decision);
    }
    assert!(sweep(&m, &utts, cfg(LengthModelKind::None, 1.0), &[0.1], None, 1).is_err());
}

#[test]
fn best_alpha_is_the_first_minimum() {
    let s = |e| DecodeSummary {
        errors: counts(e, 0, 0, 10),
        search: crate::search::SearchErrorReport { sequences: 1, errors: 0 },
    };
    let r = SweepReport { rows: vec![(0.0, s(3)), (0.1, s(1)), (0.3, s(1)), (1.0, s(2))], best: 1 };
    assert_eq!(r.best_alpha(), 0.1);
}

#[test]
fn table_renders_aligned_text_and_records() {
    let mut t = Table::new("demo", &["k", "value"]);
    t.push(vec!["a".into(), "1.00".into()]);
    t.push(vec!["bbb".into(), "2".into()]);
    assert_eq!(t.to_text(), "# demo\n  k  value\n  a   1.00\nbbb      2\n");
    assert_eq!(t.to_records(), "table=demo k=a value=1.00\ntable=demo k=bbb value=2\n");
}
