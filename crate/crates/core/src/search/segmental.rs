use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::length::LengthState;
use crate::model::DecoderState;

use super::expand::SegmentExpander;
use super::history::{History, ROOT, ROOT_KEY};
use super::score::{normalize, segment_term, Hypothesis, SearchContext};

/// A hypothesis whose last segment ended at the frame it is stored under.
struct Closed {
    hist: usize,
    key: usize,
    count: usize,
    score: f64,
    expander: Option<SegmentExpander>,
}

struct Candidate {
    t0: usize,
    parent: usize,
    label: usize,
    ctx: usize,
    score: f64,
    decision: f64,
    label_score: f64,
    length_score: f64,
    key: usize,
}

fn better(hist: &History, closed: &[Vec<Closed>], t: usize, a: &Candidate, b: &Candidate) -> Ordering {
    b.decision.total_cmp(&a.decision).then_with(|| {
        hist.cmp_extended(
            (closed[a.t0][a.parent].hist, Some((a.label, t))),
            (closed[b.t0][b.parent].hist, Some((b.label, t))),
        )
    })
}

/// Time-synchronous search that prunes segment-ended hypotheses against each
/// other at every frame. Open segments are implicit: a hypothesis that ended at
/// `t0` is extended to every end frame up to `t0 + δ_max`.
pub fn segmental_search(cx: &SearchContext) -> Result<Hypothesis> {
    let frames = cx.frames();
    let cfg = cx.cfg;
    let mut hist = History::new();
    let mut closed: Vec<Vec<Closed>> = (0..=frames).map(|_| Vec::new()).collect();
    let initial = cx.model.initial_state();
    closed[0].push(Closed {
        hist: ROOT,
        key: ROOT_KEY,
        count: 0,
        score: 0.0,
        expander: Some(SegmentExpander::new(cx, &initial, None, None, 0)?),
    });

    for t in 1..=frames {
        let mut cands = Vec::new();
        let mut ctxs: Vec<Vec<f64>> = Vec::new();
        for (t0, hyps) in closed.iter().enumerate().take(t).skip(t.saturating_sub(cfg.delta_max)) {
            for (i, h) in hyps.iter().enumerate() {
                let exp = h.expander.as_ref().expect("expanders exist below the last frame");
                debug_assert!(t <= exp.t_max());
                let (logp, ctx) = exp.end_at(cx, t);
                let ci = ctxs.len();
                ctxs.push(ctx);
                for &a in cx.emittable() {
                    let length_score = exp.length_term(cx, a, t);
                    let score = h.score + segment_term(cfg.alpha, length_score, logp[a]);
                    if !score.is_finite() {
                        continue;
                    }
                    cands.push(Candidate {
                        t0,
                        parent: i,
                        label: a,
                        ctx: ci,
                        score,
                        decision: normalize(score, h.count + 1, cfg.gamma),
                        label_score: logp[a],
                        length_score,
                        key: ROOT_KEY,
                    });
                }
            }
        }

        for c in &mut cands {
            c.key = hist.key(closed[c.t0][c.parent].key, c.label);
        }
        if cfg.recombination {
            // Viterbi recombination: keep the best candidate per label history.
            let mut best: HashMap<usize, usize> = HashMap::new();
            for idx in 0..cands.len() {
                match best.get(&cands[idx].key) {
                    Some(&j) if better(&hist, &closed, t, &cands[j], &cands[idx]) != Ordering::Greater => {}
                    _ => {
                        best.insert(cands[idx].key, idx);
                    }
                }
            }
            let mut keep = vec![false; cands.len()];
            for &j in best.values() {
                keep[j] = true;
            }
            let mut flags = keep.into_iter();
            cands.retain(|_| flags.next().expect("one flag per candidate"));
        }

        cands.sort_by(|a, b| better(&hist, &closed, t, a, b));
        cands.truncate(cfg.beam_size);

        let mut survivors = Vec::with_capacity(cands.len());
        for c in cands {
            let parent = &closed[c.t0][c.parent];
            let exp = parent.expander.as_ref().expect("parent expander");
            let node = hist.push(parent.hist, c.label, t, c.label_score, c.length_score);
            let expander = if t < frames {
                let state: DecoderState = cx.model.next_state(&exp.query, &ctxs[c.ctx], c.label);
                let len_state: Option<&LengthState> = exp.len_state_at(t);
                Some(SegmentExpander::new(cx, &state, len_state, Some(c.label), t)?)
            } else {
                None
            };
            survivors.push(Closed { hist: node, key: c.key, count: parent.count + 1, score: c.score, expander });
        }
        closed[t] = survivors;
        if t >= cfg.delta_max {
            closed[t - cfg.delta_max] = Vec::new();
        }
    }

    let best = closed[frames].first().ok_or(Error::EmptyBeam)?;
    let m = hist.materialize(best.hist);
    Ok(Hypothesis {
        labels: m.labels,
        boundaries: m.boundaries,
        label_scores: m.label_scores,
        length_scores: m.length_scores,
        eos_score: None,
        score: best.score,
        decision: normalize(best.score, best.count, cfg.gamma),
    })
}
