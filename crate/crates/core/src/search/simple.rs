use std::cmp::Ordering;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::length::LengthState;
use crate::model::{DecoderState, Query};

use super::history::{History, ROOT};
use super::score::{end_logs, normalize, segment_term, Hypothesis, SearchContext};

/// Hypothesis after consuming frames `1..=t`, with an open segment starting at `t0 + 1`
/// (or a segment that just ended at `t` when `t0 == t`).
struct Active {
    hist: usize,
    count: usize,
    /// Sum of the terms of all closed segments.
    closed: f64,
    /// Unscaled `Σ log(1 - q)` over the open segment so far.
    open: f64,
    t0: usize,
    last: Option<usize>,
    dec: DecoderState,
    query: Option<Rc<Query>>,
    energies: Vec<f64>,
    len_state: LengthState,
}

enum Move {
    Continue { not_end: f64 },
    End { label: usize, label_score: f64, length_score: f64, ctx: usize },
}

struct Candidate {
    parent: usize,
    mv: Move,
    score: f64,
    decision: f64,
}

/// Time-synchronous search pruning all hypotheses jointly, open or not, with
/// framewise neural length scores. No recombination.
pub fn simple_search(cx: &SearchContext) -> Result<Hypothesis> {
    let frames = cx.frames();
    let cfg = cx.cfg;
    let m = cx.model;
    let inputs =
        cx.len_inputs.as_ref().ok_or_else(|| Error::Config("simple search needs the neural length model".into()))?;
    let mut hist = History::new();
    let mut beam = vec![Active {
        hist: ROOT,
        count: 0,
        closed: 0.0,
        open: 0.0,
        t0: 0,
        last: None,
        dec: m.initial_state(),
        query: None,
        energies: Vec::new(),
        len_state: m.length_initial_state(),
    }];

    for t in 1..=frames {
        let mut cands = Vec::new();
        let mut ctxs = Vec::new();
        let mut steps = Vec::with_capacity(beam.len());
        for (i, h) in beam.iter_mut().enumerate() {
            debug_assert!(h.t0 < t && t - h.t0 <= cfg.delta_max);
            let query = match &h.query {
                Some(q) => Rc::clone(q),
                None => {
                    let q = Rc::new(m.query(&h.dec)?);
                    h.query = Some(Rc::clone(&q));
                    q
                }
            };
            h.energies.push(m.energy(&query, cx.enc, t));
            let sym = if t == h.t0 + 1 { cx.length_symbol(h.last) } else { m.config.blank() };
            let (len_state, z) = m.length_step(inputs, &h.len_state, t, sym);
            steps.push(len_state);
            let (not_end, end) = end_logs(z);

            let (ctx, _) = m.context_from_energies(cx.enc, &h.energies, h.t0 + 1);
            let logp = m.label_log_probs(&query, &ctx);
            let ci = ctxs.len();
            ctxs.push(ctx);
            let length_score = h.open + end;
            for &a in cx.emittable() {
                let score = h.closed + segment_term(cfg.alpha, length_score, logp[a]);
                if score.is_finite() {
                    cands.push(Candidate {
                        parent: i,
                        mv: Move::End { label: a, label_score: logp[a], length_score, ctx: ci },
                        score,
                        decision: normalize(score, h.count + 1, cfg.gamma),
                    });
                }
            }
            if t < frames && t - h.t0 < cfg.delta_max {
                let score = h.closed + cfg.alpha * (h.open + not_end);
                if score.is_finite() {
                    cands.push(Candidate {
                        parent: i,
                        mv: Move::Continue { not_end },
                        score,
                        decision: normalize(score, h.count.max(1), cfg.gamma),
                    });
                }
            }
        }

        let order = |a: &Candidate, b: &Candidate| -> Ordering {
            b.decision.total_cmp(&a.decision).then_with(|| {
                let ext = |c: &Candidate| match c.mv {
                    Move::End { label, .. } => (beam[c.parent].hist, Some((label, t))),
                    Move::Continue { .. } => (beam[c.parent].hist, None),
                };
                hist.cmp_extended(ext(a), ext(b))
            })
        };
        cands.sort_by(order);
        cands.truncate(cfg.beam_size);

        let mut next = Vec::with_capacity(cands.len());
        for c in cands {
            let p = &beam[c.parent];
            let len_state = steps[c.parent].clone();
            next.push(match c.mv {
                Move::Continue { not_end } => Active {
                    hist: p.hist,
                    count: p.count,
                    closed: p.closed,
                    open: p.open + not_end,
                    t0: p.t0,
                    last: p.last,
                    dec: p.dec.clone(),
                    query: p.query.clone(),
                    energies: p.energies.clone(),
                    len_state,
                },
                Move::End { label, label_score, length_score, ctx } => {
                    let q = p.query.as_ref().expect("query computed this frame");
                    Active {
                        hist: hist.push(p.hist, label, t, label_score, length_score),
                        count: p.count + 1,
                        closed: c.score,
                        open: 0.0,
                        t0: t,
                        last: Some(label),
                        dec: m.next_state(q, &ctxs[ctx], label),
                        query: None,
                        energies: Vec::new(),
                        len_state,
                    }
                }
            });
        }
        beam = next;
        if beam.is_empty() {
            return Err(Error::EmptyBeam);
        }
    }

    // After the last frame only segment-ended hypotheses remain.
    let best = beam.first().ok_or(Error::EmptyBeam)?;
    debug_assert_eq!(best.t0, frames);
    let mh = hist.materialize(best.hist);
    Ok(Hypothesis {
        labels: mh.labels,
        boundaries: mh.boundaries,
        label_scores: mh.label_scores,
        length_scores: mh.length_scores,
        eos_score: None,
        score: best.closed,
        decision: normalize(best.closed, best.count, cfg.gamma),
    })
}
