use crate::error::{Error, Result};
use crate::model::DecoderState;

use super::history::{History, ROOT};
use super::score::{normalize, Hypothesis, SearchContext};

struct Active {
    hist: usize,
    count: usize,
    score: f64,
    state: DecoderState,
}

struct Finished {
    hist: usize,
    count: usize,
    score: f64,
    eos: f64,
    decision: f64,
}

/// Label-synchronous beam search for global attention models; hypotheses end
/// with EOS and the output length is capped at the number of encoder frames.
pub fn global_search(cx: &SearchContext) -> Result<Hypothesis> {
    let m = cx.model;
    let cfg = cx.cfg;
    let frames = cx.frames();
    let eos = m.config.eos_label.ok_or_else(|| Error::Config("global search needs an eos_label".into()))?;
    let window = (1, frames);
    let mut hist = History::new();
    let mut active = vec![Active { hist: ROOT, count: 0, score: 0.0, state: m.initial_state() }];
    let mut finished: Vec<Finished> = Vec::new();

    for step in 0..=frames {
        // (hypothesis, label or None for EOS, score, decision, log-prob)
        let mut cands = Vec::new();
        let mut steps = Vec::with_capacity(active.len());
        for (i, h) in active.iter().enumerate() {
            let q = m.query(&h.state)?;
            let (ctx, _) = m.attend_query(&q, cx.enc, window)?;
            let logp = m.label_log_probs(&q, &ctx);
            let labels = if step < frames { cx.emittable() } else { &[] };
            for a in labels.iter().map(|&a| Some(a)).chain([None]) {
                let lp = logp[a.unwrap_or(eos)];
                let s = h.score + lp;
                if s.is_finite() {
                    cands.push((i, a, s, normalize(s, h.count + 1, cfg.gamma), lp));
                }
            }
            steps.push((q, ctx));
        }
        // EOS sorts as a label past every real one.
        let key = |a: Option<usize>| Some((a.unwrap_or(usize::MAX), 0));
        cands.sort_by(|a, b| {
            b.3.total_cmp(&a.3)
                .then_with(|| hist.cmp_extended((active[a.0].hist, key(a.1)), (active[b.0].hist, key(b.1))))
        });
        cands.truncate(cfg.beam_size);
        let mut next = Vec::with_capacity(cands.len());
        for (i, a, s, d, lp) in cands {
            let h = &active[i];
            match a {
                None => finished.push(Finished { hist: h.hist, count: h.count, score: s, eos: lp, decision: d }),
                Some(a) => next.push(Active {
                    hist: hist.push(h.hist, a, 0, lp, 0.0),
                    count: h.count + 1,
                    score: s,
                    state: m.next_state(&steps[i].0, &steps[i].1, a),
                }),
            }
        }
        active = next;
        if active.is_empty() {
            break;
        }
        let best_active = active.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        let best_finished = finished.iter().map(|f| f.score).fold(f64::NEG_INFINITY, f64::max);
        // Raw scores only decrease, so without normalization nothing active can still win.
        if cfg.gamma == 0 && best_finished >= best_active {
            break;
        }
        if cfg.gamma == 1 && finished.len() >= cfg.beam_size {
            break;
        }
    }

    let best = finished
        .iter()
        .min_by(|a, b| b.decision.total_cmp(&a.decision).then_with(|| hist.labels(a.hist).cmp(&hist.labels(b.hist))))
        .ok_or(Error::EmptyBeam)?;
    let mh = hist.materialize(best.hist);
    Ok(Hypothesis {
        labels: mh.labels,
        boundaries: Vec::new(),
        label_scores: mh.label_scores,
        length_scores: vec![0.0; best.count],
        eos_score: Some(best.eos),
        score: best.score,
        decision: best.decision,
    })
}
