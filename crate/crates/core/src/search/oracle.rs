use crate::error::{Error, Result};
use crate::length::LengthState;
use crate::model::DecoderState;

use super::expand::SegmentExpander;
use super::score::{normalize, rank, segment_term, Hypothesis, SearchContext};

pub const MAX_FRAMES: usize = 8;
pub const MAX_VOCAB: usize = 4;
pub const MAX_DELTA: usize = 4;

struct Path {
    labels: Vec<usize>,
    boundaries: Vec<usize>,
    label_scores: Vec<f64>,
    length_scores: Vec<f64>,
}

struct Search<'c, 'a> {
    cx: &'c SearchContext<'a>,
    path: Path,
    best: Option<Hypothesis>,
}

impl Search<'_, '_> {
    fn offer(&mut self, score: f64) {
        let decision = normalize(score, self.path.labels.len(), self.cx.cfg.gamma);
        let wins = match &self.best {
            None => true,
            Some(b) => {
                rank(decision, &self.path.labels, &self.path.boundaries, b.decision, &b.labels, &b.boundaries)
                    == std::cmp::Ordering::Less
            }
        };
        if wins {
            self.best = Some(Hypothesis {
                labels: self.path.labels.clone(),
                boundaries: self.path.boundaries.clone(),
                label_scores: self.path.label_scores.clone(),
                length_scores: self.path.length_scores.clone(),
                eos_score: None,
                score,
                decision,
            });
        }
    }

    fn dfs(&mut self, t0: usize, state: &DecoderState, len_state: Option<&LengthState>, score: f64) -> Result<()> {
        let frames = self.cx.frames();
        if t0 == frames {
            self.offer(score);
            return Ok(());
        }
        let cx = self.cx;
        let exp = SegmentExpander::new(cx, state, len_state, self.path.labels.last().copied(), t0)?;
        for t in t0 + 1..=exp.t_max() {
            let (logp, ctx) = exp.end_at(cx, t);
            for &a in cx.emittable() {
                let length_score = exp.length_term(cx, a, t);
                let next_score = score + segment_term(cx.cfg.alpha, length_score, logp[a]);
                if !next_score.is_finite() {
                    continue;
                }
                let next = cx.model.next_state(&exp.query, &ctx, a);
                self.path.labels.push(a);
                self.path.boundaries.push(t);
                self.path.label_scores.push(logp[a]);
                self.path.length_scores.push(length_score);
                self.dfs(t, &next, exp.len_state_at(t), next_score)?;
                self.path.labels.pop();
                self.path.boundaries.pop();
                self.path.label_scores.pop();
                self.path.length_scores.pop();
            }
        }
        Ok(())
    }
}

/// Checks the size limits of exhaustive search.
pub fn check_oracle_size(frames: usize, vocab: usize, delta_max: usize) -> Result<()> {
    if frames > MAX_FRAMES || vocab > MAX_VOCAB || delta_max > MAX_DELTA {
        return Err(Error::InstanceTooLarge(format!(
            "T={frames}, vocab={vocab}, delta_max={delta_max} (limits {MAX_FRAMES}, {MAX_VOCAB}, {MAX_DELTA})"
        )));
    }
    Ok(())
}

/// Exact argmax over all segmentations and label sequences, by depth-first
/// enumeration with shared prefixes.
pub fn oracle_search(cx: &SearchContext) -> Result<Hypothesis> {
    check_oracle_size(cx.frames(), cx.model.config.vocab_size, cx.cfg.delta_max)?;
    let mut s = Search {
        cx,
        path: Path { labels: Vec::new(), boundaries: Vec::new(), label_scores: Vec::new(), length_scores: Vec::new() },
        best: None,
    };
    s.dfs(0, &cx.model.initial_state(), None, 0.0)?;
    s.best.ok_or(Error::EmptyBeam)
}

/// Every complete (labels, boundaries) pair the oracle considers, for tests.
pub fn enumerate_alignments(frames: usize, delta_max: usize, labels: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    fn rec(
        t0: usize,
        frames: usize,
        delta_max: usize,
        labels: &[usize],
        cur: &mut (Vec<usize>, Vec<usize>),
        out: &mut Vec<(Vec<usize>, Vec<usize>)>,
    ) {
        if t0 == frames {
            out.push(cur.clone());
            return;
        }
        for t in t0 + 1..=(t0 + delta_max).min(frames) {
            for &a in labels {
                cur.0.push(a);
                cur.1.push(t);
                rec(t, frames, delta_max, labels, cur, out);
                cur.0.pop();
                cur.1.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(0, frames, delta_max, labels, &mut (Vec::new(), Vec::new()), &mut out);
    out
}
