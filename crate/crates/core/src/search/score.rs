use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grad::kernels;
use crate::length::{neural_segment_log_prob, BlankAlignment, LengthInputs, LengthModelKind, StaticLengthTable};
use crate::model::{EncoderOutput, SegmentalModel, Segmentation, WindowMode};

use super::config::SearchConfig;

/// A complete decoded or scored sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub labels: Vec<usize>,
    pub boundaries: Vec<usize>,
    pub label_scores: Vec<f64>,
    /// Unscaled `log p(t_s | ...)` per segment.
    pub length_scores: Vec<f64>,
    pub eos_score: Option<f64>,
    /// `Σ_s α·log p(t_s) + log p(a_s)` (plus EOS for global models).
    pub score: f64,
    /// `score` after length normalization.
    pub decision: f64,
}

/// One segment's contribution to the decision rule.
#[inline]
pub fn segment_term(alpha: f64, length: f64, label: f64) -> f64 {
    alpha * length + label
}

/// Divides by the number of scored outputs when `gamma = 1`.
#[inline]
pub fn normalize(score: f64, count: usize, gamma: u8) -> f64 {
    if gamma == 1 && count > 0 {
        score / count as f64
    } else {
        score
    }
}

/// Best first: higher decision score, then lexicographically smaller labels and boundaries.
pub fn rank(
    a_score: f64,
    a_labels: &[usize],
    a_bounds: &[usize],
    b_score: f64,
    b_labels: &[usize],
    b_bounds: &[usize],
) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_labels.cmp(b_labels)).then_with(|| a_bounds.cmp(b_bounds))
}

/// Per-sequence scoring context shared by all decoders.
pub struct SearchContext<'a> {
    pub model: &'a SegmentalModel,
    pub enc: &'a EncoderOutput,
    pub cfg: SearchConfig,
    pub(crate) len_inputs: Option<LengthInputs>,
    pub(crate) table: Option<StaticLengthTable>,
    pub(crate) labels: Vec<usize>,
}

impl<'a> SearchContext<'a> {
    pub fn new(model: &'a SegmentalModel, enc: &'a EncoderOutput, cfg: SearchConfig) -> Result<Self> {
        cfg.validate()?;
        let global = model.config.window_mode == WindowMode::Global;
        let len_inputs = match cfg.length_model {
            LengthModelKind::Neural if !global => Some(model.length_inputs(enc)?),
            _ => None,
        };
        let table = match cfg.length_model {
            LengthModelKind::Static if !global => {
                let t = model
                    .static_length
                    .as_ref()
                    .ok_or_else(|| Error::Config("model has no static length table".into()))?;
                // One δ_max for the table support and the search.
                Some(StaticLengthTable::from_means(t.mu().to_vec(), cfg.delta_max)?)
            }
            _ => None,
        };
        Ok(SearchContext { model, enc, cfg, len_inputs, table, labels: model.config.emittable_labels() })
    }

    pub fn frames(&self) -> usize {
        self.enc.frames()
    }

    pub fn emittable(&self) -> &[usize] {
        &self.labels
    }

    /// Static length term for label `a` and duration `dt`.
    pub(crate) fn static_term(&self, a: usize, dt: usize) -> f64 {
        self.table.as_ref().expect("static table").log_prob(a, dt)
    }

    /// Length symbol fed after a boundary with label `a` (`None` at the start).
    pub(crate) fn length_symbol(&self, last: Option<usize>) -> usize {
        last.unwrap_or(self.model.config.length_bos())
    }

    /// Decision score of a given alignment under the same rule the decoders use.
    pub fn score_sequence(&self, labels: &[usize], seg: &Segmentation) -> Result<Hypothesis> {
        let m = self.model;
        let seq = m.seq_log_prob(labels, seg, self.enc)?;
        if m.config.window_mode == WindowMode::Global {
            let score = seq.total;
            return Ok(Hypothesis {
                labels: labels.to_vec(),
                boundaries: seg.bounds().to_vec(),
                length_scores: vec![0.0; labels.len()],
                label_scores: seq.per_label,
                eos_score: seq.eos,
                score,
                decision: normalize(score, labels.len() + 1, self.cfg.gamma),
            });
        }
        let windows: Vec<(usize, usize)> = seg.windows().collect();
        let too_long = windows.iter().any(|&(lo, hi)| hi + 1 - lo > self.cfg.delta_max);
        let length_scores: Vec<f64> = match self.cfg.length_model {
            LengthModelKind::None => vec![0.0; labels.len()],
            LengthModelKind::Static => {
                labels.iter().zip(seg.lengths()).map(|(&a, dt)| self.static_term(a, dt)).collect()
            }
            LengthModelKind::Neural => {
                let omega = BlankAlignment::encode(labels, seg)?;
                let logits = m.neural_logits(self.enc, &omega)?;
                windows.iter().map(|&(lo, hi)| neural_segment_log_prob(lo - 1, hi, &logits)).collect()
            }
        };
        let score = if too_long {
            f64::NEG_INFINITY
        } else {
            let mut s = 0.0;
            for (&l, &lab) in length_scores.iter().zip(&seq.per_label) {
                s += segment_term(self.cfg.alpha, l, lab);
            }
            s
        };
        Ok(Hypothesis {
            labels: labels.to_vec(),
            boundaries: seg.bounds().to_vec(),
            label_scores: seq.per_label,
            length_scores,
            eos_score: None,
            score,
            decision: normalize(score, labels.len(), self.cfg.gamma),
        })
    }
}

/// `log(1 - q)` and `log q` from an end logit.
#[inline]
pub(crate) fn end_logs(z: f64) -> (f64, f64) {
    (kernels::log_one_minus_sigmoid(z), kernels::log_sigmoid(z))
}
