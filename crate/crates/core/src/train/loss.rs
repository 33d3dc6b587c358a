use serde::{Deserialize, Serialize};

use crate::data::Utterance;
use crate::error::{Error, Result};
use crate::grad::{Tape, Var};
use crate::length::BlankAlignment;
use crate::model::SegmentalModel;

/// Summed losses of one or more sequences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// `Σ_s -log p(a_s | ...)` (plus EOS for global models).
    pub label: f64,
    /// Framewise binary cross-entropy of the neural length model.
    pub length: f64,
    /// Scored outputs: labels, plus one EOS per sequence for global models.
    pub outputs: usize,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.label + self.length
    }

    pub fn add(&mut self, other: &LossBreakdown) {
        self.label += other.label;
        self.length += other.length;
        self.outputs += other.outputs;
    }

    /// Losses divided by the number of scored outputs.
    pub fn per_output(&self) -> (f64, f64, f64) {
        let n = self.outputs.max(1) as f64;
        (self.total() / n, self.label / n, self.length / n)
    }
}

/// Records the training loss of `utt` on `tape`; returns the scalar loss node.
pub fn sequence_loss(
    model: &SegmentalModel,
    tape: &mut Tape,
    utt: &Utterance,
    with_length: bool,
) -> Result<(Var, LossBreakdown)> {
    let h = model.encode_tape(tape, &utt.features)?;
    let frames = tape.shape(h)[0];
    if frames != utt.frames() {
        return Err(Error::InvalidSegmentation(format!(
            "utterance {} is aligned to {} frames but encodes to {frames}",
            utt.id(),
            utt.frames()
        )));
    }
    let nll = model.label_nll_tape(tape, h, &utt.labels, &utt.segmentation)?;
    let label_total = tape.sum(&nll)?;
    let mut breakdown = LossBreakdown { label: tape.scalar(label_total), length: 0.0, outputs: nll.len() };
    let loss = if with_length {
        let omega = BlankAlignment::encode(&utt.labels, &utt.segmentation)?;
        let length = model.length_loss_tape(tape, h, &omega)?;
        breakdown.length = tape.scalar(length);
        tape.sum(&[label_total, length])?
    } else {
        label_total
    };
    Ok((loss, breakdown))
}

/// Loss without gradients.
pub fn loss(model: &SegmentalModel, utt: &Utterance, with_length: bool) -> Result<LossBreakdown> {
    let mut tape = Tape::new(&model.params);
    Ok(sequence_loss(model, &mut tape, utt, with_length)?.1)
}

/// Loss and per-parameter gradients (indexed by `ParamId`).
pub fn loss_and_grads(
    model: &SegmentalModel,
    utt: &Utterance,
    with_length: bool,
) -> Result<(LossBreakdown, Vec<Option<Vec<f64>>>)> {
    let mut tape = Tape::new(&model.params);
    let (out, breakdown) = sequence_loss(model, &mut tape, utt, with_length)?;
    let grads = tape.backward(out).into_param_grads();
    Ok((breakdown, grads))
}
