use crate::error::{Error, Result};
use crate::grad::{kernels, Tape, Var};
use crate::model::{EncoderOutput, LengthIds, SegmentalModel};

use super::omega::BlankAlignment;

/// Per-frame encoder contribution `b + h_t W_x[h]` to the length LSTM input, `[T, 4 len_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthInputs {
    partial: Vec<f64>,
    frames: usize,
}

impl LengthInputs {
    pub fn frames(&self) -> usize {
        self.frames
    }
}

/// Length LSTM state after consuming frames `1..=t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

/// `log p(t_s = t | t_{s-1} = prev)` from end logits (`logits[t' - 1]` belongs to frame `t'`).
pub fn neural_segment_log_prob(prev: usize, t: usize, logits: &[f64]) -> f64 {
    if t <= prev || t > logits.len() {
        return f64::NEG_INFINITY;
    }
    let mut s = 0.0;
    for &z in &logits[prev..t - 1] {
        s += kernels::log_one_minus_sigmoid(z);
    }
    s + kernels::log_sigmoid(logits[t - 1])
}

impl SegmentalModel {
    pub fn length_ids(&self) -> Result<LengthIds> {
        self.ids.len.ok_or_else(|| Error::Config("model has no neural length model".into()))
    }

    pub fn length_inputs(&self, enc: &EncoderOutput) -> Result<LengthInputs> {
        let ids = self.length_ids()?;
        let d4 = 4 * self.config.len_dim;
        let wx = self.params.value(ids.lstm.wx);
        let partial =
            kernels::affine(enc.h(), enc.frames(), &wx[..enc.dim() * d4], Some(self.params.value(ids.lstm.b)), d4);
        Ok(LengthInputs { partial, frames: enc.frames() })
    }

    pub fn length_initial_state(&self) -> LengthState {
        let d = self.config.len_dim;
        LengthState { h: vec![0.0; d], c: vec![0.0; d] }
    }

    /// Consumes frame `t` (1-based) with input symbol `ω_{t-1}`; returns the new state
    /// and the logit of `q_t`.
    pub fn length_step(
        &self,
        inputs: &LengthInputs,
        state: &LengthState,
        t: usize,
        prev_symbol: usize,
    ) -> (LengthState, f64) {
        let ids = self.ids.len.expect("length_inputs checked the length model");
        let d = self.config.len_dim;
        let p = &self.params;
        let mut xw = inputs.partial[(t - 1) * 4 * d..t * 4 * d].to_vec();
        let e2 = self.config.enc_out_dim();
        let tail = &p.value(ids.lstm.wx)[e2 * 4 * d..];
        let emb = &p.value(ids.emb)[prev_symbol * d..(prev_symbol + 1) * d];
        for (i, &x) in emb.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (o, &w) in xw.iter_mut().zip(&tail[i * 4 * d..(i + 1) * 4 * d]) {
                *o += x * w;
            }
        }
        let (h, c, _) = kernels::lstm_cell(&xw, &state.h, &state.c, p.value(ids.lstm.wh));
        let act: Vec<f64> = h.iter().map(|v| v.tanh()).collect();
        let mut z = [0.0];
        kernels::affine_row(&act, p.value(ids.out_w), Some(p.value(ids.out_b)), &mut z);
        (LengthState { h, c }, z[0])
    }

    /// Teacher-forced end logits for every frame of `omega`.
    pub fn neural_logits(&self, enc: &EncoderOutput, omega: &BlankAlignment) -> Result<Vec<f64>> {
        let inputs = self.length_inputs(enc)?;
        if omega.frames() != enc.frames() {
            return Err(Error::InvalidSegmentation(format!(
                "alignment has {} frames, encoder {}",
                omega.frames(),
                enc.frames()
            )));
        }
        let ids = omega.input_ids(self.config.blank(), self.config.length_bos());
        let mut state = self.length_initial_state();
        let mut logits = Vec::with_capacity(ids.len());
        for (t, &sym) in ids.iter().enumerate() {
            let (next, z) = self.length_step(&inputs, &state, t + 1, sym);
            logits.push(z);
            state = next;
        }
        Ok(logits)
    }

    /// `q_t` for every frame of `omega`.
    pub fn neural_q(&self, enc: &EncoderOutput, omega: &BlankAlignment) -> Result<Vec<f64>> {
        Ok(self.neural_logits(enc, omega)?.into_iter().map(kernels::sigmoid).collect())
    }

    /// Framewise binary cross-entropy of the length model against the boundaries of `omega`.
    pub fn length_loss_tape(&self, tape: &mut Tape, h: Var, omega: &BlankAlignment) -> Result<Var> {
        let ids = self.length_ids()?;
        if tape.shape(h)[0] != omega.frames() {
            return Err(Error::InvalidSegmentation(format!(
                "alignment has {} frames, encoder {}",
                omega.frames(),
                tape.shape(h)[0]
            )));
        }
        let sym = omega.input_ids(self.config.blank(), self.config.length_bos());
        let emb = tape.param(ids.emb);
        let e = tape.embed_rows(emb, &sym)?;
        let x = tape.concat_cols(h, e)?;
        let (wx, wh, b) = (tape.param(ids.lstm.wx), tape.param(ids.lstm.wh), tape.param(ids.lstm.b));
        let hs = tape.lstm_sequence(x, wx, wh, b, false)?;
        let act = tape.tanh(hs);
        let (ow, ob) = (tape.param(ids.out_w), tape.param(ids.out_b));
        let z = tape.linear(act, ow, Some(ob))?;
        tape.bce_with_logits(z, &omega.end_targets())
    }
}
