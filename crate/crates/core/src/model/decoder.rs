use crate::error::{Error, Result};
use crate::grad::{kernels, Tape, Var};

use super::config::WindowMode;
use super::encoder::EncoderOutput;
use super::net::SegmentalModel;
use super::segmentation::Segmentation;

/// Recurrent label-model state before step `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub lstm_h: Vec<f64>,
    pub lstm_c: Vec<f64>,
    /// `c_{s-1}`; all zeros when the model has no context dependency.
    pub prev_context: Vec<f64>,
    /// `a_{s-1}`, begin-of-sequence for the first step.
    pub prev_label: usize,
}

/// Decoder LSTM output for one step and the projections that do not depend on the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub lstm_h: Vec<f64>,
    pub lstm_c: Vec<f64>,
    query: Vec<f64>,
    readout_partial: Vec<f64>,
}

/// Result of one label step: the query and the attention context it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub query: Query,
    pub context: Vec<f64>,
    /// Attention weights over the window only.
    pub weights: Vec<f64>,
}

/// Per-label log probabilities of a teacher-forced pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqScore {
    pub per_label: Vec<f64>,
    /// End-of-sequence term (global attention only).
    pub eos: Option<f64>,
    pub total: f64,
}

impl SegmentalModel {
    pub fn initial_state(&self) -> DecoderState {
        let c = &self.config;
        DecoderState {
            lstm_h: vec![0.0; c.dec_dim],
            lstm_c: vec![0.0; c.dec_dim],
            prev_context: vec![0.0; c.enc_out_dim()],
            prev_label: c.bos(),
        }
    }

    fn check_label(&self, label: usize, bound: usize) -> Result<()> {
        if label >= bound {
            return Err(Error::LabelOutOfRange { label, vocab: bound });
        }
        Ok(())
    }

    /// Advances the decoder LSTM on `(embed(a_{s-1}), c_{s-1})`.
    pub fn query(&self, state: &DecoderState) -> Result<Query> {
        let c = &self.config;
        self.check_label(state.prev_label, c.vocab_size + 1)?;
        let p = &self.params;
        let emb = p.value(self.ids.dec_emb);
        let mut x = emb[state.prev_label * c.dec_dim..(state.prev_label + 1) * c.dec_dim].to_vec();
        if c.ctx_dependency {
            x.extend_from_slice(&state.prev_context);
        } else {
            x.resize(c.dec_dim + c.enc_out_dim(), 0.0);
        }
        let lstm = self.ids.dec_lstm;
        let mut xw = vec![0.0; 4 * c.dec_dim];
        kernels::affine_row(&x, p.value(lstm.wx), Some(p.value(lstm.b)), &mut xw);
        let (h, cell, _) = kernels::lstm_cell(&xw, &state.lstm_h, &state.lstm_c, p.value(lstm.wh));
        let mut query = vec![0.0; c.att_dim];
        kernels::affine_row(&h, p.value(self.ids.att_ws), None, &mut query);
        // The readout's first layer acts on [h; context]; accumulate the h part now
        // and finish it per window.
        let w1 = p.value(self.ids.ro_w1);
        let mut readout_partial = vec![0.0; 2 * c.readout_dim];
        kernels::affine_row(
            &h,
            &w1[..c.dec_dim * 2 * c.readout_dim],
            Some(p.value(self.ids.ro_b1)),
            &mut readout_partial,
        );
        Ok(Query { lstm_h: h, lstm_c: cell, query, readout_partial })
    }

    /// Attention energy of frame `t` (1-based).
    pub fn energy(&self, q: &Query, enc: &EncoderOutput, t: usize) -> f64 {
        kernels::attention_energies(enc.keys(), &q.query, self.params.value(self.ids.att_v), t - 1, t)[0]
    }

    fn check_window(&self, enc: &EncoderOutput, lo: usize, hi: usize) -> Result<()> {
        if lo < 1 || lo > hi || hi > enc.frames() {
            return Err(Error::InvalidWindow { lo, hi, len: enc.frames() });
        }
        Ok(())
    }

    /// Context and window-restricted weights from energies of frames `lo..=hi`.
    pub fn context_from_energies(&self, enc: &EncoderOutput, energies: &[f64], lo: usize) -> (Vec<f64>, Vec<f64>) {
        let alpha = kernels::softmax(energies);
        let ctx = kernels::weighted_rows(&alpha, enc.h(), enc.dim(), lo - 1);
        (ctx, alpha)
    }

    /// Attention over the 1-based inclusive window `[lo, hi]` for an already advanced query.
    pub fn attend_query(
        &self,
        q: &Query,
        enc: &EncoderOutput,
        (lo, hi): (usize, usize),
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_window(enc, lo, hi)?;
        let e = kernels::attention_energies(enc.keys(), &q.query, self.params.value(self.ids.att_v), lo - 1, hi);
        Ok(self.context_from_energies(enc, &e, lo))
    }

    /// Context and attention weights over all `T` frames (zero outside the window).
    pub fn attend(
        &self,
        state: &DecoderState,
        enc: &EncoderOutput,
        window: (usize, usize),
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let q = self.query(state)?;
        let (ctx, alpha) = self.attend_query(&q, enc, window)?;
        let mut weights = vec![0.0; enc.frames()];
        weights[window.0 - 1..window.1].copy_from_slice(&alpha);
        Ok((ctx, weights))
    }

    /// Log distribution over the vocabulary given a query and its context.
    pub fn label_log_probs(&self, q: &Query, ctx: &[f64]) -> Vec<f64> {
        let c = &self.config;
        let p = &self.params;
        let w1 = p.value(self.ids.ro_w1);
        let mut r = q.readout_partial.clone();
        let tail = &w1[c.dec_dim * 2 * c.readout_dim..];
        for (i, &x) in ctx.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = &tail[i * 2 * c.readout_dim..(i + 1) * 2 * c.readout_dim];
            for (o, &w) in r.iter_mut().zip(row) {
                *o += x * w;
            }
        }
        let (m, _) = kernels::maxout(&r);
        let mut logits = vec![0.0; c.vocab_size];
        kernels::affine_row(&m, p.value(self.ids.ro_w2), Some(p.value(self.ids.ro_b2)), &mut logits);
        kernels::log_softmax(&logits)
    }

    /// `p(a_s | ...)` over the window; `a_{s-1}` is `state.prev_label`.
    pub fn label_step(
        &self,
        state: &DecoderState,
        enc: &EncoderOutput,
        window: (usize, usize),
    ) -> Result<(Vec<f64>, Step)> {
        let query = self.query(state)?;
        let (context, weights) = self.attend_query(&query, enc, window)?;
        let probs = self.label_log_probs(&query, &context).into_iter().map(f64::exp).collect();
        Ok((probs, Step { query, context, weights }))
    }

    /// State for the next step after emitting `label`.
    pub fn next_state(&self, q: &Query, ctx: &[f64], label: usize) -> DecoderState {
        let prev_context = if self.config.ctx_dependency { ctx.to_vec() } else { vec![0.0; ctx.len()] };
        DecoderState { lstm_h: q.lstm_h.clone(), lstm_c: q.lstm_c.clone(), prev_context, prev_label: label }
    }

    /// Attention windows for the given segmentation under the model's window mode.
    pub fn label_windows(&self, seg: &Segmentation) -> Vec<(usize, usize)> {
        match self.config.window_mode {
            WindowMode::Segmental => seg.windows().collect(),
            WindowMode::Global => vec![(1, seg.frames()); seg.len()],
        }
    }

    fn check_alignment(&self, labels: &[usize], seg: &Segmentation, enc: &EncoderOutput) -> Result<()> {
        if labels.len() != seg.len() {
            return Err(Error::InvalidSegmentation(format!("{} labels for {} segments", labels.len(), seg.len())));
        }
        if seg.frames() != enc.frames() {
            return Err(Error::InvalidSegmentation(format!(
                "segmentation ends at {} but the encoder produced {} frames",
                seg.frames(),
                enc.frames()
            )));
        }
        labels.iter().try_for_each(|&a| self.check_label(a, self.config.vocab_size))
    }

    /// Teacher-forced `log p(a_s | ...)` for every label. Global models also score EOS over `[1, T]`.
    pub fn seq_log_prob(&self, labels: &[usize], seg: &Segmentation, enc: &EncoderOutput) -> Result<SeqScore> {
        self.check_alignment(labels, seg, enc)?;
        let mut state = self.initial_state();
        let mut per_label = Vec::with_capacity(labels.len());
        for (&a, window) in labels.iter().zip(self.label_windows(seg)) {
            let q = self.query(&state)?;
            let (ctx, _) = self.attend_query(&q, enc, window)?;
            per_label.push(self.label_log_probs(&q, &ctx)[a]);
            state = self.next_state(&q, &ctx, a);
        }
        let eos = match (self.config.window_mode, self.config.eos_label) {
            (WindowMode::Global, Some(eos)) => {
                let q = self.query(&state)?;
                let (ctx, _) = self.attend_query(&q, enc, (1, enc.frames()))?;
                Some(self.label_log_probs(&q, &ctx)[eos])
            }
            _ => None,
        };
        let total = per_label.iter().sum::<f64>() + eos.unwrap_or(0.0);
        Ok(SeqScore { per_label, eos, total })
    }

    /// Tape version of the teacher-forced label pass. Returns one `-log p` node per
    /// label, plus the EOS term for global models.
    pub fn label_nll_tape(&self, tape: &mut Tape, h: Var, labels: &[usize], seg: &Segmentation) -> Result<Vec<Var>> {
        let c = &self.config;
        let ids = &self.ids;
        let frames = tape.shape(h)[0];
        if labels.len() != seg.len() || seg.frames() != frames {
            return Err(Error::InvalidSegmentation(format!(
                "{} labels / {} segments ending at {} for {frames} encoder frames",
                labels.len(),
                seg.len(),
                seg.frames()
            )));
        }
        let (wh, ab) = (tape.param(ids.att_wh), tape.param(ids.att_b));
        let keys = tape.linear(h, wh, Some(ab))?;
        let (emb, ws, v) = (tape.param(ids.dec_emb), tape.param(ids.att_ws), tape.param(ids.att_v));
        let (lwx, lwh, lb) = (tape.param(ids.dec_lstm.wx), tape.param(ids.dec_lstm.wh), tape.param(ids.dec_lstm.b));
        let (w1, b1, w2, b2) =
            (tape.param(ids.ro_w1), tape.param(ids.ro_b1), tape.param(ids.ro_w2), tape.param(ids.ro_b2));
        let zero_ctx = tape.vector(vec![0.0; c.enc_out_dim()]);
        let mut hc = tape.vector(vec![0.0; 2 * c.dec_dim]);
        let mut prev_ctx = zero_ctx;
        let mut prev_label = c.bos();

        let mut steps: Vec<(usize, (usize, usize))> = labels.iter().copied().zip(self.label_windows(seg)).collect();
        if c.window_mode == WindowMode::Global {
            if let Some(eos) = c.eos_label {
                steps.push((eos, (1, frames)));
            }
        }
        let mut out = Vec::with_capacity(steps.len());
        for (a, (lo, hi)) in steps {
            self.check_label(a, c.vocab_size)?;
            let e = tape.embed(emb, &[prev_label])?;
            let ctx_in = if c.ctx_dependency { prev_ctx } else { zero_ctx };
            let x = tape.concat(&[e, ctx_in])?;
            hc = tape.lstm_step(x, hc, lwx, lwh, lb)?;
            let s = tape.slice(hc, 0, c.dec_dim)?;
            let query = tape.linear(s, ws, None)?;
            let energies = tape.attention_energy(keys, query, v, lo - 1, hi)?;
            let alpha = tape.softmax(energies, None)?;
            let ctx = tape.weighted_rows(alpha, h, lo - 1)?;
            let r_in = tape.concat(&[s, ctx])?;
            let r = tape.linear(r_in, w1, Some(b1))?;
            let m = tape.maxout(r)?;
            let logits = tape.linear(m, w2, Some(b2))?;
            out.push(tape.nll_of_logits(logits, a)?);
            prev_ctx = ctx;
            prev_label = a;
        }
        Ok(out)
    }
}
