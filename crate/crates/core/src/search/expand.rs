use crate::error::Result;
use crate::length::{LengthModelKind, LengthState};
use crate::model::{DecoderState, Query};

use super::score::{end_logs, SearchContext};

/// Everything needed to close the segment that starts after frame `t0`, for
/// any end frame up to `t0 + δ_max`. Built once per segment-ended hypothesis.
pub(crate) struct SegmentExpander {
    pub t0: usize,
    pub query: Query,
    energies: Vec<f64>,
    /// Neural `log p(t_s = t0 + k)` at index `k - 1`.
    len_end: Vec<f64>,
    len_states: Vec<LengthState>,
}

impl SegmentExpander {
    pub fn new(
        cx: &SearchContext,
        state: &DecoderState,
        len_state: Option<&LengthState>,
        last_label: Option<usize>,
        t0: usize,
    ) -> Result<Self> {
        let m = cx.model;
        let t_max = (t0 + cx.cfg.delta_max).min(cx.frames());
        let query = m.query(state)?;
        let energies = (t0 + 1..=t_max).map(|t| m.energy(&query, cx.enc, t)).collect();
        let mut len_end = Vec::new();
        let mut len_states = Vec::new();
        if cx.cfg.length_model == LengthModelKind::Neural {
            let inputs = cx.len_inputs.as_ref().expect("neural inputs");
            let mut st = len_state.cloned().unwrap_or_else(|| m.length_initial_state());
            let mut sym = cx.length_symbol(last_label);
            let mut cum = 0.0;
            for t in t0 + 1..=t_max {
                let (next, z) = m.length_step(inputs, &st, t, sym);
                let (not_end, end) = end_logs(z);
                len_end.push(cum + end);
                cum += not_end;
                st = next;
                len_states.push(st.clone());
                sym = m.config.blank();
            }
        }
        Ok(SegmentExpander { t0, query, energies, len_end, len_states })
    }

    pub fn t_max(&self) -> usize {
        self.t0 + self.energies.len()
    }

    /// Label log probabilities and attention context for the window `[t0 + 1, t]`.
    pub fn end_at(&self, cx: &SearchContext, t: usize) -> (Vec<f64>, Vec<f64>) {
        let k = t - self.t0;
        let (ctx, _) = cx.model.context_from_energies(cx.enc, &self.energies[..k], self.t0 + 1);
        (cx.model.label_log_probs(&self.query, &ctx), ctx)
    }

    /// Unscaled length term for ending the segment at `t` with label `a`.
    pub fn length_term(&self, cx: &SearchContext, a: usize, t: usize) -> f64 {
        match cx.cfg.length_model {
            LengthModelKind::None => 0.0,
            LengthModelKind::Static => cx.static_term(a, t - self.t0),
            LengthModelKind::Neural => self.len_end[t - self.t0 - 1],
        }
    }

    pub fn len_state_at(&self, t: usize) -> Option<&LengthState> {
        self.len_states.get(t - self.t0 - 1)
    }
}
