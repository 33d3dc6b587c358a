use crate::data::FeatureSequence;
use crate::error::{Error, Result};
use crate::grad::{kernels, Tape, Var};
use crate::tensor::Tensor;

use super::net::SegmentalModel;

/// Encoder states `h[T, 2 enc_dim]` plus the attention key projection `h W_h + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    h: Vec<f64>,
    keys: Vec<f64>,
    frames: usize,
    dim: usize,
    input_frames: usize,
}

impl EncoderOutput {
    /// Downsampled length `T`.
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn input_frames(&self) -> usize {
        self.input_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Row `t` (1-based).
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.h[(t - 1) * self.dim..t * self.dim]
    }

    pub(crate) fn keys(&self) -> &[f64] {
        &self.keys
    }
}

impl SegmentalModel {
    fn check_input(&self, x: &FeatureSequence) -> Result<()> {
        if x.dim() != self.config.input_dim {
            return Err(Error::shape("encoder input", &[x.dim()], &[self.config.input_dim]));
        }
        let required = self.config.total_pool();
        if x.frames() < required {
            return Err(Error::TooShortInput { frames: x.frames(), required });
        }
        Ok(())
    }

    pub fn encode(&self, x: &FeatureSequence) -> Result<EncoderOutput> {
        self.check_input(x)?;
        let d = self.config.enc_dim;
        let p = &self.params;
        let mut rows = x.frames();
        let mut cur = x.values().to_vec();
        for (l, layer) in self.ids.enc.iter().enumerate() {
            let run = |ids: &super::net::LstmIds, reverse| {
                kernels::lstm_sequence(&cur, rows, p.value(ids.wx), p.value(ids.wh), p.value(ids.b), d, reverse).0
            };
            let fw = run(&layer.fw, false);
            let bw = run(&layer.bw, true);
            let mut next = Vec::with_capacity(rows * 2 * d);
            for r in 0..rows {
                next.extend_from_slice(&fw[r * d..(r + 1) * d]);
                next.extend_from_slice(&bw[r * d..(r + 1) * d]);
            }
            cur = next;
            if let Some(&k) = self.config.pool_factors.get(l) {
                cur = kernels::max_pool_rows(&cur, rows, 2 * d, k).0;
                rows /= k;
            }
        }
        let keys =
            kernels::affine(&cur, rows, p.value(self.ids.att_wh), Some(p.value(self.ids.att_b)), self.config.att_dim);
        Ok(EncoderOutput { h: cur, keys, frames: rows, dim: 2 * d, input_frames: x.frames() })
    }

    /// Tape version of [`encode`](Self::encode); returns `h[T, 2 enc_dim]`.
    pub fn encode_tape(&self, tape: &mut Tape, x: &FeatureSequence) -> Result<Var> {
        self.check_input(x)?;
        let mut cur = tape.constant(Tensor::matrix(x.frames(), x.dim(), x.values().to_vec())?);
        for (l, layer) in self.ids.enc.iter().enumerate() {
            let mut run = |ids: &super::net::LstmIds, reverse| -> Result<Var> {
                let (wx, wh, b) = (tape.param(ids.wx), tape.param(ids.wh), tape.param(ids.b));
                tape.lstm_sequence(cur, wx, wh, b, reverse)
            };
            let fw = run(&layer.fw, false)?;
            let bw = run(&layer.bw, true)?;
            cur = tape.concat_cols(fw, bw)?;
            if let Some(&k) = self.config.pool_factors.get(l) {
                cur = tape.max_pool_time(cur, k)?;
            }
        }
        Ok(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn tiny() -> ModelConfig {
        ModelConfig {
            input_dim: 3,
            enc_dim: 4,
            dec_dim: 4,
            att_dim: 4,
            readout_dim: 4,
            len_dim: 4,
            vocab_size: 3,
            ..ModelConfig::default()
        }
    }

    fn features(frames: usize, dim: usize) -> FeatureSequence {
        let values = (0..frames * dim).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        FeatureSequence::new("x", dim, values).unwrap()
    }

    #[test]
    fn output_length_is_floor_divided_per_pool() {
        let m = SegmentalModel::new(tiny(), 0).unwrap();
        assert_eq!(m.encode(&features(12, 3)).unwrap().frames(), 2);
        assert_eq!(m.encode(&features(13, 3)).unwrap().frames(), 2);
        assert_eq!(m.encode(&features(17, 3)).unwrap().frames(), 2);
        assert_eq!(m.encode(&features(18, 3)).unwrap().frames(), 3);
    }

    #[test]
    fn too_short_input_is_rejected() {
        let m = SegmentalModel::new(tiny(), 0).unwrap();
        assert!(matches!(m.encode(&features(5, 3)), Err(Error::TooShortInput { frames: 5, required: 6 })));
    }

    #[test]
    fn zero_weights_give_zero_states() {
        let m = SegmentalModel::zeros(tiny()).unwrap();
        let enc = m.encode(&features(12, 3)).unwrap();
        assert_eq!(enc.h().len(), 2 * 8);
        assert!(enc.h().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tape_and_inference_agree_bitwise() {
        let m = SegmentalModel::new(tiny(), 3).unwrap();
        let x = features(20, 3);
        let enc = m.encode(&x).unwrap();
        let mut tape = Tape::new(&m.params);
        let h = m.encode_tape(&mut tape, &x).unwrap();
        assert_eq!(tape.value(h), enc.h());
        assert_eq!(tape.shape(h), &[3, 8]);
    }
}
