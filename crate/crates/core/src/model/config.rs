use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Attention over all encoder frames at every output step.
    Global,
    /// Attention restricted to the current segment `[t_{s-1}+1, t_s]`.
    Segmental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SilenceVariant {
    /// Silence is not a label; its frames are absorbed by neighbouring segments.
    None,
    /// Silence is a label with one segment per silence span.
    NoSplit,
    /// Like `NoSplit`, but spans longer than `delta_max` are cut into pieces.
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub enc_layers: usize,
    /// Hidden size per direction.
    pub enc_dim: usize,
    /// Max-pool factor applied after encoder layer `i`.
    pub pool_factors: Vec<usize>,
    pub dec_dim: usize,
    /// Size of the output softmax, including silence and end-of-sequence when present.
    pub vocab_size: usize,
    pub att_dim: usize,
    /// Maxout output size of the readout.
    pub readout_dim: usize,
    pub window_mode: WindowMode,
    /// Feed the previous attention context into the decoder LSTM.
    pub ctx_dependency: bool,
    pub silence_variant: SilenceVariant,
    pub silence_label: Option<usize>,
    pub eos_label: Option<usize>,
    /// Whether the model carries a neural length model.
    pub neural_length: bool,
    pub len_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 16,
            enc_layers: 2,
            enc_dim: 64,
            pool_factors: vec![2, 3],
            dec_dim: 64,
            vocab_size: 8,
            att_dim: 64,
            readout_dim: 64,
            window_mode: WindowMode::Segmental,
            ctx_dependency: true,
            silence_variant: SilenceVariant::None,
            silence_label: None,
            eos_label: None,
            neural_length: true,
            len_dim: 64,
        }
    }
}

impl ModelConfig {
    pub fn total_pool(&self) -> usize {
        self.pool_factors.iter().product()
    }

    /// Width of the encoder output (both directions).
    pub fn enc_out_dim(&self) -> usize {
        2 * self.enc_dim
    }

    /// Decoder input symbol for the first step.
    pub fn bos(&self) -> usize {
        self.vocab_size
    }

    /// Length-model input symbols: labels, then blank, then begin-of-sequence.
    pub fn blank(&self) -> usize {
        self.vocab_size
    }

    pub fn length_bos(&self) -> usize {
        self.vocab_size + 1
    }

    /// Labels a decoder may emit as segment labels (everything but EOS).
    pub fn emittable_labels(&self) -> Vec<usize> {
        (0..self.vocab_size).filter(|&a| Some(a) != self.eos_label).collect()
    }

    /// Downsampled length for `frames` input frames (floor division per pool layer).
    pub fn downsampled_len(&self, frames: usize) -> usize {
        self.pool_factors.iter().fold(frames, |t, &k| t / k)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.vocab_size < 2 {
            return fail(format!("vocab_size must be at least 2, got {}", self.vocab_size));
        }
        if self.enc_layers == 0 || self.pool_factors.len() > self.enc_layers {
            return fail(format!("{} pool factors for {} encoder layers", self.pool_factors.len(), self.enc_layers));
        }
        if self.pool_factors.contains(&0) {
            return fail("pool factors must be positive".into());
        }
        for (name, v) in [
            ("input_dim", self.input_dim),
            ("enc_dim", self.enc_dim),
            ("dec_dim", self.dec_dim),
            ("att_dim", self.att_dim),
            ("readout_dim", self.readout_dim),
            ("len_dim", self.len_dim),
        ] {
            if v == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        for (name, label) in [("eos_label", self.eos_label), ("silence_label", self.silence_label)] {
            if let Some(a) = label {
                if a >= self.vocab_size {
                    return fail(format!("{name} {a} outside vocabulary of size {}", self.vocab_size));
                }
            }
        }
        if self.window_mode == WindowMode::Global && self.eos_label.is_none() {
            return fail("global attention models need an eos_label".into());
        }
        if self.eos_label.is_some() && self.eos_label == self.silence_label {
            return fail("eos_label and silence_label coincide".into());
        }
        Ok(())
    }
}
