use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Segmentation;

use super::features::FeatureSequence;

/// One sequence with its ground-truth alignment at the downsampled resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub features: FeatureSequence,
    pub labels: Vec<usize>,
    pub segmentation: Segmentation,
}

impl Utterance {
    pub fn new(features: FeatureSequence, labels: Vec<usize>, segmentation: Segmentation) -> Result<Self> {
        if labels.len() != segmentation.len() {
            return Err(Error::InvalidSegmentation(format!(
                "utterance {}: {} labels for {} segments",
                features.id,
                labels.len(),
                segmentation.len()
            )));
        }
        Ok(Utterance { features, labels, segmentation })
    }

    pub fn id(&self) -> &str {
        &self.features.id
    }

    /// Downsampled length `T`.
    pub fn frames(&self) -> usize {
        self.segmentation.frames()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Eval,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Eval];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Eval => "eval",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::Config(format!("unknown split '{s}'")))
    }
}

/// Train/dev/eval utterances in base form: silence spans are segments labelled
/// `silence_label()`, one segment per span.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// Number of non-silence labels.
    pub vocab_size: usize,
    /// Raw frames per downsampled frame.
    pub frames_per_step: usize,
    pub train: Vec<Utterance>,
    pub dev: Vec<Utterance>,
    pub eval: Vec<Utterance>,
}

impl Corpus {
    pub fn silence_label(&self) -> usize {
        self.vocab_size
    }

    pub fn split(&self, s: Split) -> &[Utterance] {
        match s {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Eval => &self.eval,
        }
    }

    pub fn split_mut(&mut self, s: Split) -> &mut Vec<Utterance> {
        match s {
            Split::Train => &mut self.train,
            Split::Dev => &mut self.dev,
            Split::Eval => &mut self.eval,
        }
    }
}
