use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Segmentation;
use crate::rng::{self, Rng};

use super::corpus::{Corpus, Split, Utterance};
use super::features::FeatureSequence;

/// Parameters of the synthetic corpus. Lengths are in downsampled frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    /// Number of non-silence labels.
    pub vocab_size: usize,
    pub input_dim: usize,
    pub train_size: usize,
    pub dev_size: usize,
    pub eval_size: usize,
    pub min_labels: usize,
    pub max_labels: usize,
    /// Per-label mean segment length is drawn uniformly from this range.
    pub mean_len_range: [f64; 2],
    pub len_std: f64,
    pub max_seg_len: usize,
    /// Per-utterance speaking rate is drawn uniformly from `[1 - r, 1 + r]` and
    /// scales every mean length.
    pub tempo_range: f64,
    /// Probability of a silence span before each label and after the last one.
    pub silence_prob: f64,
    pub silence_len_mean: f64,
    pub silence_len_std: f64,
    pub silence_max_len: usize,
    /// Standard deviation of the Gaussian noise added to every raw frame.
    pub noise: f64,
    /// Scale of the random label prototypes.
    pub prototype_scale: f64,
    pub frames_per_step: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            vocab_size: 8,
            input_dim: 8,
            train_size: 500,
            dev_size: 100,
            eval_size: 100,
            min_labels: 3,
            max_labels: 7,
            mean_len_range: [2.0, 6.0],
            len_std: 0.7,
            max_seg_len: 10,
            tempo_range: 0.0,
            silence_prob: 0.0,
            silence_len_mean: 4.0,
            silence_len_std: 2.0,
            silence_max_len: 30,
            noise: 0.0,
            prototype_scale: 1.0,
            frames_per_step: 6,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("corpus: {m}")));
        if self.vocab_size < 1 || self.input_dim < 1 || self.frames_per_step < 1 {
            return fail("vocab_size, input_dim and frames_per_step must be positive");
        }
        if self.max_seg_len == 0 || self.silence_max_len == 0 {
            return fail("maximum segment lengths must be at least 1 (zero-length segments)");
        }
        if self.min_labels == 0 || self.min_labels > self.max_labels {
            return fail("need 1 <= min_labels <= max_labels");
        }
        let [lo, hi] = self.mean_len_range;
        if !(lo > 0.0 && lo <= hi) {
            return fail("mean_len_range must satisfy 0 < lo <= hi");
        }
        if !(0.0..1.0).contains(&self.tempo_range) {
            return fail("tempo_range must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.silence_prob) {
            return fail("silence_prob must be a probability");
        }
        for v in [self.len_std, self.silence_len_std, self.noise, self.prototype_scale] {
            if !(v.is_finite() && v >= 0.0) {
                return fail("standard deviations and scales must be finite and non-negative");
            }
        }
        if self.vocab_size == 1 && self.min_labels > 1 {
            return fail("a single label cannot form sequences without immediate repeats");
        }
        Ok(())
    }

    pub fn size(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_size,
            Split::Dev => self.dev_size,
            Split::Eval => self.eval_size,
        }
    }
}

/// Label prototypes (silence is the zero vector) and mean lengths, shared by all splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    spec: CorpusSpec,
    prototypes: Vec<Vec<f64>>,
    mean_len: Vec<f64>,
}

fn normal(mean: f64, std: f64) -> Normal<f64> {
    Normal::new(mean, std).expect("validated standard deviation")
}

fn sample_len(r: &mut Rng, mean: f64, std: f64, max: usize) -> usize {
    let x = normal(mean, std).sample(r).round();
    (x.max(1.0) as usize).min(max)
}

impl Generator {
    pub fn new(spec: CorpusSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut r = rng::stream(seed, "corpus.prototypes");
        let unit = normal(0.0, 1.0);
        let prototypes = (0..spec.vocab_size)
            .map(|_| (0..spec.input_dim).map(|_| spec.prototype_scale * unit.sample(&mut r)).collect())
            .collect();
        let [lo, hi] = spec.mean_len_range;
        let mean_len = (0..spec.vocab_size).map(|_| if hi > lo { r.random_range(lo..hi) } else { lo }).collect();
        Ok(Generator { spec, prototypes, mean_len })
    }

    pub fn prototypes(&self) -> &[Vec<f64>] {
        &self.prototypes
    }

    pub fn mean_len(&self) -> &[f64] {
        &self.mean_len
    }

    fn utterance(&self, r: &mut Rng, id: String) -> Result<Utterance> {
        let s = &self.spec;
        let silence = s.vocab_size;
        let n = r.random_range(s.min_labels..=s.max_labels);
        let tempo = if s.tempo_range > 0.0 { r.random_range(1.0 - s.tempo_range..1.0 + s.tempo_range) } else { 1.0 };
        let mut segments: Vec<(usize, usize)> = Vec::new();
        let silence_span = |r: &mut Rng, segments: &mut Vec<(usize, usize)>| {
            if s.silence_prob > 0.0 && r.random_bool(s.silence_prob) {
                let len = sample_len(r, s.silence_len_mean, s.silence_len_std, s.silence_max_len);
                segments.push((silence, len));
            }
        };
        let mut prev = None;
        for _ in 0..n {
            silence_span(r, &mut segments);
            let a = loop {
                let a = r.random_range(0..s.vocab_size);
                if Some(a) != prev {
                    break a;
                }
            };
            prev = Some(a);
            let len = sample_len(r, self.mean_len[a] * tempo, s.len_std, s.max_seg_len);
            segments.push((a, len));
        }
        silence_span(r, &mut segments);

        let noise = normal(0.0, 1.0);
        let mut values = Vec::new();
        for &(a, len) in &segments {
            for _ in 0..len * s.frames_per_step {
                let proto = self.prototypes.get(a);
                for k in 0..s.input_dim {
                    let base = proto.map_or(0.0, |p| p[k]);
                    values.push(base + s.noise * noise.sample(r));
                }
            }
        }
        let lengths: Vec<usize> = segments.iter().map(|x| x.1).collect();
        Utterance::new(
            FeatureSequence::new(id, s.input_dim, values)?,
            segments.iter().map(|x| x.0).collect(),
            Segmentation::from_lengths(&lengths)?,
        )
    }

    pub fn split(&self, seed: u64, split: Split) -> Result<Vec<Utterance>> {
        let mut r = rng::stream(seed, &format!("corpus.{split}"));
        (0..self.spec.size(split)).map(|i| self.utterance(&mut r, format!("{split}-{i:05}"))).collect()
    }
}

/// Generates all three splits from `seed`.
pub fn generate(spec: &CorpusSpec, seed: u64) -> Result<Corpus> {
    let g = Generator::new(spec.clone(), seed)?;
    Ok(Corpus {
        vocab_size: spec.vocab_size,
        frames_per_step: spec.frames_per_step,
        train: g.split(seed, Split::Train)?,
        dev: g.split(seed, Split::Dev)?,
        eval: g.split(seed, Split::Eval)?,
    })
}
