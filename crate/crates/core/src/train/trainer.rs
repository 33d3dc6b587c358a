use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, Split, Utterance};
use crate::error::{Error, Result};
use crate::grad::{adam_step, AdamConfig, AdamState};
use crate::length::StaticLengthTable;
use crate::model::SegmentalModel;
use crate::rng;

use super::loss::{loss, loss_and_grads, LossBreakdown};
use super::state::TrainerState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Sequences per optimizer step.
    pub batch_size: usize,
    pub seed: u64,
    /// Train the neural length model jointly.
    pub length_model: bool,
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 10, learning_rate: 1e-3, batch_size: 8, seed: 1, length_model: true, clip_norm: 5.0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.clip_norm > 0.0) {
            return Err(Error::Config("learning_rate and clip_norm must be positive".into()));
        }
        Ok(())
    }
}

/// One metrics record. Losses are per scored output (label or EOS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub split: Split,
    pub loss: LossBreakdown,
}

impl std::fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (total, label, length) = self.loss.per_output();
        write!(f, "epoch={} split={} loss={total} label_loss={label} length_loss={length}", self.epoch, self.split)
    }
}

/// Per-label mean segment lengths from the training alignments; the support
/// ends at the longest observed segment.
pub fn estimate_static_table(train: &[Utterance], num_labels: usize) -> Result<StaticLengthTable> {
    let delta_max = train.iter().map(|u| u.segmentation.max_len()).max().ok_or(Error::EmptyCorpus)?;
    StaticLengthTable::estimate(train.iter().map(|u| (u.labels.as_slice(), &u.segmentation)), num_labels, delta_max)
}

pub struct Trainer {
    pub model: SegmentalModel,
    pub config: TrainConfig,
    pub state: TrainerState,
    out_dir: Option<PathBuf>,
}

const STATE_FILE: &str = "trainer.state";
const METRICS_FILE: &str = "metrics.log";
const BEST_FILE: &str = "best.ckpt";

pub fn epoch_checkpoint(dir: &Path, epoch: usize) -> PathBuf {
    dir.join(format!("epoch-{epoch:03}.ckpt"))
}

impl Trainer {
    /// Starts a run. With `out_dir`, writes checkpoints, the trainer state and
    /// `metrics.log` there; an existing `metrics.log` is truncated.
    pub fn new(model: SegmentalModel, config: TrainConfig, out_dir: Option<&Path>) -> Result<Self> {
        config.validate()?;
        if config.length_model && !model.config.neural_length {
            return Err(Error::Config("length_model training needs a model with a neural length model".into()));
        }
        if let Some(dir) = out_dir {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(METRICS_FILE), "")?;
        }
        let adam = AdamState::new(&model.params);
        Ok(Trainer {
            model,
            config,
            state: TrainerState { epoch: 0, step: 0, best_dev_loss: f64::INFINITY, best_epoch: 0, adam },
            out_dir: out_dir.map(Path::to_path_buf),
        })
    }

    /// Whether `dir` holds a resumable run.
    pub fn can_resume(dir: &Path) -> bool {
        dir.join(STATE_FILE).is_file()
    }

    /// Continues the run in `dir` from its last completed epoch. Metrics
    /// records of later epochs (from an interrupted run) are discarded.
    pub fn resume(dir: &Path, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let state = TrainerState::load(&dir.join(STATE_FILE))?;
        let model = SegmentalModel::load(&epoch_checkpoint(dir, state.epoch))?;
        let metrics = dir.join(METRICS_FILE);
        let kept: String = fs::read_to_string(&metrics)
            .unwrap_or_default()
            .lines()
            .filter(|l| record_epoch(l).is_some_and(|e| e <= state.epoch))
            .map(|l| format!("{l}\n"))
            .collect();
        fs::write(&metrics, kept)?;
        Ok(Trainer { model, config, state, out_dir: Some(dir.to_path_buf()) })
    }

    fn with_length(&self) -> bool {
        self.config.length_model
    }

    /// Summed loss over `utts` without updating anything.
    pub fn evaluate(&self, utts: &[Utterance]) -> Result<LossBreakdown> {
        let mut total = LossBreakdown::default();
        for u in utts {
            total.add(&loss(&self.model, u, self.with_length())?);
        }
        Ok(total)
    }

    /// One pass over `train` in a seed- and epoch-determined order.
    pub fn run_epoch(&mut self, train: &[Utterance]) -> Result<LossBreakdown> {
        let epoch = self.state.epoch + 1;
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng::stream(self.config.seed, &format!("shuffle.{epoch}")));
        let hyper = AdamConfig { learning_rate: self.config.learning_rate, ..AdamConfig::default() };
        let mut total = LossBreakdown::default();
        for batch in order.chunks(self.config.batch_size) {
            let mut sum: Vec<Option<Vec<f64>>> = vec![None; self.model.params.len()];
            for &i in batch {
                let (l, grads) = loss_and_grads(&self.model, &train[i], self.with_length())?;
                if !l.total().is_finite() {
                    return Err(Error::Divergence { epoch, step: self.state.step, loss: l.total() });
                }
                total.add(&l);
                for (acc, g) in sum.iter_mut().zip(grads) {
                    match (acc.as_mut(), g) {
                        (Some(a), Some(g)) => a.iter_mut().zip(&g).for_each(|(a, g)| *a += g),
                        (None, Some(g)) => *acc = Some(g),
                        _ => {}
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            let norm = sum.iter().flatten().flatten().map(|g| g * g).sum::<f64>().sqrt() * scale;
            let scale = if norm > self.config.clip_norm { scale * self.config.clip_norm / norm } else { scale };
            sum.iter_mut().flatten().flatten().for_each(|g| *g *= scale);
            adam_step(&mut self.model.params, &sum, &mut self.state.adam, &hyper);
            self.state.step += 1;
        }
        self.state.epoch = epoch;
        Ok(total)
    }

    fn log(&self, rec: &EpochRecord) -> Result<()> {
        if let Some(dir) = &self.out_dir {
            let mut f = fs::OpenOptions::new().append(true).create(true).open(dir.join(METRICS_FILE))?;
            writeln!(f, "{rec}")?;
        }
        Ok(())
    }

    /// Trains until `config.epochs` epochs are complete. Each record is logged
    /// and handed to `on_record`. Before the first epoch, the initial losses
    /// are recorded as epoch 0. The best checkpoint is chosen by dev loss, or
    /// by training loss when the dev split is empty.
    pub fn fit(&mut self, corpus: &Corpus, mut on_record: impl FnMut(&EpochRecord)) -> Result<()> {
        let train = corpus.split(Split::Train);
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if self.model.static_length.is_none() {
            self.model.static_length = Some(estimate_static_table(train, self.model.config.vocab_size)?);
        }
        let dev = corpus.split(Split::Dev);
        let mut emit = |this: &Self, rec: EpochRecord| -> Result<()> {
            this.log(&rec)?;
            on_record(&rec);
            Ok(())
        };
        if self.state.epoch == 0 && self.state.step == 0 {
            emit(self, EpochRecord { epoch: 0, split: Split::Train, loss: self.evaluate(train)? })?;
            if !dev.is_empty() {
                emit(self, EpochRecord { epoch: 0, split: Split::Dev, loss: self.evaluate(dev)? })?;
            }
        }
        while self.state.epoch < self.config.epochs {
            let train_loss = self.run_epoch(train)?;
            let epoch = self.state.epoch;
            emit(self, EpochRecord { epoch, split: Split::Train, loss: train_loss })?;
            let select = if dev.is_empty() {
                train_loss
            } else {
                let d = self.evaluate(dev)?;
                emit(self, EpochRecord { epoch, split: Split::Dev, loss: d })?;
                d
            };
            let (sel, _, _) = select.per_output();
            let improved = sel < self.state.best_dev_loss;
            if improved {
                self.state.best_dev_loss = sel;
                self.state.best_epoch = epoch;
            }
            if let Some(dir) = &self.out_dir {
                self.model.save(&epoch_checkpoint(dir, epoch))?;
                if improved {
                    self.model.save(&dir.join(BEST_FILE))?;
                }
                self.state.save(&dir.join(STATE_FILE))?;
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> Option<&Path> {
        self.out_dir.as_deref()
    }
}

fn record_epoch(line: &str) -> Option<usize> {
    line.split_whitespace().find_map(|kv| kv.strip_prefix("epoch=")).and_then(|v| v.parse().ok())
}
