//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use segattn::data::{Corpus, CorpusSpec};
use segattn::model::{SilenceVariant, WindowMode};
use segattn::search::SearchConfig;
use segattn::train::TrainConfig;
use segattn::ModelConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Architecture part of the model configuration. Input size, vocabulary,
/// silence and EOS labels follow from the corpus and the silence variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub enc_layers: usize,
    pub enc_dim: usize,
    pub pool_factors: Vec<usize>,
    pub dec_dim: usize,
    pub att_dim: usize,
    pub readout_dim: usize,
    pub len_dim: usize,
    pub window_mode: WindowMode,
    pub ctx_dependency: bool,
    pub neural_length: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub length_model: bool,
    pub clip_norm: f64,
}

/// One experiment. Every key is required and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub silence: SilenceVariant,
    pub corpus: CorpusSpec,
    pub model: ModelSection,
    pub train: TrainSection,
    pub search: SearchConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.model_config()?;
        self.train_config().validate()?;
        self.search.validate()?;
        if self.model.window_mode == WindowMode::Global && self.train.length_model {
            bail!("global attention models have no length model to train");
        }
        if self.train.length_model && !self.model.neural_length {
            bail!("train.length_model needs model.neural_length");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn corpus_hash(&self) -> String {
        let json = serde_json::to_string(&(&self.corpus, self.seed)).expect("spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Silence label of the generated corpus (one past the real labels).
    pub fn silence_label(&self) -> usize {
        self.corpus.vocab_size
    }

    /// Silence label as seen by the model, if silence is a label at all.
    pub fn model_silence(&self) -> Option<usize> {
        (self.silence != SilenceVariant::None).then_some(self.silence_label())
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let m = &self.model;
        let mut vocab = self.corpus.vocab_size + usize::from(self.model_silence().is_some());
        let global = m.window_mode == WindowMode::Global;
        let eos = global.then(|| {
            vocab += 1;
            vocab - 1
        });
        let config = ModelConfig {
            input_dim: self.corpus.input_dim,
            enc_layers: m.enc_layers,
            enc_dim: m.enc_dim,
            pool_factors: m.pool_factors.clone(),
            dec_dim: m.dec_dim,
            vocab_size: vocab,
            att_dim: m.att_dim,
            readout_dim: m.readout_dim,
            window_mode: m.window_mode,
            ctx_dependency: m.ctx_dependency,
            silence_variant: self.silence,
            silence_label: self.model_silence(),
            eos_label: eos,
            neural_length: m.neural_length && !global,
            len_dim: m.len_dim,
        };
        config.validate()?;
        if config.total_pool() != self.corpus.frames_per_step {
            bail!(
                "pool factors {:?} downsample by {} but the corpus has {} frames per step",
                m.pool_factors,
                config.total_pool(),
                self.corpus.frames_per_step
            );
        }
        Ok(config)
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            seed: self.seed,
            length_model: t.length_model,
            clip_norm: t.clip_norm,
        }
    }

    /// Applies the silence variant to every split of a generated corpus.
    pub fn prepare(&self, mut corpus: Corpus) -> Result<Corpus> {
        let silence = self.silence_label();
        for split in segattn::data::Split::ALL {
            let utts = corpus.split_mut(split);
            *utts = utts
                .iter()
                .map(|u| segattn::data::apply_silence_variant(u, self.silence, self.search.delta_max, silence))
                .collect::<segattn::Result<_>>()?;
        }
        Ok(corpus)
    }

    pub fn data_dir(&self) -> PathBuf {
        self.output_dir.join("data")
    }

    pub fn train_dir(&self) -> PathBuf {
        self.output_dir.join("train")
    }
}
