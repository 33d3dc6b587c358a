//! Shared fixtures for the benchmarks under `benches/`.

use segattn::data::{generate, CorpusSpec, Utterance};
use segattn::{ModelConfig, SegmentalModel};

/// A model with the noisy-corpus dimensions and a handful of dev utterances.
pub fn fixture(utterances: usize) -> (SegmentalModel, Vec<Utterance>) {
    let spec = CorpusSpec { train_size: 1, dev_size: utterances, eval_size: 1, noise: 2.5, ..CorpusSpec::default() };
    let corpus = generate(&spec, 11).expect("valid corpus spec");
    let config = ModelConfig {
        input_dim: spec.input_dim,
        vocab_size: spec.vocab_size,
        enc_dim: 32,
        dec_dim: 32,
        att_dim: 32,
        readout_dim: 32,
        len_dim: 32,
        ..ModelConfig::default()
    };
    let model = SegmentalModel::new(config, 11).expect("valid model config");
    (model, corpus.dev)
}
