use rand::Rng as _;

use crate::data::FeatureSequence;
use crate::model::{ModelConfig, SegmentalModel};
use crate::rng;

pub fn tiny_config(vocab: usize) -> ModelConfig {
    ModelConfig {
        input_dim: 3,
        enc_layers: 2,
        enc_dim: 3,
        pool_factors: vec![2],
        dec_dim: 4,
        vocab_size: vocab,
        att_dim: 3,
        readout_dim: 3,
        len_dim: 3,
        ..ModelConfig::default()
    }
}

pub fn features(frames: usize, dim: usize, seed: u64) -> FeatureSequence {
    let mut r = rng::stream(seed, "test.features");
    let values = (0..frames * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    FeatureSequence::new(format!("x{seed}"), dim, values).unwrap()
}

/// Random model with weights scaled up so distributions are far from uniform.
pub fn sharp_model(config: ModelConfig, seed: u64, scale: f64) -> SegmentalModel {
    let mut m = SegmentalModel::new(config, seed).unwrap();
    let ids: Vec<_> = m.params.ids().collect();
    for id in ids {
        for v in m.params.get_mut(id).value.data_mut() {
            *v *= scale;
        }
    }
    m
}
