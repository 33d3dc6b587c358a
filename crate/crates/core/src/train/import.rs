use crate::error::{Error, Result};
use crate::model::{ModelConfig, SegmentalModel, WindowMode};

/// Builds a segmental model from a trained global-attention model. All shared
/// parameters are copied; a neural length model, if `target` asks for one, is
/// freshly initialized from `seed`.
pub fn import_global(global: &SegmentalModel, target: &ModelConfig, seed: u64) -> Result<SegmentalModel> {
    let g = &global.config;
    if g.window_mode != WindowMode::Global {
        return Err(Error::IncompatibleImport("source model does not use global attention".into()));
    }
    let mismatch = [
        ("input_dim", g.input_dim != target.input_dim),
        ("enc_layers", g.enc_layers != target.enc_layers),
        ("enc_dim", g.enc_dim != target.enc_dim),
        ("pool_factors", g.pool_factors != target.pool_factors),
        ("dec_dim", g.dec_dim != target.dec_dim),
        ("vocab_size", g.vocab_size != target.vocab_size),
        ("att_dim", g.att_dim != target.att_dim),
        ("readout_dim", g.readout_dim != target.readout_dim),
        ("eos_label", g.eos_label != target.eos_label),
        ("silence_label", g.silence_label != target.silence_label),
    ];
    if let Some((name, _)) = mismatch.iter().find(|m| m.1) {
        return Err(Error::IncompatibleImport(format!("{name} differs between source and target")));
    }
    let mut config = target.clone();
    config.window_mode = WindowMode::Segmental;
    let mut model = SegmentalModel::new(config.clone(), seed)?;
    for (_, p) in global.params.iter().filter(|(_, p)| SegmentalModel::is_shared_param(&p.name)) {
        model.set_param(&p.name, p.value.clone())?;
    }
    if config.neural_length {
        let fresh = SegmentalModel::fresh_length_params(&config, seed)?;
        for (_, p) in fresh.iter() {
            model.set_param(&p.name, p.value.clone())?;
        }
    }
    Ok(model)
}
