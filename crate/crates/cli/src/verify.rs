//! The invariant suite behind `segattn verify` and the acceptance tests.

use std::fmt;
use std::path::Path;

use rand::Rng as _;
use segattn::data::{FeatureSequence, Utterance};
use segattn::grad::kernels;
use segattn::length::{neural_segment_log_prob, BlankAlignment, LengthModelKind, StaticLengthTable};
use segattn::model::{EncoderOutput, WindowMode};
use segattn::search::{self, SearchConfig, SearchMode};
use segattn::train::gradient_check;
use segattn::{rng, Error, ModelConfig, SegmentalModel, Segmentation};

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

fn property(name: &str, passed: bool, detail: String) -> Property {
    Property { name: name.to_string(), passed, detail }
}

/// All dims at most 8.
pub fn tiny_config(vocab: usize, ctx_dependency: bool) -> ModelConfig {
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
        ctx_dependency,
        ..ModelConfig::default()
    }
}

pub fn random_features(frames: usize, dim: usize, seed: u64) -> FeatureSequence {
    let mut r = rng::stream(seed, "verify.features");
    let values = (0..frames * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    FeatureSequence::new(format!("verify-{seed}"), dim, values).expect("non-empty features")
}

/// Random weights scaled by `scale`, so distributions are far from uniform.
pub fn random_model(config: ModelConfig, seed: u64, scale: f64) -> segattn::Result<SegmentalModel> {
    let mut m = SegmentalModel::new(config, seed)?;
    let ids: Vec<_> = m.params.ids().collect();
    for id in ids {
        m.params.get_mut(id).value.data_mut().iter_mut().for_each(|v| *v *= scale);
    }
    Ok(m)
}

/// Largest relative error between backprop and central differences over
/// every parameter of the full loss, on segmental (with and without context
/// dependency) and global tiny models with `T = 6` encoder frames.
pub fn gradient_property(tolerance: f64) -> segattn::Result<Property> {
    let seg = Segmentation::from_lengths(&[2, 1, 2, 1])?;
    let labels = vec![3, 0, 2, 1];
    let utt = Utterance::new(random_features(12, 3, 1), labels.clone(), seg)?;
    let global = ModelConfig {
        window_mode: WindowMode::Global,
        eos_label: Some(4),
        neural_length: false,
        vocab_size: 5,
        ..tiny_config(5, true)
    };
    let mut worst = (0.0f64, String::new());
    let mut checked = 0;
    for (config, with_length) in [(tiny_config(4, true), true), (tiny_config(4, false), true), (global, false)] {
        let kind = config.window_mode;
        let m = random_model(config, 3, 1.5)?;
        for c in gradient_check(&m, &utt, with_length, 1e-5)? {
            checked += 1;
            if c.rel_error > worst.0 || c.rel_error.is_nan() {
                worst = (c.rel_error, format!("{kind:?} {}", c.name));
            }
        }
    }
    Ok(property(
        "gradient",
        worst.0 < tolerance,
        format!("{checked} parameter tensors, max rel. error {:.2e} ({}) < {tolerance:.0e}", worst.0, worst.1),
    ))
}

fn oracle_instance(
    frames: usize,
    vocab: usize,
    delta: usize,
    seed: u64,
) -> segattn::Result<(SegmentalModel, EncoderOutput)> {
    let mut m = random_model(tiny_config(vocab, false), seed, 2.5)?;
    let mut r = rng::stream(seed, "verify.static");
    let mu = (0..vocab).map(|_| r.random_range(1.0..delta as f64 + 0.5)).collect();
    m.static_length = Some(StaticLengthTable::from_means(mu, delta)?);
    let enc = m.encode(&random_features(2 * frames, 3, seed * 1000 + frames as u64))?;
    Ok((m, enc))
}

/// Saturated-beam decoders against the exhaustive oracle over the grid
/// `T in 2..=8`, vocab `{2,3,4}`, `δ_max in {2,3,4}`, `seeds` model seeds, with
/// `ctx_dependency = false`. Segmental search runs with length models none and
/// static (with recombination) and neural (without); simple search with neural.
pub fn oracle_property(seeds: u64) -> segattn::Result<Property> {
    let conditions = [
        (SearchMode::Segmental, LengthModelKind::None, true),
        (SearchMode::Segmental, LengthModelKind::Static, true),
        (SearchMode::Segmental, LengthModelKind::Neural, false),
        (SearchMode::Simple, LengthModelKind::Neural, false),
    ];
    let (mut cases, mut mismatches) = (0usize, Vec::new());
    for frames in 2..=8 {
        for vocab in 2..=4 {
            for delta in 2..=4 {
                for seed in 0..seeds {
                    let (m, enc) = oracle_instance(frames, vocab, delta, seed)?;
                    let gamma = (seed % 2) as u8;
                    for (mode, length_model, recombination) in conditions {
                        let cfg = SearchConfig {
                            mode,
                            beam_size: 1,
                            alpha: 0.8,
                            gamma,
                            delta_max: delta,
                            length_model,
                            recombination,
                        }
                        .saturating();
                        let got = search::decode(&m, &enc, cfg)?;
                        let want = search::decode(&m, &enc, SearchConfig { mode: SearchMode::Oracle, ..cfg })?;
                        cases += 1;
                        if got != want {
                            mismatches
                                .push(format!("T={frames} V={vocab} δ={delta} seed={seed} {mode}/{length_model}"));
                        }
                    }
                }
            }
        }
    }
    let detail = match mismatches.first() {
        None => format!("{cases}/{cases} decodes equal the oracle"),
        Some(first) => format!("{} of {cases} differ, first: {first}", mismatches.len()),
    };
    Ok(property("oracle", mismatches.is_empty(), detail))
}

/// Attention weights, label softmax and static length distributions sum to
/// one within `tol_sum`; the neural telescoping identity holds within `tol_tel`.
pub fn normalization_property(tol_sum: f64, tol_tel: f64) -> segattn::Result<Property> {
    let mut worst_att = 0.0f64;
    let mut worst_softmax = 0.0f64;
    let mut worst_static = 0.0f64;
    let mut worst_tel = 0.0f64;
    for seed in 0..10 {
        let m = random_model(tiny_config(4, seed % 2 == 0), seed, 2.0)?;
        let enc = m.encode(&random_features(20, 3, seed))?;
        let t = enc.frames();
        let mut state = m.initial_state();
        let mut r = rng::stream(seed, "verify.windows");
        for _ in 0..6 {
            let lo = r.random_range(1..=t);
            let hi = r.random_range(lo..=t);
            let (probs, step) = m.label_step(&state, &enc, (lo, hi))?;
            worst_att = worst_att.max((step.weights.iter().sum::<f64>() - 1.0).abs());
            worst_softmax = worst_softmax.max((probs.iter().sum::<f64>() - 1.0).abs());
            let label = r.random_range(0..4);
            state = m.next_state(&step.query, &step.context, label);
        }
        let delta = 2 + seed as usize;
        let mu: Vec<f64> = (0..5).map(|_| r.random_range(0.5..delta as f64 + 3.0)).collect();
        let table = StaticLengthTable::from_means(mu, delta)?;
        for a in 0..5 {
            let total: f64 = (1..=delta).map(|d| table.log_prob(a, d).exp()).sum();
            worst_static = worst_static.max((total - 1.0).abs());
        }
        let labels = [1, 3, 0];
        let seg = Segmentation::new(vec![3, 6, t], t)?;
        let logits = m.neural_logits(&enc, &BlankAlignment::encode(&labels, &seg)?)?;
        for prev in [0, 3, 6] {
            let (mut mass, mut survive) = (0.0, 1.0);
            for end in prev + 1..=t {
                mass += neural_segment_log_prob(prev, end, &logits).exp();
                survive *= 1.0 - kernels::sigmoid(logits[end - 1]);
                worst_tel = worst_tel.max((1.0 - mass - survive).abs());
            }
        }
    }
    let passed = worst_att <= tol_sum && worst_softmax <= tol_sum && worst_static <= tol_sum && worst_tel <= tol_tel;
    Ok(property(
        "normalization",
        passed,
        format!(
            "max deviation: attention {worst_att:.1e}, label softmax {worst_softmax:.1e}, static length {worst_static:.1e} (tol {tol_sum:.0e}); telescoping {worst_tel:.1e} (tol {tol_tel:.0e})"
        ),
    ))
}

/// Bit-exact save/load round trip and checksum detection of a flipped byte.
pub fn checkpoint_property() -> segattn::Result<Property> {
    let mut m = random_model(tiny_config(3, true), 1, 1.0)?;
    m.static_length = Some(StaticLengthTable::from_means(vec![1.5, 2.0, 2.5], 4)?);
    let bytes = m.to_bytes()?;
    let round_trip = SegmentalModel::from_bytes(&bytes)?.to_bytes()? == bytes;
    let mut corrupt = bytes.clone();
    let mid = corrupt.len() / 2;
    corrupt[mid] ^= 0x10;
    let detected = matches!(SegmentalModel::from_bytes(&corrupt), Err(Error::Checksum { .. }));
    Ok(property(
        "checkpoint",
        round_trip && detected,
        format!("round trip bit-exact: {round_trip}, corruption detected: {detected}"),
    ))
}

/// Loads a user-supplied checkpoint, which verifies its checksum.
pub fn checkpoint_file_property(path: &Path) -> Property {
    match SegmentalModel::load(path) {
        Ok(m) => property(
            "checkpoint-file",
            true,
            format!("{} loads, {} parameters, checksum ok", path.display(), m.params.num_values()),
        ),
        Err(e) => property("checkpoint-file", false, format!("{}: {e}", path.display())),
    }
}

/// The full suite with the acceptance tolerances.
pub fn run_all(checkpoint: Option<&Path>) -> Vec<Property> {
    let guard =
        |name: &str, r: segattn::Result<Property>| r.unwrap_or_else(|e| property(name, false, format!("error: {e}")));
    let mut out = vec![
        guard("gradient", gradient_property(1e-4)),
        guard("normalization", normalization_property(1e-12, 1e-10)),
        guard("checkpoint", checkpoint_property()),
        guard("oracle", oracle_property(10)),
    ];
    if let Some(p) = checkpoint {
        out.push(checkpoint_file_property(p));
    }
    out
}
