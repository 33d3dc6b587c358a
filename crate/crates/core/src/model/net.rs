use crate::error::Result;
use crate::length::StaticLengthTable;
use crate::rng::{self, Rng};
use crate::tensor::{ParamId, ParamStore, Tensor};

use super::config::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmIds {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderLayerIds {
    pub fw: LstmIds,
    pub bw: LstmIds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthIds {
    pub emb: ParamId,
    pub lstm: LstmIds,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamIds {
    pub enc: Vec<EncoderLayerIds>,
    pub dec_emb: ParamId,
    pub dec_lstm: LstmIds,
    pub att_ws: ParamId,
    pub att_wh: ParamId,
    pub att_b: ParamId,
    pub att_v: ParamId,
    pub ro_w1: ParamId,
    pub ro_b1: ParamId,
    pub ro_w2: ParamId,
    pub ro_b2: ParamId,
    pub len: Option<LengthIds>,
}

/// Encoder, label model and (optionally) neural length model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentalModel {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub ids: ParamIds,
    /// Present once estimated from training alignments.
    pub static_length: Option<StaticLengthTable>,
}

/// Name, shape and init range of one parameter.
struct Spec {
    name: String,
    shape: Vec<usize>,
    fan_in: usize,
}

fn specs(c: &ModelConfig) -> Vec<Spec> {
    let mut out = Vec::new();
    let mut add = |name: String, shape: Vec<usize>, fan_in: usize| out.push(Spec { name, shape, fan_in });
    let e2 = c.enc_out_dim();
    for l in 0..c.enc_layers {
        let x_dim = if l == 0 { c.input_dim } else { e2 };
        for dir in ["fw", "bw"] {
            let p = format!("enc.l{l}.{dir}");
            add(format!("{p}.wx"), vec![x_dim, 4 * c.enc_dim], x_dim);
            add(format!("{p}.wh"), vec![c.enc_dim, 4 * c.enc_dim], c.enc_dim);
            add(format!("{p}.b"), vec![4 * c.enc_dim], x_dim + c.enc_dim);
        }
    }
    add("dec.emb".into(), vec![c.vocab_size + 1, c.dec_dim], c.dec_dim);
    let dec_in = c.dec_dim + e2;
    add("dec.lstm.wx".into(), vec![dec_in, 4 * c.dec_dim], dec_in);
    add("dec.lstm.wh".into(), vec![c.dec_dim, 4 * c.dec_dim], c.dec_dim);
    add("dec.lstm.b".into(), vec![4 * c.dec_dim], dec_in + c.dec_dim);
    add("att.ws".into(), vec![c.dec_dim, c.att_dim], c.dec_dim);
    add("att.wh".into(), vec![e2, c.att_dim], e2);
    add("att.b".into(), vec![c.att_dim], e2);
    add("att.v".into(), vec![c.att_dim, 1], c.att_dim);
    let ro_in = c.dec_dim + e2;
    add("readout.w1".into(), vec![ro_in, 2 * c.readout_dim], ro_in);
    add("readout.b1".into(), vec![2 * c.readout_dim], ro_in);
    add("readout.w2".into(), vec![c.readout_dim, c.vocab_size], c.readout_dim);
    add("readout.b2".into(), vec![c.vocab_size], c.readout_dim);
    if c.neural_length {
        out.extend(length_specs(c));
    }
    out
}

fn length_specs(c: &ModelConfig) -> Vec<Spec> {
    let e2 = c.enc_out_dim();
    let d = c.len_dim;
    let x_dim = e2 + d;
    let s = |name: &str, shape: Vec<usize>, fan_in: usize| Spec { name: name.to_string(), shape, fan_in };
    vec![
        s("len.emb", vec![c.vocab_size + 2, d], d),
        s("len.lstm.wx", vec![x_dim, 4 * d], x_dim),
        s("len.lstm.wh", vec![d, 4 * d], d),
        s("len.lstm.b", vec![4 * d], x_dim + d),
        s("len.out.w", vec![d, 1], d),
        s("len.out.b", vec![1], d),
    ]
}

fn insert_specs(store: &mut ParamStore, specs: Vec<Spec>, rng: &mut Rng) -> Result<()> {
    for s in specs {
        let r = 1.0 / (s.fan_in as f64).sqrt();
        store.insert(&s.name, Tensor::uniform(&s.shape, r, rng), true)?;
    }
    Ok(())
}

impl SegmentalModel {
    /// Fresh model with `uniform(-r, r)`, `r = 1/sqrt(fan_in)`, drawn from the `init` sub-stream.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, "init");
        let mut params = ParamStore::new();
        insert_specs(&mut params, specs(&config), &mut rng)?;
        Self::from_params(config, params)
    }

    /// Every parameter set to zero.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        for s in specs(&config) {
            params.insert(&s.name, Tensor::zeros(&s.shape), true)?;
        }
        Self::from_params(config, params)
    }

    /// Binds parameter ids by name; every expected parameter must exist with the expected shape.
    pub fn from_params(config: ModelConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let expected = specs(&config);
        if params.len() != expected.len() {
            return Err(crate::Error::Checkpoint(format!(
                "expected {} parameters, found {}",
                expected.len(),
                params.len()
            )));
        }
        for s in &expected {
            match params.by_name(&s.name) {
                Some(p) if p.value.shape() == s.shape.as_slice() => {}
                Some(p) => return Err(crate::Error::shape("parameter", p.value.shape(), &s.shape)),
                None => return Err(crate::Error::Checkpoint(format!("missing parameter {}", s.name))),
            }
        }
        let id = |n: &str| params.id(n).expect("checked above");
        let lstm =
            |p: &str| LstmIds { wx: id(&format!("{p}.wx")), wh: id(&format!("{p}.wh")), b: id(&format!("{p}.b")) };
        let enc = (0..config.enc_layers)
            .map(|l| EncoderLayerIds { fw: lstm(&format!("enc.l{l}.fw")), bw: lstm(&format!("enc.l{l}.bw")) })
            .collect();
        let len = config.neural_length.then(|| LengthIds {
            emb: id("len.emb"),
            lstm: lstm("len.lstm"),
            out_w: id("len.out.w"),
            out_b: id("len.out.b"),
        });
        let ids = ParamIds {
            enc,
            dec_emb: id("dec.emb"),
            dec_lstm: lstm("dec.lstm"),
            att_ws: id("att.ws"),
            att_wh: id("att.wh"),
            att_b: id("att.b"),
            att_v: id("att.v"),
            ro_w1: id("readout.w1"),
            ro_b1: id("readout.b1"),
            ro_w2: id("readout.w2"),
            ro_b2: id("readout.b2"),
            len,
        };
        Ok(SegmentalModel { config, params, ids, static_length: None })
    }

    /// Parameters that are not part of the length model.
    pub fn is_shared_param(name: &str) -> bool {
        !name.starts_with("len.")
    }

    pub fn set_param(&mut self, name: &str, value: Tensor) -> Result<()> {
        let id = self.params.id(name).ok_or_else(|| crate::Error::Checkpoint(format!("unknown parameter {name}")))?;
        let p = self.params.get_mut(id);
        if p.value.shape() != value.shape() {
            return Err(crate::Error::shape("set_param", p.value.shape(), value.shape()));
        }
        p.value = value;
        Ok(())
    }

    pub(crate) fn fresh_length_params(config: &ModelConfig, seed: u64) -> Result<ParamStore> {
        let mut rng = rng::stream(seed, "init.length");
        let mut store = ParamStore::new();
        insert_specs(&mut store, length_specs(config), &mut rng)?;
        Ok(store)
    }
}
