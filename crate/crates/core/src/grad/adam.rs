//! Adam with bias correction.

use crate::tensor::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment buffers, one per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, p)| vec![0.0; p.value.len()]).collect();
        AdamState { step: 0, m: zeros.clone(), v: zeros }
    }
}

/// Applies one update. A parameter without a gradient is treated as having
/// a zero gradient; non-trainable parameters are left alone.
pub fn adam_step(params: &mut ParamStore, grads: &[Option<Vec<f64>>], state: &mut AdamState, hyper: &AdamConfig) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - hyper.beta1.powi(t);
    let bc2 = 1.0 - hyper.beta2.powi(t);
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let p = params.get_mut(id);
        if !p.trainable {
            continue;
        }
        let g = grads.get(id.0).and_then(|g| g.as_deref());
        let m = &mut state.m[id.0];
        let v = &mut state.v[id.0];
        for (k, w) in p.value.data_mut().iter_mut().enumerate() {
            let gk = g.map_or(0.0, |g| g[k]);
            m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * gk;
            v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * gk * gk;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            *w -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.eps);
        }
    }
}
