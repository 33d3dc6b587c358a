//! Central finite differences, used as the independent oracle for every
//! backward pass (unit tests and the `verify` suite).

use crate::tensor::{ParamId, ParamStore};

/// Numeric gradient of `f` w.r.t. every element of parameter `id`.
pub fn numeric_param_grad<F>(store: &mut ParamStore, id: ParamId, eps: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&ParamStore) -> f64,
{
    let n = store.get(id).value.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let orig = store.get(id).value.data()[k];
        store.get_mut(id).value.data_mut()[k] = orig + eps;
        let plus = f(store);
        store.get_mut(id).value.data_mut()[k] = orig - eps;
        let minus = f(store);
        store.get_mut(id).value.data_mut()[k] = orig;
        out.push((plus - minus) / (2.0 * eps));
    }
    out
}

/// Numeric gradient of `f` w.r.t. a plain input vector.
pub fn numeric_grad<F>(x: &[f64], eps: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + eps;
            let plus = f(&probe);
            probe[k] = x[k] - eps;
            let minus = f(&probe);
            probe[k] = x[k];
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|)` in the Euclidean norm; 0 when both are ~0.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}
