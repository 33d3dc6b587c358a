//! Plain slice math. The tape ops and the tape-free inference path both call
//! these, so a teacher-forced training pass and a decoder scoring the same
//! alignment produce bit-identical numbers.

/// `out = x W (+ b)` for one row `x[in]` and `W[in, out]`.
pub fn affine_row(x: &[f64], w: &[f64], b: Option<&[f64]>, out: &mut [f64]) {
    let n_out = out.len();
    debug_assert_eq!(w.len(), x.len() * n_out);
    match b {
        Some(b) => out.copy_from_slice(b),
        None => out.fill(0.0),
    }
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &w[i * n_out..(i + 1) * n_out];
        for (o, &wij) in out.iter_mut().zip(row) {
            *o += xi * wij;
        }
    }
}

/// Row-wise affine map over `x[rows, in]`.
pub fn affine(x: &[f64], rows: usize, w: &[f64], b: Option<&[f64]>, n_out: usize) -> Vec<f64> {
    let n_in = x.len() / rows;
    let mut out = vec![0.0; rows * n_out];
    for r in 0..rows {
        affine_row(&x[r * n_in..(r + 1) * n_in], w, b, &mut out[r * n_out..(r + 1) * n_out]);
    }
    out
}

/// `dx += dy W^T` for one row.
pub fn affine_row_backward_input(dy: &[f64], w: &[f64], dx: &mut [f64]) {
    let n_out = dy.len();
    for (i, dxi) in dx.iter_mut().enumerate() {
        let row = &w[i * n_out..(i + 1) * n_out];
        let mut acc = 0.0;
        for (&wij, &g) in row.iter().zip(dy) {
            acc += wij * g;
        }
        *dxi += acc;
    }
}

/// `dW += x^T dy` for one row.
pub fn affine_row_backward_weight(x: &[f64], dy: &[f64], dw: &mut [f64]) {
    let n_out = dy.len();
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &mut dw[i * n_out..(i + 1) * n_out];
        for (d, &g) in row.iter_mut().zip(dy) {
            *d += xi * g;
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log sigmoid(z)`.
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

/// `log (1 - sigmoid(z))`.
pub fn log_one_minus_sigmoid(z: f64) -> f64 {
    -softplus(z)
}

/// Softmax over positions where `keep` is true; masked positions get exactly 0.
/// Returns `None` if nothing is kept.
pub fn masked_softmax(x: &[f64], keep: Option<&[bool]>) -> Option<Vec<f64>> {
    let kept = |i: usize| keep.is_none_or(|k| k[i]);
    let mut max = f64::NEG_INFINITY;
    let mut any = false;
    for (i, &v) in x.iter().enumerate() {
        if kept(i) {
            any = true;
            if v > max {
                max = v;
            }
        }
    }
    if !any {
        return None;
    }
    let mut out = vec![0.0; x.len()];
    let mut sum = 0.0;
    for (i, &v) in x.iter().enumerate() {
        if kept(i) {
            let e = (v - max).exp();
            out[i] = e;
            sum += e;
        }
    }
    for o in &mut out {
        *o /= sum;
    }
    Some(out)
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    masked_softmax(x, None).expect("softmax of an empty slice")
}

pub fn log_softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + x.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    x.iter().map(|&v| v - lse).collect()
}

/// Pairwise max over adjacent entries of each row. Returns values and the
/// index (0 or 1) of the winner; ties go to the lower index.
pub fn maxout(x: &[f64]) -> (Vec<f64>, Vec<u8>) {
    let k = x.len() / 2;
    let mut out = Vec::with_capacity(k);
    let mut arg = Vec::with_capacity(k);
    for j in 0..k {
        let (a, b) = (x[2 * j], x[2 * j + 1]);
        if b > a {
            out.push(b);
            arg.push(1);
        } else {
            out.push(a);
            arg.push(0);
        }
    }
    (out, arg)
}

/// Max over groups of `k` consecutive rows of `x[rows, cols]`; trailing rows
/// that do not fill a group are dropped. Returns values and the source row of
/// each output element (lowest row on ties).
pub fn max_pool_rows(x: &[f64], rows: usize, cols: usize, k: usize) -> (Vec<f64>, Vec<usize>) {
    let out_rows = rows / k;
    let mut out = vec![0.0; out_rows * cols];
    let mut arg = vec![0usize; out_rows * cols];
    for r in 0..out_rows {
        for c in 0..cols {
            let mut best_row = r * k;
            let mut best = x[best_row * cols + c];
            for src in r * k + 1..(r + 1) * k {
                let v = x[src * cols + c];
                if v > best {
                    best = v;
                    best_row = src;
                }
            }
            out[r * cols + c] = best;
            arg[r * cols + c] = best_row;
        }
    }
    (out, arg)
}

/// Gate activations of one LSTM step, kept for backpropagation.
/// Gate order inside the `4d` pre-activation is input, forget, cell, output.
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// One LSTM step given the precomputed input contribution `xw = x Wx + b`.
/// Returns `(h', c', cache)`.
pub fn lstm_cell(xw: &[f64], h: &[f64], c: &[f64], wh: &[f64]) -> (Vec<f64>, Vec<f64>, LstmCache) {
    let d = h.len();
    let mut z = xw.to_vec();
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 {
            continue;
        }
        let row = &wh[k * 4 * d..(k + 1) * 4 * d];
        for (zj, &w) in z.iter_mut().zip(row) {
            *zj += hk * w;
        }
    }
    let mut cache =
        LstmCache { i: vec![0.0; d], f: vec![0.0; d], g: vec![0.0; d], o: vec![0.0; d], tanh_c: vec![0.0; d] };
    let mut h_new = vec![0.0; d];
    let mut c_new = vec![0.0; d];
    for j in 0..d {
        let i = sigmoid(z[j]);
        let f = sigmoid(z[d + j]);
        let g = z[2 * d + j].tanh();
        let o = sigmoid(z[3 * d + j]);
        let cj = f * c[j] + i * g;
        let tc = cj.tanh();
        c_new[j] = cj;
        h_new[j] = o * tc;
        cache.i[j] = i;
        cache.f[j] = f;
        cache.g[j] = g;
        cache.o[j] = o;
        cache.tanh_c[j] = tc;
    }
    (h_new, c_new, cache)
}

/// Backward of one LSTM step. Takes upstream `dh`, `dc` (w.r.t. the step's
/// outputs) and the previous cell state; returns the gate pre-activation
/// gradient `dz[4d]` and `dc_prev`.
pub fn lstm_cell_backward(dh: &[f64], dc: &[f64], c_prev: &[f64], cache: &LstmCache) -> (Vec<f64>, Vec<f64>) {
    let d = dh.len();
    let mut dz = vec![0.0; 4 * d];
    let mut dc_prev = vec![0.0; d];
    for j in 0..d {
        let (i, f, g, o, tc) = (cache.i[j], cache.f[j], cache.g[j], cache.o[j], cache.tanh_c[j]);
        let d_o = dh[j] * tc;
        let dcj = dh[j] * o * (1.0 - tc * tc) + dc[j];
        let d_i = dcj * g;
        let d_g = dcj * i;
        let d_f = dcj * c_prev[j];
        dz[j] = d_i * i * (1.0 - i);
        dz[d + j] = d_f * f * (1.0 - f);
        dz[2 * d + j] = d_g * (1.0 - g * g);
        dz[3 * d + j] = d_o * o * (1.0 - o);
        dc_prev[j] = dcj * f;
    }
    (dz, dc_prev)
}

/// Full unidirectional LSTM over `xs[steps, in]` from a zero state.
/// Returns hidden outputs `[steps, d]` in input order, the cell states and
/// caches (both indexed by input position).
pub fn lstm_sequence(
    xs: &[f64],
    steps: usize,
    wx: &[f64],
    wh: &[f64],
    b: &[f64],
    d: usize,
    reverse: bool,
) -> (Vec<f64>, Vec<Vec<f64>>, Vec<LstmCache>) {
    let xw = affine(xs, steps, wx, Some(b), 4 * d);
    let mut hs = vec![0.0; steps * d];
    let mut cs = vec![Vec::new(); steps];
    let mut caches: Vec<Option<LstmCache>> = vec![None; steps];
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    for k in 0..steps {
        let t = if reverse { steps - 1 - k } else { k };
        let (h_new, c_new, cache) = lstm_cell(&xw[t * 4 * d..(t + 1) * 4 * d], &h, &c, wh);
        hs[t * d..(t + 1) * d].copy_from_slice(&h_new);
        cs[t] = c_new.clone();
        caches[t] = Some(cache);
        h = h_new;
        c = c_new;
    }
    (hs, cs, caches.into_iter().map(|c| c.expect("every step cached")).collect())
}

/// Attention energies `v . tanh(hproj[t] + sproj)` for rows `lo..hi` (0-based, half-open).
pub fn attention_energies(hproj: &[f64], sproj: &[f64], v: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    let a = sproj.len();
    (lo..hi)
        .map(|t| {
            let row = &hproj[t * a..(t + 1) * a];
            let mut e = 0.0;
            for k in 0..a {
                e += v[k] * (row[k] + sproj[k]).tanh();
            }
            e
        })
        .collect()
}

/// `sum_t alpha[t - lo] h[t]` over rows `lo..lo + alpha.len()` of `h[*, dim]`.
pub fn weighted_rows(alpha: &[f64], h: &[f64], dim: usize, lo: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (k, &a) in alpha.iter().enumerate() {
        let row = &h[(lo + k) * dim..(lo + k + 1) * dim];
        for (o, &x) in out.iter_mut().zip(row) {
            *o += a * x;
        }
    }
    out
}
