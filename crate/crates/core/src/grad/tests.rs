use proptest::prelude::*;
use rand::Rng as _;

use super::fd::{numeric_grad, numeric_param_grad, relative_error};
use super::kernels;
use super::*;
use crate::error::Error;
use crate::rng::stream;
use crate::tensor::{ParamStore, Tensor};

fn store_with(entries: &[(&str, Vec<usize>)], seed: u64) -> ParamStore {
    let mut rng = stream(seed, "grad-tests");
    let mut s = ParamStore::new();
    for (name, shape) in entries {
        s.insert(name, Tensor::uniform(shape, 1.0, &mut rng), true).unwrap();
    }
    s
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, "vec");
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Checks every parameter gradient of `f` against central differences.
fn check_param_grads<F>(store: &mut ParamStore, tol: f64, f: F)
where
    F: Fn(&mut Tape) -> Var,
{
    let analytic = {
        let mut tape = Tape::new(store);
        let out = f(&mut tape);
        tape.backward(out).into_param_grads()
    };
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let numeric = numeric_param_grad(store, id, 1e-5, |s| {
            let mut tape = Tape::new(s);
            let out = f(&mut tape);
            tape.scalar(out)
        });
        let got = analytic[id.0].clone().unwrap_or_else(|| vec![0.0; numeric.len()]);
        let err = relative_error(&got, &numeric);
        assert!(err < tol, "{}: relative error {err}", store.get(id).name);
    }
}

#[test]
fn linear_identity_and_hand_example() {
    let mut s = ParamStore::new();
    let w = s.insert("w", Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(), true).unwrap();
    let b = s.insert("b", Tensor::vector(vec![0.0, 0.0]), true).unwrap();
    let w1 = s.insert("w1", Tensor::matrix(2, 2, vec![1.0; 4]).unwrap(), true).unwrap();
    let b1 = s.insert("b1", Tensor::vector(vec![1.0, 1.0]), true).unwrap();
    let mut tape = Tape::new(&s);
    let (wv, bv) = (tape.param(w), tape.param(b));
    let x = tape.vector(vec![1.0, 0.0]);
    let y = tape.linear(x, wv, Some(bv)).unwrap();
    assert_eq!(tape.value(y), &[1.0, 0.0]);
    let (wv, bv) = (tape.param(w1), tape.param(b1));
    let x = tape.vector(vec![1.0, 2.0]);
    let y = tape.linear(x, wv, Some(bv)).unwrap();
    assert_eq!(tape.value(y), &[4.0, 4.0]);
}

#[test]
fn linear_shape_mismatch_names_both_shapes() {
    let s = store_with(&[("w", vec![3, 2])], 0);
    let mut tape = Tape::new(&s);
    let w = tape.param(s.id("w").unwrap());
    let x = tape.vector(vec![1.0, 2.0]);
    match tape.linear(x, w, None) {
        Err(Error::Shape { left, right, .. }) => {
            assert_eq!(left, vec![2]);
            assert_eq!(right, vec![3, 2]);
        }
        other => panic!("expected shape error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn linear_gradient_matches_finite_differences() {
    let mut s = store_with(&[("w", vec![3, 4]), ("b", vec![4]), ("x", vec![2, 3])], 0);
    check_param_grads(&mut s, 1e-6, |t| {
        let p = t.params();
        let (w, b, x) = (t.param(p.id("w").unwrap()), t.param(p.id("b").unwrap()), t.param(p.id("x").unwrap()));
        let y = t.linear(x, w, Some(b)).unwrap();
        t.sum_all(y)
    });
}

#[test]
fn activation_closed_forms() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let x = t.vector(vec![0.0, 3f64.ln()]);
    let th = t.tanh(x);
    let sg = t.sigmoid(x);
    let ex = t.exp(x);
    assert_eq!(t.value(th)[0], 0.0);
    assert_eq!(t.value(sg)[0], 0.5);
    assert!((t.value(sg)[1] - 0.75).abs() < 1e-15);
    assert!((t.value(ex)[1] - 3.0).abs() < 1e-14);
}

#[test]
fn activations_propagate_nan() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let x = t.vector(vec![f64::NAN]);
    let a = t.tanh(x);
    let b = t.sigmoid(x);
    let c = t.exp(x);
    assert!(t.value(a)[0].is_nan() && t.value(b)[0].is_nan() && t.value(c)[0].is_nan());
}

#[test]
fn activation_gradients_match_finite_differences() {
    let mut s = store_with(&[("x", vec![5])], 1);
    check_param_grads(&mut s, 1e-6, |t| {
        let x = t.param(t.params().id("x").unwrap());
        let a = t.tanh(x);
        let b = t.sigmoid(a);
        let c = t.exp(b);
        let d = t.mul(c, a).unwrap();
        let e = t.scale(d, -1.5);
        t.sum_all(e)
    });
}

#[test]
fn softmax_examples() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let e = t.vector(vec![0.0; 3]);
    let p = t.softmax(e, None).unwrap();
    for &v in t.value(p) {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
    let e = t.vector(vec![0.0; 4]);
    let p = t.softmax(e, Some(&[true, true, false, false])).unwrap();
    assert_eq!(t.value(p), &[0.5, 0.5, 0.0, 0.0]);
    let e = t.vector(vec![0.0; 2]);
    assert!(matches!(t.softmax(e, Some(&[false, false])), Err(Error::InvalidMask)));
}

#[test]
fn softmax_is_stable_for_huge_energies() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let e = t.vector(vec![1000.0, 1000.5]);
    let p = t.softmax(e, None).unwrap();
    let v = t.value(p);
    // Closed form: 1 / (1 + e^{0.5}) for the first entry, independent of the offset.
    let expected = 1.0 / (1.0 + 0.5f64.exp());
    assert!(v.iter().all(|x| x.is_finite()));
    assert!((v[0] - expected).abs() < 1e-15);
    assert!((v[0] + v[1] - 1.0).abs() < 1e-15);
}

#[test]
fn softmax_gradient_matches_finite_differences() {
    let mut s = store_with(&[("e", vec![5]), ("w", vec![5])], 2);
    check_param_grads(&mut s, 1e-6, |t| {
        let p = t.params();
        let (e, w) = (t.param(p.id("e").unwrap()), t.param(p.id("w").unwrap()));
        let a = t.softmax(e, Some(&[true, false, true, true, false])).unwrap();
        let m = t.mul(a, w).unwrap();
        t.sum_all(m)
    });
}

#[test]
fn maxout_examples_and_tie_rule() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let x = t.vector(vec![1.0, 2.0, 3.0, 0.0]);
    let y = t.maxout(x).unwrap();
    assert_eq!(t.value(y), &[2.0, 3.0]);
    let x = t.vector(vec![5.0, 5.0]);
    let y = t.maxout(x).unwrap();
    assert_eq!(t.value(y), &[5.0]);
    let out = t.sum_all(y);
    let g = t.backward(out);
    assert_eq!(g.wrt(x).unwrap(), &[1.0, 0.0]);
    let odd = t.vector(vec![1.0, 2.0, 3.0]);
    assert!(matches!(t.maxout(odd), Err(Error::OddDimension(3))));
}

#[test]
fn maxout_gradient_matches_finite_differences() {
    // Seed-0 uniform draws are tie-free.
    let mut s = store_with(&[("x", vec![3, 6]), ("w", vec![3, 3])], 0);
    check_param_grads(&mut s, 1e-6, |t| {
        let p = t.params();
        let (x, w) = (t.param(p.id("x").unwrap()), t.param(p.id("w").unwrap()));
        let m = t.maxout(x).unwrap();
        let y = t.mul(m, w).unwrap();
        t.sum_all(y)
    });
}

fn lstm_store(n_in: usize, d: usize, seed: u64) -> ParamStore {
    store_with(
        &[
            ("wx", vec![n_in, 4 * d]),
            ("wh", vec![d, 4 * d]),
            ("b", vec![4 * d]),
            ("x", vec![n_in]),
            ("x2", vec![n_in]),
            ("hc", vec![2 * d]),
        ],
        seed,
    )
}

#[test]
fn lstm_zero_params_give_zero_state() {
    let mut s = ParamStore::new();
    let wx = s.insert("wx", Tensor::zeros(&[3, 8]), true).unwrap();
    let wh = s.insert("wh", Tensor::zeros(&[2, 8]), true).unwrap();
    let b = s.insert("b", Tensor::zeros(&[8]), true).unwrap();
    let mut t = Tape::new(&s);
    let (wx, wh, b) = (t.param(wx), t.param(wh), t.param(b));
    let x = t.vector(vec![0.3, -7.0, 2.0]);
    let hc = t.vector(vec![0.0; 4]);
    let out = t.lstm_step(x, hc, wx, wh, b).unwrap();
    assert_eq!(t.value(out), &[0.0; 4]);
}

#[test]
fn lstm_step_rejects_bad_dimensions() {
    let s = lstm_store(3, 2, 0);
    let mut t = Tape::new(&s);
    let p = t.params();
    let (wx, wh, b) = (t.param(p.id("wx").unwrap()), t.param(p.id("wh").unwrap()), t.param(p.id("b").unwrap()));
    let x = t.vector(vec![1.0; 4]);
    let hc = t.vector(vec![0.0; 4]);
    assert!(matches!(t.lstm_step(x, hc, wx, wh, b), Err(Error::Shape { .. })));
}

#[test]
fn lstm_single_step_gradient() {
    let mut s = lstm_store(3, 4, 3);
    check_param_grads(&mut s, 1e-5, |t| {
        let p = t.params();
        let v = |t: &mut Tape, n: &str| t.param(p.id(n).unwrap());
        let (wx, wh, b, x, hc) = (v(t, "wx"), v(t, "wh"), v(t, "b"), v(t, "x"), v(t, "hc"));
        let out = t.lstm_step(x, hc, wx, wh, b).unwrap();
        let sq = t.mul(out, out).unwrap();
        t.sum_all(sq)
    });
}

#[test]
fn lstm_two_step_gradient_through_state() {
    let mut s = lstm_store(3, 4, 4);
    check_param_grads(&mut s, 1e-5, |t| {
        let p = t.params();
        let v = |t: &mut Tape, n: &str| t.param(p.id(n).unwrap());
        let (wx, wh, b, x, x2, hc) = (v(t, "wx"), v(t, "wh"), v(t, "b"), v(t, "x"), v(t, "x2"), v(t, "hc"));
        let s1 = t.lstm_step(x, hc, wx, wh, b).unwrap();
        let s2 = t.lstm_step(x2, s1, wx, wh, b).unwrap();
        let h = t.slice(s2, 0, 4).unwrap();
        let th = t.tanh(h);
        t.sum_all(th)
    });
}

#[test]
fn lstm_sequence_matches_unrolled_steps() {
    let (n_in, d, steps) = (3, 4, 5);
    let mut s = lstm_store(n_in, d, 5);
    s.insert("xs", Tensor::uniform(&[steps, n_in], 1.0, &mut stream(9, "xs")), true).unwrap();
    for reverse in [false, true] {
        let mut t = Tape::new(&s);
        let p = t.params();
        let v = |t: &mut Tape, n: &str| t.param(p.id(n).unwrap());
        let (wx, wh, b) = (v(&mut t, "wx"), v(&mut t, "wh"), v(&mut t, "b"));
        let xs = v(&mut t, "xs");
        let seq = t.lstm_sequence(xs, wx, wh, b, reverse).unwrap();
        let xs_val = s.by_name("xs").unwrap().value.data().to_vec();
        let mut hc = t.vector(vec![0.0; 2 * d]);
        let order: Vec<usize> = if reverse { (0..steps).rev().collect() } else { (0..steps).collect() };
        for step in order {
            let x = t.vector(xs_val[step * n_in..(step + 1) * n_in].to_vec());
            hc = t.lstm_step(x, hc, wx, wh, b).unwrap();
            assert_eq!(&t.value(seq)[step * d..(step + 1) * d], &t.value(hc)[..d]);
        }
    }
}

#[test]
fn lstm_sequence_gradient_both_directions() {
    let (n_in, d, steps) = (3, 3, 4);
    for reverse in [false, true] {
        let mut s = store_with(
            &[
                ("wx", vec![n_in, 4 * d]),
                ("wh", vec![d, 4 * d]),
                ("b", vec![4 * d]),
                ("xs", vec![steps, n_in]),
                ("w", vec![steps, d]),
            ],
            6,
        );
        check_param_grads(&mut s, 1e-5, |t| {
            let p = t.params();
            let v = |t: &mut Tape, n: &str| t.param(p.id(n).unwrap());
            let (wx, wh, b, xs, w) = (v(t, "wx"), v(t, "wh"), v(t, "b"), v(t, "xs"), v(t, "w"));
            let hs = t.lstm_sequence(xs, wx, wh, b, reverse).unwrap();
            let m = t.mul(hs, w).unwrap();
            t.sum_all(m)
        });
    }
}

#[test]
fn attention_ops_gradients() {
    let (steps, a, dim) = (6, 4, 3);
    let mut s = store_with(
        &[("hproj", vec![steps, a]), ("sproj", vec![a]), ("v", vec![a, 1]), ("h", vec![steps, dim]), ("w", vec![dim])],
        7,
    );
    check_param_grads(&mut s, 1e-6, |t| {
        let p = t.params();
        let v = |t: &mut Tape, n: &str| t.param(p.id(n).unwrap());
        let (hp, sp, vv, h, w) = (v(t, "hproj"), v(t, "sproj"), v(t, "v"), v(t, "h"), v(t, "w"));
        let e = t.attention_energy(hp, sp, vv, 1, 5).unwrap();
        let alpha = t.softmax(e, None).unwrap();
        let c = t.weighted_rows(alpha, h, 1).unwrap();
        let m = t.mul(c, w).unwrap();
        t.sum_all(m)
    });
}

#[test]
fn structural_op_gradients() {
    let mut s =
        store_with(&[("a", vec![4, 2]), ("b", vec![4, 3]), ("tab", vec![5, 2]), ("w", vec![2, 5]), ("u", vec![3])], 8);
    check_param_grads(&mut s, 1e-6, |t| {
        let p = t.params();
        let v = |t: &mut Tape, n: &str| t.param(p.id(n).unwrap());
        let (a, b, tab, w, u) = (v(t, "a"), v(t, "b"), v(t, "tab"), v(t, "w"), v(t, "u"));
        let cat = t.concat_cols(a, b).unwrap();
        let pooled = t.max_pool_time(cat, 2).unwrap();
        let sq = t.mul(pooled, pooled).unwrap();
        let s1 = t.sum_all(sq);
        let rows = t.embed(tab, &[3, 1, 3]).unwrap();
        let proj = t.linear(rows, w, None).unwrap();
        let tanh = t.tanh(proj);
        let s2 = t.sum_all(tanh);
        let e = t.embed(tab, &[4]).unwrap();
        let joined = t.concat(&[e, u]).unwrap();
        let part = t.slice(joined, 1, 4).unwrap();
        let nll = t.nll_of_logits(part, 2).unwrap();
        let bce = t.bce_with_logits(joined, &[1.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        t.sum(&[s1, s2, nll, bce]).unwrap()
    });
}

#[test]
fn nll_rejects_out_of_range_targets() {
    let s = ParamStore::new();
    let mut t = Tape::new(&s);
    let x = t.vector(vec![0.0; 3]);
    assert!(matches!(t.nll_of_logits(x, 3), Err(Error::LabelOutOfRange { .. })));
}

#[test]
fn input_gradients_match_finite_differences() {
    let s = store_with(&[("w", vec![4, 6])], 10);
    let x0 = random_vec(4, 11);
    let f = |x: &[f64]| {
        let mut t = Tape::new(&s);
        let w = t.param(s.id("w").unwrap());
        let xv = t.vector(x.to_vec());
        let y = t.linear(xv, w, None).unwrap();
        let m = t.maxout(y).unwrap();
        let p = t.softmax(m, None).unwrap();
        let l = t.nll_of_logits(p, 1).unwrap();
        t.scalar(l)
    };
    let numeric = numeric_grad(&x0, 1e-5, f);
    let mut t = Tape::new(&s);
    let w = t.param(s.id("w").unwrap());
    let xv = t.vector(x0.clone());
    let y = t.linear(xv, w, None).unwrap();
    let m = t.maxout(y).unwrap();
    let p = t.softmax(m, None).unwrap();
    let l = t.nll_of_logits(p, 1).unwrap();
    let g = t.backward(l);
    assert!(relative_error(g.wrt(xv).unwrap(), &numeric) < 1e-6);
}

#[test]
fn ops_are_deterministic() {
    let s = lstm_store(3, 4, 12);
    let run = || {
        let mut t = Tape::new(&s);
        let p = t.params();
        let v = |t: &mut Tape, n: &str| t.param(p.id(n).unwrap());
        let (wx, wh, b, x, hc) = (v(&mut t, "wx"), v(&mut t, "wh"), v(&mut t, "b"), v(&mut t, "x"), v(&mut t, "hc"));
        let out = t.lstm_step(x, hc, wx, wh, b).unwrap();
        let l = t.sum_all(out);
        let g = t.backward(l).into_param_grads();
        (t.value(out).to_vec(), g)
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn softmax_sums_to_one(values in prop::collection::vec(-50.0f64..50.0, 1..16), mask_bits in any::<u16>()) {
        let n = values.len();
        let mut mask: Vec<bool> = (0..n).map(|i| mask_bits >> i & 1 == 1).collect();
        mask[0] = true;
        let p = kernels::masked_softmax(&values, Some(&mask)).unwrap();
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (pi, keep) in p.iter().zip(&mask) {
            prop_assert!(*pi >= 0.0);
            if !keep { prop_assert_eq!(*pi, 0.0); }
        }
    }

    #[test]
    fn random_lstm_gradients_match(seed in 0u64..1000) {
        let mut s = lstm_store(2, 3, seed);
        check_param_grads(&mut s, 1e-4, |t| {
            let p = t.params();
            let v = |t: &mut Tape, n: &str| t.param(p.id(n).unwrap());
            let (wx, wh, b, x, hc) = (v(t, "wx"), v(t, "wh"), v(t, "b"), v(t, "x"), v(t, "hc"));
            let out = t.lstm_step(x, hc, wx, wh, b).unwrap();
            let th = t.tanh(out);
            t.sum_all(th)
        });
    }
}
