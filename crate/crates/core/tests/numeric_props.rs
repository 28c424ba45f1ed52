use airdelay_core::tensor::{finite_diff_check, probe_weights, Result, Tape, Tensor, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

const GRAD_TOL: f64 = 1e-4;

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn away_from_kink(v: &[f64]) -> bool {
    v.iter().all(|x| x.abs() > 1e-3)
}

fn probed(t: &mut Tape, out: Var) -> Result<Var> {
    let shape = t.shape(out).to_vec();
    let w = t.constant(Tensor::new(shape, probe_weights(t.value(out).numel()))?)?;
    let m = t.mul(out, w)?;
    t.sum(m)
}

// Same measure as `finite_diff_check` but against Richardson-extrapolated
// central differences, which stay accurate when a gradient entry is tiny.
// Returns None when a nonzero gradient entry is below 1e-6: there the
// backward pass's own round-off can reach the tolerance.
fn check(f: impl Fn(&mut Tape, Var) -> Result<Var>, x: Vec<f64>, shape: Vec<usize>) -> Option<f64> {
    let mut t = Tape::new();
    let xv = t.leaf("x", Tensor::new(shape.clone(), x.clone()).unwrap()).unwrap();
    let out = f(&mut t, xv).unwrap();
    let loss = probed(&mut t, out).unwrap();
    let analytic = t.backward(loss).unwrap().wrt(xv).data().to_vec();
    if analytic.iter().any(|g| *g != 0.0 && g.abs() < 1e-6) {
        return None;
    }
    let eval = |p: &[f64]| {
        let mut t = Tape::new();
        let xv = t.constant(Tensor::new(shape.clone(), p.to_vec()).unwrap()).unwrap();
        let out = f(&mut t, xv).unwrap();
        let loss = probed(&mut t, out).unwrap();
        t.value(loss).item()
    };
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let numeric = common::richardson_central_difference(
            |s| {
                let mut p = x.clone();
                p[i] += s;
                eval(&p)
            },
            1e-4,
        );
        worst = worst.max((analytic[i] - numeric).abs() / (numeric.abs() + 1e-8));
    }
    Some(worst)
}

fn five_node_graph(w: Tensor) -> impl Fn(&mut Tape, Var) -> Result<Var> {
    // five interior nodes: matmul → tanh → mul → softmax → layer_norm
    move |t, x| {
        let w = t.constant(w.clone())?;
        let h = t.matmul(x, w)?;
        let a = t.tanh(h)?;
        let m = t.mul(a, h)?;
        let c = t.concat(&[m, h], 1)?;
        let s = t.softmax_lastdim(c)?;
        t.layer_norm_lastdim(s)
    }
}

macro_rules! assert_grad {
    ($worst:expr, $tol:expr) => {{
        let worst = $worst;
        prop_assume!(worst.is_some());
        let worst = worst.unwrap();
        prop_assert!(worst < $tol, "{}", worst);
    }};
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matmul_gradients(x in vec_strategy(6), w in vec_strategy(12)) {
        let w = Tensor::new(vec![3, 4], w).unwrap();
        let worst = check(|t, x| { let w = t.constant(w.clone())?; t.matmul(x, w) }, x, vec![2, 3]);
        assert_grad!(worst, GRAD_TOL);
        // gradient with respect to the right operand
        let a = Tensor::new(vec![3, 4], vec![0.5; 12]).unwrap();
        let worst = finite_diff_check(|t, w| { let x = t.constant(a.clone())?; let wt = t.transpose(w)?; t.matmul(wt, x) }, &Tensor::new(vec![3, 2], vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6]).unwrap(), 1e-6).unwrap();
        prop_assert!(worst < GRAD_TOL);
    }

    #[test]
    fn add_sub_mul_gradients(x in vec_strategy(6), b in vec_strategy(3)) {
        let b = Tensor::new(vec![1, 3], b).unwrap();
        let worst = check(|t, x| {
            let b = t.constant(b.clone())?;
            let s = t.add(x, b)?;
            let d = t.sub(s, x)?;
            let m = t.mul(s, x)?;
            let m = t.mul(m, b)?;
            t.add(m, d)
        }, x, vec![2, 3]);
        assert_grad!(worst, GRAD_TOL);
    }

    #[test]
    fn concat_slice_scale_gradients(x in vec_strategy(8)) {
        let worst = check(|t, x| {
            let a = t.slice(x, 1, 0, 3)?;
            let b = t.slice(x, 1, 2, 2)?;
            let c = t.concat(&[b, a], 1)?;
            let c2 = t.mul(c, c)?;
            t.scale(c2, -1.5)
        }, x, vec![2, 4]);
        assert_grad!(worst, GRAD_TOL);
    }

    #[test]
    fn activation_gradients(x in vec_strategy(6).prop_filter("kink", |v| away_from_kink(v))) {
        for act in 0..4 {
            let worst = check(|t, x| match act {
                0 => t.elu(x),
                1 => t.sigmoid(x),
                2 => t.tanh(x),
                _ => t.relu(x),
            }, x.clone(), vec![6]);
            assert_grad!(worst, GRAD_TOL);
        }
    }

    #[test]
    fn softmax_gradients_and_simplex(x in vec_strategy(8)) {
        let worst = check(|t, x| t.softmax_lastdim(x), x.clone(), vec![2, 4]);
        assert_grad!(worst, GRAD_TOL);
        let keep = [true, false, true, true, true, true, false, false];
        let worst = check(|t, x| t.masked_softmax_lastdim(x, &keep), x.clone(), vec![2, 4]);
        assert_grad!(worst, GRAD_TOL);

        let mut tape = Tape::new();
        let v = tape.constant(Tensor::new(vec![2, 4], x).unwrap()).unwrap();
        let y = tape.softmax_lastdim(v).unwrap();
        for row in tape.value(y).data().chunks(4) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn layer_norm_gradients_and_moments(x in vec_strategy(16)) {
        let worst = check(|t, x| t.layer_norm_lastdim(x), x.clone(), vec![2, 8]);
        assert_grad!(worst, GRAD_TOL);

        let mut tape = Tape::new();
        let v = tape.constant(Tensor::new(vec![2, 8], x.clone()).unwrap()).unwrap();
        let y = tape.layer_norm_lastdim(v).unwrap();
        for (row, src) in tape.value(y).data().chunks(8).zip(x.chunks(8)) {
            let mean = row.iter().sum::<f64>() / 8.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
            prop_assert!(mean.abs() < 1e-10);
            // the epsilon inside the square root shrinks the variance slightly
            let src_mean = src.iter().sum::<f64>() / 8.0;
            let src_var = src.iter().map(|v| (v - src_mean).powi(2)).sum::<f64>() / 8.0;
            let expected = src_var / (src_var + 1e-5);
            prop_assert!((var - expected).abs() < 1e-12);
            if src_var > 1e-2 {
                prop_assert!((var - 1.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn dropout_embedding_reduction_gradients(x in vec_strategy(6)) {
        let mask = Tensor::new(vec![3, 2], vec![2.0, 0.0, 2.0, 2.0, 0.0, 2.0]).unwrap();
        let worst = check(|t, x| {
            let d = t.dropout_with_mask(x, &mask)?;
            let e = t.embedding_lookup(d, &[2, 0, 2])?;
            let m = t.mean(e)?;
            let s = t.reshape(e, &[6])?;
            let s = t.mul(s, s)?;
            let s = t.sum(s)?;
            t.add(s, m)
        }, x, vec![3, 2]);
        assert_grad!(worst, GRAD_TOL);
    }

    #[test]
    fn random_graph_matches_finite_differences(x in vec_strategy(4), w in vec_strategy(8)) {
        let w = Tensor::new(vec![4, 2], w).unwrap();
        assert_grad!(check(five_node_graph(w), x, vec![1, 4]), 1e-5);
    }
}

#[test]
fn backward_twice_is_deterministic() {
    let mut tape = Tape::new();
    let x = tape
        .leaf("x", Tensor::new(vec![2, 3], vec![0.1, -0.4, 0.9, 1.3, -2.0, 0.5]).unwrap())
        .unwrap();
    let w = tape
        .leaf("w", Tensor::new(vec![3, 3], (0..9).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap())
        .unwrap();
    let h = tape.matmul(x, w).unwrap();
    let h = tape.elu(h).unwrap();
    let h = tape.layer_norm_lastdim(h).unwrap();
    let h = tape.softmax_lastdim(h).unwrap();
    let h = tape.mul(h, h).unwrap();
    let loss = tape.sum(h).unwrap();
    let g1 = tape.backward(loss).unwrap().named();
    let g2 = tape.backward(loss).unwrap().named();
    assert_eq!(g1, g2);
}

#[test]
fn layer_norm_at_random_point() {
    let x = Tensor::new(vec![8], (0..8).map(|i| ((i * 31 % 11) as f64 - 5.0) / 3.0).collect()).unwrap();
    let worst = finite_diff_check(|t, x| t.layer_norm_lastdim(x), &x, 1e-6).unwrap();
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn seeded_random_graph_at_step_1e6() {
    let mut rng = ChaCha8Rng::seed_from_u64(57);
    let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let w = Tensor::new(vec![4, 2], (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
    let x = Tensor::new(vec![1, 4], x).unwrap();
    let worst = finite_diff_check(five_node_graph(w), &x, 1e-6).unwrap();
    assert!(worst < 1e-5, "{worst}");
}


