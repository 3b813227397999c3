// Shared helpers for the integration tests. Included with `mod common;`.
#![allow(dead_code)]

use oucr::tensor::{Graph, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rand_tensor(shape: &[usize], lo: f64, hi: f64, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.gen_range(lo..hi))
}

/// Values in `[-hi, -lo] u [lo, hi]`, away from kinks at zero.
pub fn rand_signed(shape: &[usize], lo: f64, hi: f64, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| {
        let m = rng.gen_range(lo..hi);
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    })
}

/// Reduces `out` to a scalar with a fixed random weighting so that every
/// output element contributes a distinct sensitivity.
fn reduce(g: &mut Graph<f64>, out: Var) -> Var {
    if g.value(out).numel() == 1 && g.value(out).shape().is_empty() {
        return out;
    }
    let shape = g.value(out).shape().to_vec();
    let r = g.constant(rand_tensor(&shape, -1.0, 1.0, 9_999));
    let m = g.mul(out, r).unwrap();
    g.sum(m)
}

fn loss_value(inputs: &[Tensor<f64>], f: &dyn Fn(&mut Graph<f64>, &[Var]) -> Var) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), false)).collect();
    let out = f(&mut g, &vars);
    let l = reduce(&mut g, out);
    g.value(l).data()[0]
}

/// Largest relative error `|a - n| / max(|a|, |n|)` over inputs, measured
/// per input tensor in the l2 norm, between reverse-mode gradients and
/// central differences with step `h`.
pub fn gradcheck(inputs: &[Tensor<f64>], h: f64, f: &dyn Fn(&mut Graph<f64>, &[Var]) -> Var) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let out = f(&mut g, &vars);
    let l = reduce(&mut g, out);
    g.backward(l).unwrap();
    let mut worst: f64 = 0.0;
    for (i, t) in inputs.iter().enumerate() {
        let analytic = g.grad(vars[i]).expect("input reaches the loss").data().to_vec();
        let mut numeric = vec![0.0; t.numel()];
        for k in 0..t.numel() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[k] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[k] -= h;
            numeric[k] = (loss_value(&plus, f) - loss_value(&minus, f)) / (2.0 * h);
        }
        let diff = analytic.iter().zip(&numeric).map(|(a, n)| (a - n) * (a - n)).sum::<f64>().sqrt();
        let na = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nn = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = na.max(nn);
        if scale > 0.0 {
            worst = worst.max(diff / scale);
        }
    }
    worst
}
