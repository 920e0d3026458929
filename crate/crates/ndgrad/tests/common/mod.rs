#![allow(dead_code)]

use ndgrad::gradcheck::{l2_norm, numeric_gradient, relative_error_floored};
use ndgrad::{mul, sum, Tensor64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Values bounded away from zero (for kinked activations).
pub fn off_kink(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m = rng.gen_range(0.05..1.5);
            if rng.gen_bool(0.5) { m } else { -m }
        })
        .collect()
}

/// Worst relative error, over all inputs, between the backward gradient of
/// `Σ f(inputs) ⊙ R` (random projection `R`) and central differences.
pub fn max_grad_error(
    inputs: &[(Vec<usize>, Vec<f64>)],
    f: impl Fn(&[Tensor64]) -> Tensor64,
    seed: u64,
    h: f64,
) -> f64 {
    let leaves: Vec<Tensor64> = inputs
        .iter()
        .map(|(s, v)| Tensor64::leaf(s, v.clone()).unwrap())
        .collect();
    let out = f(&leaves);
    let mut r = rng(seed ^ 0xA5A5);
    let proj = Tensor64::new(out.shape(), uniform(&mut r, out.numel(), -1.0, 1.0)).unwrap();
    sum(&mul(&out, &proj).unwrap()).backward().unwrap();

    // Per-input relative error, floored at 1e-3 of the overall gradient norm.
    let mut pairs = Vec::new();
    for i in 0..inputs.len() {
        let analytic = leaves[i].grad().expect("gradient populated");
        let numeric = numeric_gradient(
            |x| {
                let ts: Vec<Tensor64> = inputs
                    .iter()
                    .enumerate()
                    .map(|(j, (s, v))| {
                        let vals = if i == j { x.to_vec() } else { v.clone() };
                        Tensor64::new(s, vals).unwrap()
                    })
                    .collect();
                let y = f(&ts);
                y.data().iter().zip(proj.data()).map(|(a, b)| a * b).sum()
            },
            &inputs[i].1,
            h,
        );
        pairs.push((analytic, numeric));
    }
    let total = pairs.iter().map(|(a, _)| l2_norm(a).powi(2)).sum::<f64>().sqrt();
    pairs
        .iter()
        .map(|(a, n)| relative_error_floored(a, n, 1e-3 * total))
        .fold(0.0, f64::max)
}
