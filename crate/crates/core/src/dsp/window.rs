use std::f64::consts::PI;

/// Periodic Hann window (overlap-adds to a constant at hop `n/2`).
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

pub fn energy(w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum()
}
