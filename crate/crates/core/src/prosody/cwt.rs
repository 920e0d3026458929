//! Mexican-hat continuous wavelet transform on ten dyadic scales.
//!
//! Analysis uses L2-normalized wavelets `s^{-1/2}·ψ(n/s)` at scales
//! 2, 4, ..., 1024 frames. The approximate inverse sums the scale rows with
//! weights `(i + 2.5)^{-5/2}` and divides by the mean band gain of that
//! weighted filter bank, which keeps the output on the input's scale. Both
//! directions are linear.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::track::{mean_std, normalize, ProsodyTrack};
use crate::error::{EmovcError, Result};
use crate::model::CWT_SCALES;

pub const BASE_SCALE: f64 = 2.0;
/// Minimum contour length accepted by [`cwt_decompose`].
pub const MIN_FRAMES: usize = 16;
/// Wavelet half-support in units of the scale.
const SUPPORT: f64 = 5.0;

pub fn scales() -> [f64; CWT_SCALES] {
    std::array::from_fn(|i| BASE_SCALE * 2f64.powi(i as i32))
}

pub fn reconstruction_weight(i: usize) -> f64 {
    (i as f64 + 2.5).powf(-2.5)
}

/// Mexican hat with unit L2 norm.
pub fn mexican_hat(t: f64) -> f64 {
    let c = 2.0 / (3f64.sqrt() * PI.powf(0.25));
    c * (1.0 - t * t) * (-0.5 * t * t).exp()
}

/// Continuous-time Fourier magnitude of [`mexican_hat`] at angular frequency `w`.
pub fn mexican_hat_spectrum(w: f64) -> f64 {
    let c = 2.0 / (3f64.sqrt() * PI.powf(0.25));
    c * (2.0 * PI).sqrt() * w * w * (-0.5 * w * w).exp()
}

/// Response of the weighted reconstruction filter bank at `w` rad/frame.
pub fn reconstruction_response(w: f64) -> f64 {
    scales()
        .iter()
        .enumerate()
        .map(|(i, &s)| reconstruction_weight(i) * s.sqrt() * mexican_hat_spectrum(s * w))
        .sum()
}

/// Mean of [`reconstruction_response`] over log frequency between the peak
/// frequencies of the largest and smallest scales.
pub fn reconstruction_gain() -> f64 {
    let sc = scales();
    let lo = 2.5f64.sqrt() / sc[CWT_SCALES - 1];
    let hi = 2.5f64.sqrt() / sc[0];
    let n = 400;
    (0..n)
        .map(|k| {
            let w = lo * (hi / lo).powf((k as f64 + 0.5) / n as f64);
            reconstruction_response(w)
        })
        .sum::<f64>()
        / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwtMatrix {
    /// `CWT_SCALES` rows of T coefficients.
    pub coeffs: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
    /// Statistics of the contour before normalization.
    pub mean: f64,
    pub std: f64,
}

impl CwtMatrix {
    pub fn frames(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    /// One row per scale: `scale,c0,c1,...`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (row, scale) in self.coeffs.iter().zip(&self.scales) {
            let _ = write!(s, "{scale}");
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Raw transform of an arbitrary contour (no normalization). Linear in `x`.
pub fn cwt_transform(x: &[f64]) -> Vec<Vec<f64>> {
    let t = x.len();
    let sc = scales();
    let half: Vec<usize> = sc.iter().map(|s| (SUPPORT * s).ceil() as usize).collect();
    let pad = half[CWT_SCALES - 1];
    let padded_len = t + 2 * pad;
    let n = (padded_len + 2 * pad).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut sig = vec![Complex64::default(); n];
    for (k, s) in sig.iter_mut().take(padded_len).enumerate() {
        s.re = x[reflect(k as isize - pad as isize, t)];
    }
    fwd.process(&mut sig);

    let mut out = Vec::with_capacity(CWT_SCALES);
    let mut ker = vec![Complex64::default(); n];
    for (i, &s) in sc.iter().enumerate() {
        let h = half[i] as isize;
        ker.fill(Complex64::default());
        let norm = 1.0 / s.sqrt();
        for j in -h..=h {
            ker[j.rem_euclid(n as isize) as usize].re = norm * mexican_hat(j as f64 / s);
        }
        fwd.process(&mut ker);
        for (k, v) in ker.iter_mut().zip(&sig) {
            *k *= *v;
        }
        inv.process(&mut ker);
        let scale = 1.0 / n as f64;
        out.push((0..t).map(|k| ker[k + pad].re * scale).collect());
    }
    out
}

/// Weighted scale sum divided by [`reconstruction_gain`]. Linear.
pub fn inverse_transform(coeffs: &[Vec<f64>]) -> Vec<f64> {
    let t = coeffs.first().map_or(0, Vec::len);
    let g = reconstruction_gain();
    let mut out = vec![0.0; t];
    for (i, row) in coeffs.iter().enumerate() {
        let w = reconstruction_weight(i) / g;
        for (o, v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
    out
}

/// Normalize a continuous contour and decompose it.
pub fn cwt_decompose(track: &ProsodyTrack) -> Result<CwtMatrix> {
    if track.len() < MIN_FRAMES {
        return Err(EmovcError::InsufficientInput(format!(
            "contour has {} frames, need at least {MIN_FRAMES}",
            track.len()
        )));
    }
    if track.values.iter().any(|v| !v.is_finite()) {
        return Err(EmovcError::Contract("contour must be finite (interpolate first)".into()));
    }
    let (mean, std) = mean_std(&track.values);
    if !(std > 1e-12 * mean.abs().max(1.0)) {
        return Err(EmovcError::DegenerateContour(format!(
            "contour variance is zero (std {std})"
        )));
    }
    let z = normalize(&track.values, mean, std)?;
    Ok(CwtMatrix {
        coeffs: cwt_transform(&z),
        scales: scales().to_vec(),
        mean,
        std,
    })
}

/// Approximate inverse followed by denormalization with the recorded
/// statistics. The result is in the log domain; the mask is all-valid.
pub fn cwt_reconstruct(m: &CwtMatrix) -> Result<ProsodyTrack> {
    if m.coeffs.len() != CWT_SCALES {
        return Err(EmovcError::Contract(format!(
            "expected {CWT_SCALES} scale rows, got {}",
            m.coeffs.len()
        )));
    }
    let t = m.frames();
    if m.coeffs.iter().any(|r| r.len() != t) {
        return Err(EmovcError::Contract("scale rows differ in length".into()));
    }
    if !(m.std > 0.0) {
        return Err(EmovcError::DegenerateContour(format!("std {} is not positive", m.std)));
    }
    let z = inverse_transform(&m.coeffs);
    Ok(ProsodyTrack {
        values: z.iter().map(|v| v * m.std + m.mean).collect(),
        mask: vec![true; t],
        mean: m.mean,
        std: m.std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelet_has_unit_norm_and_zero_mean() {
        let dt = 1e-3;
        let (mut e, mut s) = (0.0, 0.0);
        let mut t = -12.0;
        while t < 12.0 {
            e += mexican_hat(t).powi(2) * dt;
            s += mexican_hat(t) * dt;
            t += dt;
        }
        assert!((e - 1.0).abs() < 1e-6, "{e}");
        assert!(s.abs() < 1e-6);
    }

    #[test]
    fn reflect_indices() {
        let idx: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0]);
    }

    #[test]
    fn dyadic_scales() {
        let s = scales();
        assert_eq!(s[0], 2.0);
        assert_eq!(s[9], 1024.0);
        assert!(s.windows(2).all(|w| w[1] == 2.0 * w[0]));
    }

    #[test]
    fn zero_coefficients_give_the_mean() {
        let m = CwtMatrix {
            coeffs: vec![vec![0.0; 20]; CWT_SCALES],
            scales: scales().to_vec(),
            mean: 5.1,
            std: 0.3,
        };
        assert!(cwt_reconstruct(&m).unwrap().values.iter().all(|v| *v == 5.1));
    }

    #[test]
    fn constant_contour_is_degenerate() {
        let t = ProsodyTrack::dense(vec![4.2; 64]);
        assert!(matches!(cwt_decompose(&t), Err(EmovcError::DegenerateContour(_))));
    }
}
