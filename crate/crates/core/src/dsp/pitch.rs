//! Normalized-autocorrelation F0 tracking with parabolic peak refinement.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::config::AnalysisConfig;

/// Frames quieter than this RMS are unvoiced regardless of periodicity.
pub const SILENCE_RMS: f64 = 1e-5;

/// A peak within this fraction of the best one is preferred if it has a
/// shorter lag (suppresses octave-down errors).
const NEAR_BEST: f64 = 0.9;

/// Cutoff of the low-pass applied before autocorrelation.
pub const PITCH_LOWPASS_HZ: f64 = 1000.0;
const LOWPASS_TAPS: usize = 63;

/// Windowed-sinc low-pass, zero-phase (centred taps).
fn lowpass(samples: &[f64], cutoff: f64, fs: f64) -> Vec<f64> {
    let fc = cutoff / fs;
    let half = (LOWPASS_TAPS / 2) as isize;
    let taps: Vec<f64> = (-half..=half)
        .map(|i| {
            let x = i as f64;
            let sinc = if i == 0 { 2.0 * fc } else { (2.0 * PI * fc * x).sin() / (PI * x) };
            let w = 0.54 + 0.46 * (PI * x / (half as f64 + 1.0)).cos();
            sinc * w
        })
        .collect();
    let norm: f64 = taps.iter().sum();
    let n = samples.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &h) in taps.iter().enumerate() {
                let k = i + j as isize - half;
                if k >= 0 && k < n {
                    acc += h * samples[k as usize];
                }
            }
            acc / norm
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    /// Hz, 0 where unvoiced.
    pub f0: Vec<f64>,
    pub voicing: Vec<bool>,
    /// Peak normalized autocorrelation in [0, 1] (0 where no peak).
    pub strength: Vec<f64>,
}

pub struct PitchTracker {
    cfg: AnalysisConfig,
    seg_len: usize,
    lag_min: usize,
    lag_max: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl PitchTracker {
    pub fn new(cfg: &AnalysisConfig) -> Self {
        let fs = cfg.sample_rate as f64;
        let lag_min = ((fs / cfg.f0_max).floor() as usize).max(2);
        let lag_max = (fs / cfg.f0_min).ceil() as usize + 1;
        // About three periods of the lowest F0.
        let seg_len = cfg.window.max(3 * lag_max);
        let n = (2 * seg_len).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            cfg: cfg.clone(),
            seg_len,
            lag_min,
            lag_max,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            buf: vec![Complex64::default(); n],
        }
    }

    pub fn track(&mut self, samples: &[f64]) -> PitchTrack {
        let samples = &lowpass(samples, PITCH_LOWPASS_HZ, self.cfg.sample_rate as f64)[..];
        let t_count = self.cfg.frame_count(samples.len());
        let mut out = PitchTrack {
            f0: vec![0.0; t_count],
            voicing: vec![false; t_count],
            strength: vec![0.0; t_count],
        };
        let mut seg = vec![0.0; self.seg_len];
        for t in 0..t_count {
            let centre = (t * self.cfg.shift + self.cfg.window / 2) as isize;
            let start = centre - (self.seg_len / 2) as isize;
            for (i, s) in seg.iter_mut().enumerate() {
                let idx = start + i as isize;
                *s = if idx >= 0 && (idx as usize) < samples.len() {
                    samples[idx as usize]
                } else {
                    0.0
                };
            }
            if let Some((f0, strength)) = self.frame_pitch(&mut seg) {
                out.strength[t] = strength;
                if strength >= self.cfg.voicing_threshold {
                    out.f0[t] = f0;
                    out.voicing[t] = true;
                }
            }
        }
        out
    }

    /// (F0, peak strength) of one segment, or `None` for silence or no peak.
    fn frame_pitch(&mut self, seg: &mut [f64]) -> Option<(f64, f64)> {
        let n = seg.len();
        let mean = seg.iter().sum::<f64>() / n as f64;
        seg.iter_mut().for_each(|v| *v -= mean);
        let rms = (seg.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        if rms < SILENCE_RMS {
            return None;
        }

        self.buf.fill(Complex64::default());
        for (b, &v) in self.buf.iter_mut().zip(seg.iter()) {
            b.re = v;
        }
        self.forward.process(&mut self.buf);
        for b in self.buf.iter_mut() {
            *b = Complex64::new(b.norm_sqr(), 0.0);
        }
        self.inverse.process(&mut self.buf);
        let scale = 1.0 / self.buf.len() as f64;

        // Prefix sums of x² for the two overlapping energies.
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            cum[i + 1] = cum[i] + seg[i] * seg[i];
        }
        let lag_max = self.lag_max.min(n - 2);
        let nccf = |tau: usize, buf: &[Complex64]| -> f64 {
            let r = buf[tau].re * scale;
            let e0 = cum[n - tau];
            let e1 = cum[n] - cum[tau];
            let d = (e0 * e1).sqrt();
            if d > 0.0 {
                r / d
            } else {
                0.0
            }
        };
        let lo = self.lag_min.saturating_sub(1).max(1);
        let rho: Vec<f64> = (lo..=lag_max + 1).map(|tau| nccf(tau, &self.buf)).collect();
        let at = |tau: usize| rho[tau - lo];

        let mut peaks = Vec::new();
        for tau in self.lag_min..=lag_max {
            let v = at(tau);
            if v > 0.0 && v >= at(tau - 1) && v > at(tau + 1) {
                peaks.push((tau, v));
            }
        }
        let best = peaks.iter().map(|p| p.1).fold(0.0, f64::max);
        let &(tau, v) = peaks.iter().find(|p| p.1 >= NEAR_BEST * best)?;

        let (a, c) = (at(tau - 1), at(tau + 1));
        let denom = a - 2.0 * v + c;
        let delta = if denom < 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let f0 = self.cfg.sample_rate as f64 / (tau as f64 + delta);
        if f0 < self.cfg.f0_min || f0 > self.cfg.f0_max {
            return None;
        }
        Some((f0, v.clamp(0.0, 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn pulse_train(f0: f64, fs: f64, len: usize) -> Vec<f64> {
        let mut phase = 0.0;
        (0..len)
            .map(|_| {
                phase += f0 / fs;
                if phase >= 1.0 {
                    phase -= 1.0;
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn pulse_train_200hz() {
        let cfg = AnalysisConfig::default();
        let x = pulse_train(200.0, 16_000.0, 16_000);
        let p = PitchTracker::new(&cfg).track(&x);
        let mut v: Vec<f64> = p.f0.iter().copied().filter(|f| *f > 0.0).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = v[v.len() / 2];
        assert!((med - 200.0).abs() <= 4.0, "{med}");
    }

    #[test]
    fn silence_is_unvoiced() {
        let cfg = AnalysisConfig::default();
        let p = PitchTracker::new(&cfg).track(&vec![0.0; 8000]);
        assert!(p.voicing.iter().all(|v| !v));
        assert!(p.f0.iter().all(|f| *f == 0.0));
    }
}
