//! Pulse/noise source-filter synthesis.
//!
//! Excitation is a phase-continuous pulse train (voiced) mixed with Gaussian
//! noise by the per-frame aperiodicity. Each hop of excitation is windowed,
//! filtered by the minimum-phase response of that frame's envelope and
//! overlap-added. Envelopes are scaled so that analysing unit-power
//! excitation through a frame filter gives back that frame's envelope.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::config::SynthesisConfig;
use super::features::FeatureSet;
use super::mcc::{decode_with, MelBasis};
use super::wav::Waveform;
use super::window::{energy, hann};
use crate::error::{EmovcError, Result};

struct MinPhase {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl MinPhase {
    fn new(n: usize, planner: &mut FftPlanner<f64>) -> Self {
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            buf: vec![Complex64::default(); n],
        }
    }

    /// Impulse response (length n) whose magnitude is `sqrt(power·gain)`.
    fn impulse(&mut self, power: &[f64], gain: f64) -> Vec<f64> {
        let n = self.n;
        let k = n / 2 + 1;
        debug_assert_eq!(power.len(), k);
        for i in 0..n {
            let src = if i < k { i } else { n - i };
            self.buf[i] = Complex64::new(0.5 * (power[src] * gain).ln(), 0.0);
        }
        self.inverse.process(&mut self.buf);
        let scale = 1.0 / n as f64;
        // Fold the real cepstrum onto positive quefrencies.
        for i in 0..n {
            let w = if i == 0 || i == n / 2 {
                1.0
            } else if i < n / 2 {
                2.0
            } else {
                0.0
            };
            self.buf[i] = Complex64::new(self.buf[i].re * scale * w, 0.0);
        }
        self.forward.process(&mut self.buf);
        for c in self.buf.iter_mut() {
            *c = c.exp();
        }
        self.inverse.process(&mut self.buf);
        self.buf.iter().map(|c| c.re * scale).collect()
    }
}

/// F0 per sample and voicing, holding frame values around frame centres
/// and interpolating between voiced neighbours.
fn sample_f0(fs: &FeatureSet, cfg: &SynthesisConfig, len: usize) -> Vec<f64> {
    let t_count = fs.frames();
    let half = cfg.window as f64 / 2.0;
    let shift = cfg.shift as f64;
    (0..len)
        .map(|n| {
            let pos = ((n as f64 - half) / shift).clamp(0.0, (t_count - 1) as f64);
            let t0 = pos.floor() as usize;
            let t1 = (t0 + 1).min(t_count - 1);
            let frac = pos - t0 as f64;
            let near = if frac < 0.5 { t0 } else { t1 };
            if !fs.voicing[near] {
                0.0
            } else if fs.voicing[t0] && fs.voicing[t1] {
                fs.f0[t0] * (1.0 - frac) + fs.f0[t1] * frac
            } else {
                fs.f0[near]
            }
        })
        .collect()
}

/// Render a waveform of `(T−1)·shift + window` samples.
pub fn synthesize(fs: &FeatureSet, cfg: &SynthesisConfig) -> Result<Waveform> {
    fs.validate()?;
    let t_count = fs.frames();
    if t_count == 0 {
        return Err(EmovcError::InsufficientInput("feature set has no frames".into()));
    }
    if cfg.shift == 0 || cfg.window == 0 || !cfg.fft_size.is_power_of_two() {
        return Err(EmovcError::Config("invalid synthesis framing".into()));
    }
    let sr = cfg.sample_rate as f64;
    let len = (t_count - 1) * cfg.shift + cfg.window;
    let basis = MelBasis::new(cfg.fft_size / 2 + 1, fs.order(), cfg.warp)?;
    let envelopes = decode_with(&basis, &fs.mcc)?;

    // Excitation.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f0 = sample_f0(fs, cfg, len);
    let half = cfg.window as f64 / 2.0;
    let mut excitation = vec![0.0; len];
    let mut phase = 0.0;
    for n in 0..len {
        let noise: f64 = StandardNormal.sample(&mut rng);
        let t = (((n as f64 - half) / cfg.shift as f64).round().max(0.0) as usize).min(t_count - 1);
        excitation[n] = if f0[n] > 0.0 {
            phase += f0[n] / sr;
            let pulse = if phase >= 1.0 {
                phase -= phase.floor();
                (sr / f0[n]).sqrt()
            } else {
                0.0
            };
            let ap = fs.aperiodicity[t];
            (1.0 - ap).sqrt() * pulse + ap.sqrt() * noise
        } else {
            phase = 0.0;
            noise
        };
    }

    // Filtering and overlap-add.
    let seg_len = 2 * cfg.shift;
    let taper = hann(seg_len);
    let gain = 1.0 / energy(&hann(cfg.window));
    let mut planner = FftPlanner::new();
    let mut minphase = MinPhase::new(cfg.fft_size, &mut planner);
    let conv_n = (seg_len + cfg.fft_size - 1).next_power_of_two();
    let conv_fwd = planner.plan_fft_forward(conv_n);
    let conv_inv = planner.plan_fft_inverse(conv_n);
    let mut xa = vec![Complex64::default(); conv_n];
    let mut ha = vec![Complex64::default(); conv_n];
    let mut out = vec![0.0; len];
    for t in 0..t_count {
        if fs.energy[t] == 0.0 {
            continue;
        }
        let centre = (t * cfg.shift + cfg.window / 2) as isize;
        let start = centre - cfg.shift as isize;
        xa.fill(Complex64::default());
        for i in 0..seg_len {
            let idx = start + i as isize;
            if idx >= 0 && (idx as usize) < len {
                xa[i].re = excitation[idx as usize] * taper[i];
            }
        }
        let h = minphase.impulse(&envelopes[t], gain);
        ha.fill(Complex64::default());
        for (dst, &v) in ha.iter_mut().zip(&h) {
            dst.re = v;
        }
        conv_fwd.process(&mut xa);
        conv_fwd.process(&mut ha);
        for (x, y) in xa.iter_mut().zip(&ha) {
            *x *= *y;
        }
        conv_inv.process(&mut xa);
        let scale = 1.0 / conv_n as f64;
        for (i, c) in xa.iter().enumerate() {
            let idx = start + i as isize;
            if idx >= 0 && (idx as usize) < len {
                out[idx as usize] += c.re * scale;
            }
        }
    }
    Waveform::new(out, cfg.sample_rate)
}
