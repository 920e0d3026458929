//! Short-time power spectra and cepstrally smoothed envelopes.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::mcc::ENVELOPE_FLOOR;
use super::window::hann;

pub struct EnvelopeAnalyzer {
    window: Vec<f64>,
    fft_size: usize,
    lifter: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl EnvelopeAnalyzer {
    pub fn new(window: usize, fft_size: usize, lifter: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            window: hann(window),
            fft_size,
            lifter,
            forward: planner.plan_fft_forward(fft_size),
            inverse: planner.plan_fft_inverse(fft_size),
            buf: vec![Complex64::default(); fft_size],
        }
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// `|FFT(w·x)|²` over the non-negative bins. `frame` may be shorter than
    /// the window (the tail counts as zeros).
    pub fn power(&mut self, frame: &[f64]) -> Vec<f64> {
        self.buf.fill(Complex64::default());
        for (i, (&x, &w)) in frame.iter().zip(&self.window).enumerate() {
            self.buf[i].re = x * w;
        }
        self.forward.process(&mut self.buf);
        self.buf[..self.bins()].iter().map(|c| c.norm_sqr()).collect()
    }

    /// Power spectrum smoothed by keeping the low quefrencies of its log.
    pub fn envelope(&mut self, frame: &[f64]) -> Vec<f64> {
        let power = self.power(frame);
        let n = self.fft_size;
        let k = self.bins();
        for i in 0..n {
            let src = if i < k { i } else { n - i };
            self.buf[i] = Complex64::new(power[src].max(ENVELOPE_FLOOR).ln(), 0.0);
        }
        self.inverse.process(&mut self.buf);
        let scale = 1.0 / n as f64;
        for i in 0..n {
            let q = i.min(n - i);
            if q >= self.lifter {
                self.buf[i] = Complex64::default();
            } else {
                self.buf[i] *= scale;
            }
        }
        self.forward.process(&mut self.buf);
        self.buf[..k]
            .iter()
            .map(|c| c.re.exp().max(ENVELOPE_FLOOR))
            .collect()
    }
}
