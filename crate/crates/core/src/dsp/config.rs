use serde::{Deserialize, Serialize};

use crate::error::{EmovcError, Result};
use crate::model::MCC_ORDER;

/// Frame analysis settings. Defaults: 16 kHz, 25 ms window, 5 ms shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub sample_rate: u32,
    /// Window length in samples.
    pub window: usize,
    /// Frame shift in samples.
    pub shift: usize,
    pub fft_size: usize,
    pub order: usize,
    /// All-pass frequency warping constant.
    pub warp: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    /// Minimum normalized autocorrelation peak for a voiced frame.
    pub voicing_threshold: f64,
    /// Cepstral lifter cutoff (quefrency samples) for envelope smoothing.
    pub lifter: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            window: 400,
            shift: 80,
            fft_size: 512,
            order: MCC_ORDER,
            warp: 0.42,
            f0_min: 60.0,
            f0_max: 500.0,
            voicing_threshold: 0.5,
            lifter: 30,
        }
    }
}

impl AnalysisConfig {
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn frame_shift_seconds(&self) -> f64 {
        self.shift as f64 / self.sample_rate as f64
    }

    /// `floor((len − window)/shift) + 1`, or 0 when shorter than a window.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.window {
            0
        } else {
            (len - self.window) / self.shift + 1
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EmovcError::Config(m.to_string()));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive");
        }
        if self.window == 0 || self.shift == 0 {
            return bad("window and shift must be positive");
        }
        if !self.fft_size.is_power_of_two() || self.fft_size < self.window {
            return bad("fft_size must be a power of two no smaller than the window");
        }
        if self.order == 0 || self.order > self.bins() {
            return bad("order must be in 1..=fft_size/2+1");
        }
        if !(self.warp.abs() < 1.0) {
            return bad("warp must lie in (-1, 1)");
        }
        if !(self.f0_min > 0.0 && self.f0_min < self.f0_max)
            || self.f0_max >= self.sample_rate as f64 / 2.0
        {
            return bad("need 0 < f0_min < f0_max < sample_rate/2");
        }
        if self.lifter == 0 || self.lifter >= self.fft_size / 2 {
            return bad("lifter must be in 1..fft_size/2");
        }
        Ok(())
    }
}

/// Resynthesis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub sample_rate: u32,
    pub window: usize,
    pub shift: usize,
    pub fft_size: usize,
    pub warp: f64,
    /// Seed of the noise source.
    pub seed: u64,
}

impl SynthesisConfig {
    pub fn from_analysis(cfg: &AnalysisConfig, seed: u64) -> Self {
        Self {
            sample_rate: cfg.sample_rate,
            window: cfg.window,
            shift: cfg.shift,
            fft_size: cfg.fft_size,
            warp: cfg.warp,
            seed,
        }
    }
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self::from_analysis(&AnalysisConfig::default(), 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_count_formula() {
        let c = AnalysisConfig::default();
        assert_eq!(c.frame_count(16_000), 196);
        assert_eq!(c.frame_count(400), 1);
        assert_eq!(c.frame_count(399), 0);
        c.validate().unwrap();
    }
}
