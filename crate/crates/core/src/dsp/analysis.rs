use super::config::AnalysisConfig;
use super::features::FeatureSet;
use super::mcc::{decode_with, encode_with, energy_contour, MelBasis};
use super::pitch::PitchTracker;
use super::spectrum::EnvelopeAnalyzer;
use super::wav::Waveform;
use crate::error::{EmovcError, Result};

/// Frame a waveform and extract mel-cepstra, F0/voicing, energy and the
/// aperiodicity stub.
///
/// Energy is the bin sum of the envelope decoded from the mel-cepstra, the
/// same functional the converter rescales against.
pub fn analyze(w: &Waveform, cfg: &AnalysisConfig) -> Result<FeatureSet> {
    cfg.validate()?;
    if w.sample_rate != cfg.sample_rate {
        return Err(EmovcError::Config(format!(
            "waveform is {} Hz, analysis expects {} Hz",
            w.sample_rate, cfg.sample_rate
        )));
    }
    if w.len() < cfg.window {
        return Err(EmovcError::InsufficientInput(format!(
            "{} samples is shorter than one {}-sample window",
            w.len(),
            cfg.window
        )));
    }
    let t_count = cfg.frame_count(w.len());
    let mut env = EnvelopeAnalyzer::new(cfg.window, cfg.fft_size, cfg.lifter);
    let envelopes: Vec<Vec<f64>> = (0..t_count)
        .map(|t| {
            let s = t * cfg.shift;
            env.envelope(&w.samples[s..s + cfg.window])
        })
        .collect();
    let basis = MelBasis::new(cfg.bins(), cfg.order, cfg.warp)?;
    let mcc = encode_with(&basis, &envelopes)?;
    let energy = energy_contour(&decode_with(&basis, &mcc)?);

    let pitch = PitchTracker::new(cfg).track(&w.samples);
    let aperiodicity = pitch
        .voicing
        .iter()
        .zip(&pitch.strength)
        .map(|(&v, &s)| if v { (1.0 - s).clamp(0.0, 1.0) } else { 1.0 })
        .collect();
    FeatureSet::new(
        mcc,
        pitch.f0,
        pitch.voicing,
        energy,
        cfg.frame_shift_seconds(),
        aperiodicity,
    )
}
