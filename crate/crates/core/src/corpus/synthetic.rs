//! Pseudo-speech corpus with controlled per-emotion prosody.
//!
//! Each utterance is a run of syllables: an unvoiced onset followed by a
//! voiced nucleus whose envelope is a three-formant vowel shape under a
//! spectral tilt. Frame-level features are built directly, encoded to
//! mel-cepstra and rendered by the pulse/noise synthesizer.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::manifest::{CorpusManifest, UtteranceEntry};
use super::split::Split;
use crate::dsp::{
    energy_contour, mcc_decode_with, mcc_encode_with, synthesize, write_wav, AnalysisConfig,
    FeatureSet, MelBasis, SynthesisConfig,
};
use crate::error::{io_err, EmovcError, Result};

/// Absolute level applied to every envelope.
const LEVEL: f64 = 15.0;
const SILENCE_LEVEL: f64 = 1e-4 * LEVEL;
const EDGE_SILENCE: f64 = 0.1;
const VOWELS: [[f64; 3]; 5] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
];
const BANDWIDTHS: [f64; 3] = [90.0, 120.0, 180.0];
const FORMANT_GAINS: [f64; 3] = [1.0, 0.5, 0.25];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionPreset {
    pub name: String,
    pub f0_mean: f64,
    /// Peak-to-peak syllable pitch excursion, semitones.
    pub f0_range: f64,
    /// Amplitude multiplier.
    pub energy_scale: f64,
    /// Spectral tilt, dB per octave.
    pub tilt: f64,
    /// Seconds.
    pub duration: (f64, f64),
    /// Syllables per second.
    pub syllable_rate: f64,
}

impl EmotionPreset {
    pub fn neutral() -> Self {
        Self {
            name: "neutral".into(),
            f0_mean: 170.0,
            f0_range: 4.0,
            energy_scale: 1.0,
            tilt: -6.0,
            duration: (1.2, 2.0),
            syllable_rate: 4.5,
        }
    }

    pub fn sad() -> Self {
        Self {
            name: "sad".into(),
            f0_mean: 120.0,
            f0_range: 2.0,
            energy_scale: 0.5,
            tilt: -9.0,
            duration: (1.4, 2.2),
            syllable_rate: 3.2,
        }
    }

    pub fn angry() -> Self {
        Self {
            name: "angry".into(),
            f0_mean: 240.0,
            f0_range: 7.0,
            energy_scale: 2.0,
            tilt: -3.0,
            duration: (1.0, 1.8),
            syllable_rate: 5.5,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.f0_mean > 0.0
            && self.f0_range >= 0.0
            && self.energy_scale > 0.0
            && self.tilt.is_finite()
            && self.duration.0 > 2.0 * EDGE_SILENCE
            && self.duration.1 >= self.duration.0
            && self.syllable_rate > 0.0
            && !self.name.is_empty()
            && !self.name.contains(['/', '\\']);
        if ok {
            Ok(())
        } else {
            Err(EmovcError::Config(format!("invalid emotion preset {:?}", self.name)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub eval: usize,
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Eval => self.eval,
        }
    }

    /// 260/20/20 per emotion.
    pub fn full() -> Self {
        Self {
            train: 260,
            val: 20,
            eval: 20,
        }
    }
}

impl Default for SplitCounts {
    fn default() -> Self {
        Self {
            train: 52,
            val: 4,
            eval: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub presets: Vec<EmotionPreset>,
    pub counts: SplitCounts,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            presets: vec![EmotionPreset::neutral(), EmotionPreset::sad(), EmotionPreset::angry()],
            counts: SplitCounts::default(),
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.presets.is_empty() {
            return Err(EmovcError::Config("synthetic corpus needs at least one emotion".into()));
        }
        for (i, p) in self.presets.iter().enumerate() {
            p.validate()?;
            if self.presets[..i].iter().any(|q| q.name == p.name) {
                return Err(EmovcError::Config(format!("duplicate emotion {:?}", p.name)));
            }
        }
        if Split::ALL.iter().any(|s| self.counts.get(*s) == 0) {
            return Err(EmovcError::Config("every split needs at least one utterance".into()));
        }
        Ok(())
    }
}

fn utterance_rng(seed: u64, emotion: usize, split: Split, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((emotion as u64) << 40) | ((split.code() as u64) << 32) | index as u64);
    rng
}

/// Vowel choices. Validation and evaluation utterances with the same index
/// share a script across emotions; training scripts are per emotion.
fn script_rng(seed: u64, emotion: usize, split: Split, index: usize) -> ChaCha8Rng {
    let owner = if split == Split::Train { emotion as u64 } else { 0xFFFF };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5C12_97D0);
    rng.set_stream((owner << 40) | ((split.code() as u64) << 32) | index as u64);
    rng
}

fn tilt_gain(f: f64, tilt_db: f64) -> f64 {
    10f64.powf(tilt_db / 10.0 * (1.0 + f / 250.0).log2())
}

fn vowel_power(freqs: &[f64], formants: &[f64; 3], tilt_db: f64, amp: f64) -> Vec<f64> {
    freqs
        .iter()
        .map(|&f| {
            let res: f64 = (0..3)
                .map(|k| FORMANT_GAINS[k] / (1.0 + ((f - formants[k]) / BANDWIDTHS[k]).powi(2)))
                .sum();
            amp * tilt_gain(f, tilt_db) * (res + 1e-3)
        })
        .collect()
}

fn fricative_power(freqs: &[f64], amp: f64) -> Vec<f64> {
    freqs
        .iter()
        .map(|&f| amp * (0.02 + 1.0 / (1.0 + ((f - 4500.0) / 1500.0).powi(2))))
        .collect()
}

/// Frame-level features of one synthetic utterance.
pub fn synthetic_utterance(preset: &EmotionPreset, cfg: &AnalysisConfig, rng: &mut ChaCha8Rng) -> Result<FeatureSet> {
    let mut script = ChaCha8Rng::seed_from_u64(rng.gen());
    scripted_utterance(preset, cfg, rng, &mut script)
}

/// As [`synthetic_utterance`], with vowel choices drawn from `script`.
pub fn scripted_utterance(
    preset: &EmotionPreset,
    cfg: &AnalysisConfig,
    rng: &mut ChaCha8Rng,
    script: &mut ChaCha8Rng,
) -> Result<FeatureSet> {
    preset.validate()?;
    let shift = cfg.frame_shift_seconds();
    let bins = cfg.bins();
    let freqs: Vec<f64> = (0..bins)
        .map(|k| k as f64 * cfg.sample_rate as f64 / cfg.fft_size as f64)
        .collect();
    let duration = rng.gen_range(preset.duration.0..=preset.duration.1);
    let frames = (duration / shift).round() as usize;
    let edge = (EDGE_SILENCE / shift).round() as usize;
    let jitter = Normal::<f64>::new(0.0, 0.04).expect("valid normal");
    let base = preset.f0_mean * jitter.sample(rng).exp();

    let mut f0 = vec![0.0; frames];
    let mut voicing = vec![false; frames];
    let silence = vowel_power(&freqs, &VOWELS[0], preset.tilt, SILENCE_LEVEL);
    let mut envelope = vec![silence; frames];

    let amp = LEVEL * preset.energy_scale * preset.energy_scale;
    let mut t = edge;
    let end = frames - edge;
    while t + 4 < end {
        if t > edge && rng.gen_bool(0.12) {
            t += (rng.gen_range(0.06..0.15) / shift) as usize;
            continue;
        }
        let len = ((rng.gen_range(0.7..1.3) / preset.syllable_rate) / shift).round() as usize;
        let len = len.clamp(4, end - t);
        let onset = len / 4;
        let vowel = VOWELS[script.gen_range(0..VOWELS.len())];
        let progress = (t - edge) as f64 / (end - edge) as f64;
        let half = preset.f0_range / 2.0;
        let start_st = rng.gen_range(-half..=half) - 2.0 * progress;
        let end_st = start_st + rng.gen_range(-half..=half) * 0.5;
        let peak = rng.gen_range(0.6..1.0);
        for i in 0..len {
            let frame = t + i;
            if i < onset {
                envelope[frame] = fricative_power(&freqs, amp * 0.05);
                continue;
            }
            let x = (i - onset) as f64 / (len - onset) as f64;
            let shape = peak * (std::f64::consts::PI * (0.1 + 0.8 * x)).sin();
            let st = start_st + (end_st - start_st) * x;
            f0[frame] = base * 2f64.powf(st / 12.0);
            voicing[frame] = true;
            envelope[frame] = vowel_power(&freqs, &vowel, preset.tilt, amp * shape * shape);
        }
        t += len;
    }

    let basis = MelBasis::new(bins, cfg.order, cfg.warp)?;
    let mcc = mcc_encode_with(&basis, &envelope)?;
    let energy = energy_contour(&mcc_decode_with(&basis, &mcc)?);
    let aperiodicity = voicing.iter().map(|&v| if v { 0.05 } else { 1.0 }).collect();
    FeatureSet::new(mcc, f0, voicing, energy, shift, aperiodicity)
}

/// Render the corpus under `out_dir/<emotion>/<split>/<name>.wav` and write
/// the manifest next to it.
pub fn generate_synthetic_corpus(spec: &SynthSpec, out_dir: &Path) -> Result<CorpusManifest> {
    spec.validate()?;
    let cfg = AnalysisConfig::default();
    let mut utterances = Vec::new();
    for (e, preset) in spec.presets.iter().enumerate() {
        for split in Split::ALL {
            let dir = out_dir.join(&preset.name).join(split.name());
            std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            for i in 0..spec.counts.get(split) {
                let mut rng = utterance_rng(spec.seed, e, split, i);
                let mut script = script_rng(spec.seed, e, split, i);
                let fs = scripted_utterance(preset, &cfg, &mut rng, &mut script)?;
                let synth = SynthesisConfig::from_analysis(&cfg, rng.gen());
                let wave = synthesize(&fs, &synth)?;
                let name = format!("{}_{}_{i:04}", preset.name, split.name());
                let rel = Path::new(&preset.name).join(split.name()).join(format!("{name}.wav"));
                write_wav(&out_dir.join(&rel), &wave)?;
                utterances.push(UtteranceEntry {
                    emotion: preset.name.clone(),
                    split,
                    name,
                    path: rel,
                });
            }
        }
    }
    let manifest = CorpusManifest {
        root: out_dir.to_path_buf(),
        sample_rate: cfg.sample_rate,
        emotions: spec.presets.iter().map(|p| p.name.clone()).collect(),
        utterances,
        errors: Vec::new(),
        seed: Some(spec.seed),
        stats: Default::default(),
    };
    manifest.save(&out_dir.join(super::MANIFEST_FILE))?;
    Ok(manifest)
}
