//! Held-out emotion probe: a small classifier trained on genuine features
//! that labels converted utterances.

use emovc::converter::{assemble_rows, FeatureRows, FeatureTensor, RowStats};
use emovc::corpus::Split;
use emovc::dsp::FeatureSet;
use emovc::model::{ClassifierNet, FeatureCombo};
use ndgrad::{bce, AdamConfig, OptimState, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{EvalError, Result};

/// Features the probe sees: mel-cepstra plus continuous log F0.
pub const PROBE_COMBO: FeatureCombo = FeatureCombo::MccLf0;
/// Frames per classified window.
pub const PROBE_WINDOW: usize = 32;
const PROBE_HOP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub rho: f64,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            rho: 0.25,
            steps: 300,
            batch: 8,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Probe {
    pub emotion_a: String,
    pub emotion_b: String,
    pub stats: RowStats,
    net: ClassifierNet<f32>,
}

fn rows_of(fs: &FeatureSet) -> Result<Vec<Vec<f64>>> {
    Ok(FeatureRows::extract(fs, PROBE_COMBO)?.to_rows())
}

/// Window start columns covering the utterance (at least one).
fn window_offsets(frames: usize) -> Vec<usize> {
    if frames <= PROBE_WINDOW {
        return vec![0];
    }
    let mut v: Vec<usize> = (0..=frames - PROBE_WINDOW).step_by(PROBE_HOP).collect();
    if *v.last().expect("non-empty") != frames - PROBE_WINDOW {
        v.push(frames - PROBE_WINDOW);
    }
    v
}

fn coin(name: &str) -> bool {
    Sha256::digest(name.as_bytes())[0] & 1 == 1
}

fn check_held_out(sets: &[FeatureSet]) -> Result<()> {
    for fs in sets {
        match &fs.provenance {
            Some(p) if p.split != Split::Eval => {}
            Some(p) => {
                return Err(EvalError::Contract(format!(
                    "probe training offered evaluation utterance {}",
                    p.name
                )))
            }
            None => return Err(EvalError::Contract("probe training needs provenance tags".into())),
        }
    }
    Ok(())
}

impl Probe {
    /// Train on genuine, non-evaluation utterances of two emotions.
    pub fn train(
        emotion_a: &str,
        a: &[FeatureSet],
        emotion_b: &str,
        b: &[FeatureSet],
        cfg: &ProbeConfig,
    ) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(EvalError::Degenerate("probe needs utterances of both emotions".into()));
        }
        if cfg.steps == 0 || cfg.batch == 0 || !(cfg.lr > 0.0) {
            return Err(EvalError::Contract("probe steps, batch and learning rate must be positive".into()));
        }
        check_held_out(a)?;
        check_held_out(b)?;
        let rows_a = a.iter().map(rows_of).collect::<Result<Vec<_>>>()?;
        let rows_b = b.iter().map(rows_of).collect::<Result<Vec<_>>>()?;
        let stats = RowStats::from_rows(PROBE_COMBO, rows_a.iter().chain(&rows_b))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let height = PROBE_COMBO.layout().height;
        let mut net = ClassifierNet::<f32>::new(cfg.rho, height, PROBE_WINDOW, &mut rng)?;
        let mut probe = Self {
            emotion_a: emotion_a.to_string(),
            emotion_b: emotion_b.to_string(),
            stats,
            net: net.clone(),
        };
        let tensors = |sets: &[FeatureSet]| -> Result<Vec<FeatureTensor>> {
            sets.iter().map(|fs| probe.assemble(fs)).collect()
        };
        let (ta, tb) = (tensors(a)?, tensors(b)?);
        let mut opt = OptimState::new(AdamConfig::gan(cfg.lr), net.params());
        for _ in 0..cfg.steps {
            let mut data = Vec::with_capacity(cfg.batch * height * PROBE_WINDOW);
            let mut labels = Vec::with_capacity(cfg.batch);
            for _ in 0..cfg.batch {
                let is_b = rng.gen_bool(0.5);
                let pool = if is_b { &tb } else { &ta };
                let ft = &pool[rng.gen_range(0..pool.len())];
                let off = rng.gen_range(0..ft.frames.saturating_sub(PROBE_WINDOW) + 1);
                data.extend(ft.crop(off, PROBE_WINDOW));
                labels.push(if is_b { 1.0 } else { 0.0 });
            }
            let x = Tensor::<f32>::from_f64(&[cfg.batch, 1, height, PROBE_WINDOW], &data)?;
            let y = Tensor::<f32>::from_f64(&[cfg.batch], &labels)?;
            let loss = bce(&net.forward(&x)?, &y)?;
            loss.backward()?;
            opt.step(net.params_mut())?;
            net.params().zero_grad();
        }
        probe.net = net.frozen();
        Ok(probe)
    }

    /// A probe whose weights are all zero: every window scores exactly 0.5.
    pub fn untrained(emotion_a: &str, emotion_b: &str, stats: RowStats, rho: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = ClassifierNet::<f32>::new(rho, PROBE_COMBO.layout().height, PROBE_WINDOW, &mut rng)?;
        for i in 0..net.params().len() {
            let n = net.params().tensor(i).numel();
            net.params_mut().set(i, vec![0.0; n])?;
        }
        Ok(Self {
            emotion_a: emotion_a.to_string(),
            emotion_b: emotion_b.to_string(),
            stats,
            net: net.frozen(),
        })
    }

    fn assemble(&self, fs: &FeatureSet) -> Result<FeatureTensor> {
        Ok(assemble_rows(&FeatureRows::extract(fs, PROBE_COMBO)?, &self.stats)?)
    }

    /// Mean window probability of emotion B.
    pub fn probability(&self, fs: &FeatureSet) -> Result<f64> {
        let ft = self.assemble(fs)?;
        let offsets = window_offsets(ft.frames);
        let height = ft.height();
        let data: Vec<f64> = offsets.iter().flat_map(|&o| ft.crop(o, PROBE_WINDOW)).collect();
        let x = Tensor::<f32>::from_f64(&[offsets.len(), 1, height, PROBE_WINDOW], &data)?;
        let p = self.net.forward(&x)?.to_f64_vec();
        Ok(p.iter().sum::<f64>() / p.len() as f64)
    }

    /// Emotion label; an exact 0.5 is settled by a coin keyed on the name.
    pub fn classify(&self, fs: &FeatureSet, name: &str) -> Result<&str> {
        let p = self.probability(fs)?;
        let is_b = if p == 0.5 { coin(name) } else { p > 0.5 };
        Ok(if is_b { &self.emotion_b } else { &self.emotion_a })
    }

    /// Fraction of utterances labeled `target`.
    pub fn rate(&self, sets: &[FeatureSet], target: &str) -> Result<f64> {
        if target != self.emotion_a && target != self.emotion_b {
            return Err(EvalError::Contract(format!(
                "probe separates {} and {}, not {target}",
                self.emotion_a, self.emotion_b
            )));
        }
        if sets.is_empty() {
            return Err(EvalError::Degenerate("no utterances to classify".into()));
        }
        let mut hits = 0usize;
        for (i, fs) in sets.iter().enumerate() {
            let name = fs.provenance.as_ref().map_or_else(|| format!("#{i}"), |p| p.name.clone());
            if self.classify(fs, &name)? == target {
                hits += 1;
            }
        }
        Ok(hits as f64 / sets.len() as f64)
    }
}
