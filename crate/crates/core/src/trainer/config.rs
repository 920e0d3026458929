use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EmovcError, Result};
use crate::model::losses::LossWeights;
use crate::model::{FeatureCombo, DISCRIMINATOR_STRIDE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::F32 => 32,
            Precision::F64 => 64,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            32 => Ok(Precision::F32),
            64 => Ok(Precision::F64),
            b => Err(EmovcError::Config(format!("precision must be 32 or 64, got {b}"))),
        }
    }

    pub fn of<T: ndgrad::Scalar>() -> Self {
        if std::mem::size_of::<T>() == 4 {
            Precision::F32
        } else {
            Precision::F64
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub combo: FeatureCombo,
    pub weights: LossWeights,
    /// Frames per training crop (multiple of 32).
    pub crop_width: usize,
    pub batch_size: usize,
    pub lr_g: f64,
    /// Learning rate of both discriminators and the classifier.
    pub lr_d: f64,
    pub steps: u64,
    pub seed: u64,
    /// Steps between checkpoints; 0 disables intermediate checkpoints.
    pub checkpoint_interval: u64,
    pub rho: f64,
    /// Discriminator updates per step.
    pub d_updates: u32,
    /// Classifier updates per step.
    pub c_updates: u32,
    pub precision: Precision,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            combo: FeatureCombo::MccLf0CwtLeCwt,
            weights: LossWeights::default(),
            crop_width: 128,
            batch_size: 8,
            lr_g: 2e-4,
            lr_d: 1e-4,
            steps: 2000,
            seed: 0,
            checkpoint_interval: 0,
            rho: 1.0,
            d_updates: 1,
            c_updates: 1,
            precision: Precision::F64,
        }
    }
}

/// Keys accepted by [`TrainingConfig::set`], in canonical order.
pub const TRAINING_KEYS: [&str; 14] = [
    "combo",
    "lambda1",
    "lambda2",
    "crop_width",
    "batch_size",
    "lr_g",
    "lr_d",
    "steps",
    "seed",
    "checkpoint_interval",
    "rho",
    "d_updates",
    "c_updates",
    "precision",
];

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .trim()
        .parse()
        .map_err(|_| EmovcError::Config(format!("invalid value '{value}' for key '{key}'")))
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.crop_width == 0 || self.crop_width % DISCRIMINATOR_STRIDE != 0 {
            return Err(EmovcError::Config(format!(
                "crop_width must be a positive multiple of {DISCRIMINATOR_STRIDE}, got {}",
                self.crop_width
            )));
        }
        if self.batch_size == 0 {
            return Err(EmovcError::Config("batch_size must be at least 1".into()));
        }
        for (k, v) in [("lr_g", self.lr_g), ("lr_d", self.lr_d), ("rho", self.rho)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EmovcError::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if self.d_updates == 0 || self.c_updates == 0 {
            return Err(EmovcError::Config("d_updates and c_updates must be at least 1".into()));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "combo" => self.combo = value.trim().parse()?,
            "lambda1" => self.weights.lambda1 = parse(key, value)?,
            "lambda2" => self.weights.lambda2 = parse(key, value)?,
            "crop_width" => self.crop_width = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr_g" => self.lr_g = parse(key, value)?,
            "lr_d" => self.lr_d = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "checkpoint_interval" => self.checkpoint_interval = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "d_updates" => self.d_updates = parse(key, value)?,
            "c_updates" => self.c_updates = parse(key, value)?,
            "precision" => self.precision = Precision::from_bits(parse(key, value)?)?,
            other => return Err(EmovcError::Config(format!("unknown training key '{other}'"))),
        }
        Ok(())
    }

    /// Canonical `key → value` view (round-trips through [`set`](Self::set)).
    pub fn to_kv(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("combo", self.combo.name().to_string());
        m.insert("lambda1", self.weights.lambda1.to_string());
        m.insert("lambda2", self.weights.lambda2.to_string());
        m.insert("crop_width", self.crop_width.to_string());
        m.insert("batch_size", self.batch_size.to_string());
        m.insert("lr_g", self.lr_g.to_string());
        m.insert("lr_d", self.lr_d.to_string());
        m.insert("steps", self.steps.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("checkpoint_interval", self.checkpoint_interval.to_string());
        m.insert("rho", self.rho.to_string());
        m.insert("d_updates", self.d_updates.to_string());
        m.insert("c_updates", self.c_updates.to_string());
        m.insert("precision", self.precision.to_string());
        m
    }

    /// First 8 bytes (little-endian) of SHA-256 over the canonical view.
    pub fn hash(&self) -> u64 {
        hash_kv(self.to_kv().iter().map(|(k, v)| (*k, v.as_str())))
    }
}

pub fn hash_kv<'a>(items: impl IntoIterator<Item = (&'a str, &'a str)>) -> u64 {
    let mut h = Sha256::new();
    for (k, v) in items {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip_and_hash() {
        let mut c = TrainingConfig::default();
        c.set("lambda1", "3.5").unwrap();
        c.set("combo", "mcc+lf0").unwrap();
        c.set("precision", "32").unwrap();
        let mut d = TrainingConfig::default();
        for (k, v) in c.to_kv() {
            d.set(k, &v).unwrap();
        }
        assert_eq!(c, d);
        assert_eq!(c.hash(), d.hash());
        assert_ne!(c.hash(), TrainingConfig::default().hash());
        assert_eq!(c.to_kv().len(), TRAINING_KEYS.len());
    }

    #[test]
    fn unknown_and_invalid_keys() {
        let mut c = TrainingConfig::default();
        assert!(c.set("learning_rate", "1").is_err());
        assert!(c.set("steps", "many").is_err());
        c.crop_width = 100;
        assert!(c.validate().is_err());
    }
}
