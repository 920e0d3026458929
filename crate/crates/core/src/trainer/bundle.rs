//! Trained model plus everything conversion needs, in one checkpoint file.

use std::path::Path;

use ndgrad::{Checkpoint, NdError, Record, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainingConfig;
use super::step::{Networks, Optimizers};
use crate::converter::RowStats;
use crate::corpus::LgStats;
use crate::error::{EmovcError, Result};

#[derive(Debug, Clone)]
pub struct ModelBundle<T: Scalar> {
    pub config: TrainingConfig,
    pub emotion_a: String,
    pub emotion_b: String,
    /// Pooled per-row normalization statistics.
    pub stats: RowStats,
    pub lg_a: LgStats,
    pub lg_b: LgStats,
    pub nets: Networks<T>,
    pub opts: Optimizers<T>,
    /// Completed training steps.
    pub step: u64,
}

fn text_record(key: &str, value: &str) -> Record {
    Record::scalar(format!("{key}={value}"), 0.0)
}

fn text_value<'a>(ck: &'a Checkpoint, key: &str) -> Result<&'a str> {
    let prefix = format!("{key}=");
    ck.records
        .iter()
        .find_map(|r| r.name.strip_prefix(prefix.as_str()))
        .ok_or_else(|| EmovcError::Contract(format!("bundle is missing '{key}'")))
}

fn map_io(path: &Path) -> impl FnOnce(NdError) -> EmovcError + '_ {
    move |e| match e {
        NdError::Io(source) => EmovcError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other.into(),
    }
}

impl<T: Scalar> ModelBundle<T> {
    pub fn config_hash(&self) -> u64 {
        self.config.hash()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(self.config_hash());
        for (k, v) in self.config.to_kv() {
            ck.push(text_record(&format!("cfg.{k}"), &v));
        }
        ck.push(text_record("meta.emotion_a", &self.emotion_a));
        ck.push(text_record("meta.emotion_b", &self.emotion_b));
        ck.push(Record::scalar("meta.step", self.step as f64));
        let n = self.stats.rows();
        ck.push(Record::new("stats.mean", vec![n], self.stats.mean.clone()));
        ck.push(Record::new("stats.std", vec![n], self.stats.std.clone()));
        ck.push(Record::new(
            "stats.floored",
            vec![n],
            self.stats.floored.iter().map(|&f| f64::from(u8::from(f))).collect(),
        ));
        ck.push(Record::new("lg.a", vec![4], self.lg_a.to_array().to_vec()));
        ck.push(Record::new("lg.b", vec![4], self.lg_b.to_array().to_vec()));
        ck.extend(self.nets.to_records());
        ck.extend(self.opts.to_records(&self.nets));
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let mut config = TrainingConfig::default();
        for r in &ck.records {
            if let Some(kv) = r.name.strip_prefix("cfg.") {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| EmovcError::Contract(format!("bad config record '{}'", r.name)))?;
                config.set(k, v)?;
            }
        }
        config.validate()?;
        if config.hash() != ck.config_hash {
            return Err(EmovcError::Contract(format!(
                "bundle header hash {:016x} does not match its configuration ({:016x})",
                ck.config_hash,
                config.hash()
            )));
        }
        let combo = config.combo;
        let stats = RowStats {
            combo,
            mean: ck.require("stats.mean")?.values.clone(),
            std: ck.require("stats.std")?.values.clone(),
            floored: ck.require("stats.floored")?.values.iter().map(|v| *v != 0.0).collect(),
        };
        if stats.rows() != combo.layout().feature_rows() || stats.std.len() != stats.rows() {
            return Err(EmovcError::Contract("normalization statistics do not match the combo".into()));
        }
        // Parameters are overwritten from the records; the init RNG is irrelevant.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut nets = Networks::new(config.rho, combo.layout().height, config.crop_width, &mut rng)?;
        nets.load_records(&ck.records)?;
        let mut opts = Optimizers::new(&nets, &config);
        opts.load_records(&nets, &ck.records)?;
        Ok(Self {
            emotion_a: text_value(ck, "meta.emotion_a")?.to_string(),
            emotion_b: text_value(ck, "meta.emotion_b")?.to_string(),
            step: ck.scalar("meta.step")? as u64,
            lg_a: LgStats::from_slice(&ck.require("lg.a")?.values)?,
            lg_b: LgStats::from_slice(&ck.require("lg.b")?.values)?,
            config,
            stats,
            nets,
            opts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path).map_err(|e| match e {
            NdError::Io(source) => EmovcError::Checkpoint {
                path: path.to_path_buf(),
                source,
            },
            other => other.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = Checkpoint::load(path).map_err(map_io(path))?;
        Self::from_checkpoint(&ck)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(self.to_checkpoint().to_bytes()?)
    }
}
