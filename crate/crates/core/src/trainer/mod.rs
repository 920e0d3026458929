//! Non-parallel training: random unaligned pairing, cropping and the
//! alternating discriminator / classifier / generator updates.
//!
//! The trainer never aligns utterances; the crate's DTW lives in the
//! separate evaluation crate, which depends on this one and not the reverse.

mod bundle;
mod config;
mod sampler;
mod step;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndgrad::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use bundle::ModelBundle;
pub use config::{hash_kv, Precision, TrainingConfig, TRAINING_KEYS};
pub use sampler::{Pair, PairSampler};
pub use step::{train_step, LossRecord, Networks, Optimizers, LOSS_CSV_HEADER, NET_PREFIXES};

use crate::converter::{assemble, FeatureTensor, RowStats};
use crate::corpus::{compute_stats, training_only, LgStats};
use crate::dsp::FeatureSet;
use crate::error::{io_err, EmovcError, Result};
use crate::model::FeatureCombo;

/// RNG for everything drawn at `step` (step 0 is initialization). Derived
/// from the seed alone, so a resumed run draws what an uninterrupted one would.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

/// Normalized training pools for one emotion pair.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub emotion_a: String,
    pub emotion_b: String,
    pub combo: FeatureCombo,
    pub stats: RowStats,
    pub lg_a: LgStats,
    pub lg_b: LgStats,
    pub pool_a: Vec<FeatureTensor>,
    pub pool_b: Vec<FeatureTensor>,
}

impl TrainingData {
    /// Both inputs must be training-split feature sets. Row statistics are
    /// pooled over the two emotions; log-Gaussian statistics are per emotion.
    pub fn new(
        emotion_a: &str,
        a: &[FeatureSet],
        emotion_b: &str,
        b: &[FeatureSet],
        combo: FeatureCombo,
    ) -> Result<Self> {
        let (ta, tb) = (training_only(a)?, training_only(b)?);
        if ta.is_empty() || tb.is_empty() {
            return Err(EmovcError::Config("both emotions need training utterances".into()));
        }
        let pooled: Vec<FeatureSet> = ta.iter().chain(&tb).map(|f| (*f).clone()).collect();
        let stats = compute_stats(&pooled, combo)?;
        let pool = |sets: &[&FeatureSet]| -> Result<Vec<FeatureTensor>> {
            sets.iter().map(|fs| assemble(fs, combo, &stats)).collect()
        };
        Ok(Self {
            emotion_a: emotion_a.to_string(),
            emotion_b: emotion_b.to_string(),
            combo,
            lg_a: LgStats::from_features(ta.iter().copied())?,
            lg_b: LgStats::from_features(tb.iter().copied())?,
            pool_a: pool(&ta)?,
            pool_b: pool(&tb)?,
            stats,
        })
    }
}

/// Where training writes its artifacts.
#[derive(Debug, Clone, Default)]
pub struct TrainOutputs {
    /// Intermediate checkpoints `step_XXXXXXX.emvc` go here.
    pub checkpoint_dir: Option<PathBuf>,
    /// Loss CSV, appended to (header written when the file is new).
    pub loss_log: Option<PathBuf>,
}

pub struct Trainer<T: Scalar> {
    bundle: ModelBundle<T>,
    sampler: PairSampler,
    log: Vec<LossRecord>,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(data: &TrainingData, cfg: &TrainingConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.combo != data.combo {
            return Err(EmovcError::Config(format!(
                "config combo {} but data assembled for {}",
                cfg.combo, data.combo
            )));
        }
        let mut rng = step_rng(cfg.seed, 0);
        let nets = Networks::new(cfg.rho, data.combo.layout().height, cfg.crop_width, &mut rng)?;
        let opts = Optimizers::new(&nets, cfg);
        Ok(Self {
            bundle: ModelBundle {
                config: cfg.clone(),
                emotion_a: data.emotion_a.clone(),
                emotion_b: data.emotion_b.clone(),
                stats: data.stats.clone(),
                lg_a: data.lg_a,
                lg_b: data.lg_b,
                nets,
                opts,
                step: 0,
            },
            sampler: PairSampler::new(data.pool_a.clone(), data.pool_b.clone())?,
            log: Vec::new(),
        })
    }

    /// Continue from a saved bundle. The data must carry the same statistics.
    pub fn resume(bundle: ModelBundle<T>, data: &TrainingData) -> Result<Self> {
        if bundle.stats != data.stats || bundle.config.combo != data.combo {
            return Err(EmovcError::Config(
                "training data statistics differ from those stored in the bundle".into(),
            ));
        }
        Ok(Self {
            sampler: PairSampler::new(data.pool_a.clone(), data.pool_b.clone())?,
            bundle,
            log: Vec::new(),
        })
    }

    pub fn bundle(&self) -> &ModelBundle<T> {
        &self.bundle
    }

    pub fn into_bundle(self) -> ModelBundle<T> {
        self.bundle
    }

    pub fn log(&self) -> &[LossRecord] {
        &self.log
    }

    pub fn step(&self) -> u64 {
        self.bundle.step
    }

    pub fn step_once(&mut self) -> Result<LossRecord> {
        let step = self.bundle.step + 1;
        let cfg = &self.bundle.config;
        let mut rng = step_rng(cfg.seed, step);
        let (a, b) = self.sampler.sample_batch::<T>(&mut rng, cfg.crop_width, cfg.batch_size);
        let cfg = cfg.clone();
        let rec = train_step(&mut self.bundle.nets, &mut self.bundle.opts, &a, &b, &cfg, step)?;
        self.bundle.step = step;
        self.log.push(rec);
        Ok(rec)
    }

    /// Train until `config.steps` steps are complete.
    pub fn run(&mut self, out: &TrainOutputs) -> Result<()> {
        self.run_until(self.bundle.config.steps, out)
    }

    pub fn run_until(&mut self, last_step: u64, out: &TrainOutputs) -> Result<()> {
        let mut log_file = match &out.loss_log {
            Some(p) => Some(open_loss_log(p)?),
            None => None,
        };
        while self.bundle.step < last_step {
            let rec = self.step_once()?;
            if let (Some(f), Some(p)) = (log_file.as_mut(), out.loss_log.as_ref()) {
                writeln!(f, "{}", rec.csv_row()).map_err(io_err(p))?;
            }
            let interval = self.bundle.config.checkpoint_interval;
            if let Some(dir) = &out.checkpoint_dir {
                if interval > 0 && rec.step % interval == 0 {
                    self.bundle.save(&dir.join(format!("step_{:07}.emvc", rec.step)))?;
                }
            }
            if rec.step % 100 == 0 {
                log::info!(
                    "step {} cyc {:.4} emo {:.4} adv {:.4}/{:.4} d_acc {:.2}",
                    rec.step,
                    rec.cyc,
                    rec.emo,
                    rec.adv_ab,
                    rec.adv_ba,
                    rec.d_acc
                );
            }
        }
        Ok(())
    }
}

fn open_loss_log(path: &Path) -> Result<std::fs::File> {
    let fresh = !path.exists();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    if fresh {
        writeln!(f, "{LOSS_CSV_HEADER}").map_err(io_err(path))?;
    }
    Ok(f)
}

/// Read a loss CSV written by [`Trainer::run`].
pub fn read_loss_log(path: &Path) -> Result<Vec<LossRecord>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    if lines.next() != Some(LOSS_CSV_HEADER) {
        return Err(EmovcError::Contract(format!("{}: missing loss log header", path.display())));
    }
    lines.filter(|l| !l.trim().is_empty()).map(LossRecord::parse_csv_row).collect()
}

/// Train from scratch and return the final bundle with the loss records.
pub fn train<T: Scalar>(
    data: &TrainingData,
    cfg: &TrainingConfig,
    out: &TrainOutputs,
) -> Result<(ModelBundle<T>, Vec<LossRecord>)> {
    let mut t = Trainer::<T>::new(data, cfg)?;
    t.run(out)?;
    let log = t.log.clone();
    Ok((t.into_bundle(), log))
}
