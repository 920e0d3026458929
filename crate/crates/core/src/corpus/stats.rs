use serde::{Deserialize, Serialize};

use super::split::Split;
use crate::converter::{FeatureRows, RowStats};
use crate::dsp::FeatureSet;
use crate::error::{EmovcError, Result};
use crate::model::FeatureCombo;
use crate::prosody::mean_std;

/// Log-domain F0 and energy statistics of one emotion (training split),
/// used by the log-Gaussian transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgStats {
    pub lf0_mean: f64,
    pub lf0_std: f64,
    pub le_mean: f64,
    pub le_std: f64,
}

impl LgStats {
    pub fn to_array(self) -> [f64; 4] {
        [self.lf0_mean, self.lf0_std, self.le_mean, self.le_std]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v {
            [a, b, c, d] => Ok(Self {
                lf0_mean: *a,
                lf0_std: *b,
                le_mean: *c,
                le_std: *d,
            }),
            _ => Err(EmovcError::Contract(format!("expected 4 log-Gaussian values, got {}", v.len()))),
        }
    }

    /// Over voiced frames (F0) and positive-energy frames (energy).
    pub fn from_features<'a>(sets: impl IntoIterator<Item = &'a FeatureSet>) -> Result<Self> {
        let mut lf0 = Vec::new();
        let mut le = Vec::new();
        for fs in sets {
            lf0.extend(fs.f0.iter().filter(|f| **f > 0.0).map(|f| f.ln()));
            le.extend(fs.energy.iter().filter(|e| **e > 0.0).map(|e| e.ln()));
        }
        if lf0.len() < 2 || le.len() < 2 {
            return Err(EmovcError::InsufficientInput(
                "need voiced and non-silent frames for log-Gaussian statistics".into(),
            ));
        }
        let (lf0_mean, lf0_std) = mean_std(&lf0);
        let (le_mean, le_std) = mean_std(&le);
        if !(lf0_std > 0.0 && le_std > 0.0) {
            return Err(EmovcError::Degenerate("constant log F0 or log energy".into()));
        }
        Ok(Self {
            lf0_mean,
            lf0_std,
            le_mean,
            le_std,
        })
    }
}

/// Training-split feature sets; anything without provenance or from another
/// split is an error rather than silently dropped.
pub fn training_only<'a>(sets: &'a [FeatureSet]) -> Result<Vec<&'a FeatureSet>> {
    sets.iter()
        .map(|fs| match &fs.provenance {
            Some(p) if p.split == Split::Train => Ok(fs),
            Some(p) => Err(EmovcError::Contract(format!(
                "utterance {} from split {} offered for training statistics",
                p.name, p.split
            ))),
            None => Err(EmovcError::Contract("feature set without provenance".into())),
        })
        .collect()
}

/// Per-row statistics pooled over the training frames of every emotion.
/// Feature sets from other splits are skipped.
pub fn compute_stats(sets: &[FeatureSet], combo: FeatureCombo) -> Result<RowStats> {
    let train: Vec<&FeatureSet> = sets
        .iter()
        .filter(|fs| fs.provenance.as_ref().is_some_and(|p| p.split == Split::Train))
        .collect();
    if train.is_empty() {
        return Err(EmovcError::InsufficientInput("training split is empty".into()));
    }
    let rows = train
        .iter()
        .map(|fs| FeatureRows::extract(fs, combo).map(|r| r.to_rows()))
        .collect::<Result<Vec<_>>>()?;
    let stats = RowStats::from_rows(combo, rows.iter())?;
    for (i, f) in stats.floored.iter().enumerate() {
        if *f {
            log::warn!("feature row {i} of {combo} is constant over the training split; std floored");
        }
    }
    Ok(stats)
}
