//! Per-utterance feature tracks and their file formats.

use std::fmt::Write as _;
use std::path::Path;

use ndgrad::{Checkpoint, Record};
use serde::{Deserialize, Serialize};

use crate::corpus::Split;
use crate::error::{io_err, EmovcError, Result};

/// Where a feature set came from. Statistics and probes check the split.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub emotion: String,
    pub split: Split,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// T rows of mel-cepstra (coefficient 0 included).
    pub mcc: Vec<Vec<f64>>,
    /// Hz, 0 where unvoiced.
    pub f0: Vec<f64>,
    pub voicing: Vec<bool>,
    /// Linear power-domain frame energies.
    pub energy: Vec<f64>,
    /// Seconds.
    pub frame_shift: f64,
    /// Noise-mix fraction in [0, 1] per frame, copied through conversion.
    pub aperiodicity: Vec<f64>,
    pub provenance: Option<Provenance>,
}

impl FeatureSet {
    pub fn new(
        mcc: Vec<Vec<f64>>,
        f0: Vec<f64>,
        voicing: Vec<bool>,
        energy: Vec<f64>,
        frame_shift: f64,
        aperiodicity: Vec<f64>,
    ) -> Result<Self> {
        let fs = Self {
            mcc,
            f0,
            voicing,
            energy,
            frame_shift,
            aperiodicity,
            provenance: None,
        };
        fs.validate()?;
        Ok(fs)
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = Some(p);
        self
    }

    pub fn frames(&self) -> usize {
        self.mcc.len()
    }

    pub fn order(&self) -> usize {
        self.mcc.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.mcc.len();
        let lens = [
            ("f0", self.f0.len()),
            ("voicing", self.voicing.len()),
            ("energy", self.energy.len()),
            ("aperiodicity", self.aperiodicity.len()),
        ];
        for (name, len) in lens {
            if len != t {
                return Err(EmovcError::Contract(format!(
                    "track {name} has {len} frames, mcc has {t}"
                )));
            }
        }
        let order = self.order();
        if let Some(i) = self.mcc.iter().position(|r| r.len() != order) {
            return Err(EmovcError::Contract(format!("mcc row {i} has a different order")));
        }
        if self.mcc.iter().flatten().any(|v| !v.is_finite()) {
            return Err(EmovcError::Contract("non-finite mcc value".into()));
        }
        for i in 0..t {
            let f = self.f0[i];
            if !(f.is_finite() && f >= 0.0) || (f > 0.0) != self.voicing[i] {
                return Err(EmovcError::Contract(format!(
                    "frame {i}: f0 {f} inconsistent with voicing {}",
                    self.voicing[i]
                )));
            }
            if !(self.energy[i] >= 0.0 && self.energy[i].is_finite()) {
                return Err(EmovcError::Contract(format!(
                    "frame {i}: energy {} is not a finite non-negative value",
                    self.energy[i]
                )));
            }
            let a = self.aperiodicity[i];
            if !(0.0..=1.0).contains(&a) {
                return Err(EmovcError::Contract(format!("frame {i}: aperiodicity {a} outside [0, 1]")));
            }
        }
        if !(self.frame_shift > 0.0) {
            return Err(EmovcError::Contract("frame_shift must be positive".into()));
        }
        Ok(())
    }

    pub fn voiced_count(&self) -> usize {
        self.voicing.iter().filter(|v| **v).count()
    }

    /// Mean log F0 over voiced frames.
    pub fn mean_log_f0(&self) -> Option<f64> {
        let v: Vec<f64> = self.f0.iter().filter(|f| **f > 0.0).map(|f| f.ln()).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let t = self.frames();
        let mut ck = Checkpoint::new(0);
        ck.push(Record::new("mcc", vec![t, self.order()], self.mcc.iter().flatten().copied().collect()));
        ck.push(Record::new("f0", vec![t], self.f0.clone()));
        ck.push(Record::new(
            "voicing",
            vec![t],
            self.voicing.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        ));
        ck.push(Record::new("energy", vec![t], self.energy.clone()));
        ck.push(Record::new("aperiodicity", vec![t], self.aperiodicity.clone()));
        ck.push(Record::scalar("frame_shift", self.frame_shift));
        if let Some(p) = &self.provenance {
            ck.push(Record::scalar(format!("tag.emotion.{}", p.emotion), 0.0));
            ck.push(Record::scalar("tag.split", p.split.code() as f64));
            ck.push(Record::scalar(format!("tag.name.{}", p.name), 0.0));
        }
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let mcc_rec = ck.require("mcc")?;
        if mcc_rec.shape.len() != 2 {
            return Err(EmovcError::Contract("mcc record must be rank 2".into()));
        }
        let order = mcc_rec.shape[1];
        let mcc: Vec<Vec<f64>> = if order == 0 {
            vec![Vec::new(); mcc_rec.shape[0]]
        } else {
            mcc_rec.values.chunks(order).map(<[f64]>::to_vec).collect()
        };
        let voicing = ck.require("voicing")?.values.iter().map(|&v| v != 0.0).collect();
        let mut fs = Self::new(
            mcc,
            ck.require("f0")?.values.clone(),
            voicing,
            ck.require("energy")?.values.clone(),
            ck.scalar("frame_shift")?,
            ck.require("aperiodicity")?.values.clone(),
        )?;
        let find = |prefix: &str| {
            ck.records
                .iter()
                .find_map(|r| r.name.strip_prefix(prefix).map(str::to_string))
        };
        if let (Some(emotion), Some(name)) = (find("tag.emotion."), find("tag.name.")) {
            let code = ck.scalar("tag.split")? as u8;
            let split = Split::from_code(code)
                .ok_or_else(|| EmovcError::Contract(format!("bad split code {code}")))?;
            fs.provenance = Some(Provenance { emotion, split, name });
        }
        Ok(fs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path).map_err(|e| match e {
            ndgrad::NdError::Io(source) => EmovcError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = Checkpoint::load(path).map_err(|e| match e {
            ndgrad::NdError::Io(source) => EmovcError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other.into(),
        })?;
        Self::from_checkpoint(&ck)
    }

    /// One row per frame: `f0,voicing,energy,mcc0..mcc{order-1}`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("f0,voicing,energy");
        for m in 0..self.order() {
            let _ = write!(s, ",mcc{m}");
        }
        s.push('\n');
        for t in 0..self.frames() {
            let _ = write!(s, "{},{},{}", self.f0[t], u8::from(self.voicing[t]), self.energy[t]);
            for v in &self.mcc[t] {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(io_err(path))
    }
}
