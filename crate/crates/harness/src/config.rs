//! Run settings: centralized defaults, `key=value` files and flag overrides.

use std::collections::BTreeMap;
use std::path::Path;

use emovc::corpus::Split;
use emovc::trainer::{hash_kv, TrainingConfig, TRAINING_KEYS};
use evalkit::{DtwOptions, EvalOptions, McdOptions, ProbeConfig};

use crate::error::{HarnessError, Result};

/// Keys owned by the harness itself, in canonical order.
pub const RUN_KEYS: [&str; 11] = [
    "source",
    "target",
    "targets",
    "split",
    "exclude_c0",
    "dtw_band",
    "probe_steps",
    "probe_batch",
    "probe_lr",
    "probe_seed",
    "synth_seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub training: TrainingConfig,
    pub source: String,
    pub target: String,
    /// Target emotions of the experiment matrix.
    pub targets: Vec<String>,
    pub split: Split,
    pub exclude_c0: bool,
    pub dtw_band: Option<usize>,
    pub probe: ProbeConfig,
    /// Seed of the vocoder noise during conversion.
    pub synth_seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            training: TrainingConfig::default(),
            source: "neutral".into(),
            target: "angry".into(),
            targets: vec!["sad".into(), "angry".into()],
            split: Split::Eval,
            exclude_c0: false,
            dtw_band: None,
            probe: ProbeConfig::default(),
            synth_seed: 0,
        }
    }
}

fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Usage(format!("invalid value '{value}' for key '{key}'")))
}

fn parse_split(value: &str) -> Result<Split> {
    Split::ALL
        .into_iter()
        .find(|s| s.name() == value.trim())
        .ok_or_else(|| HarnessError::Usage(format!("unknown split '{value}'")))
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if TRAINING_KEYS.contains(&key) {
            return self.training.set(key, value).map_err(|e| HarnessError::Usage(e.to_string()));
        }
        let v = value.trim();
        match key {
            "source" => self.source = v.to_string(),
            "target" => self.target = v.to_string(),
            "targets" => self.targets = v.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect(),
            "split" => self.split = parse_split(v)?,
            "exclude_c0" => self.exclude_c0 = parse(key, v)?,
            "dtw_band" => self.dtw_band = if v == "none" { None } else { Some(parse(key, v)?) },
            "probe_steps" => self.probe.steps = parse(key, v)?,
            "probe_batch" => self.probe.batch = parse(key, v)?,
            "probe_lr" => self.probe.lr = parse(key, v)?,
            "probe_seed" => self.probe.seed = parse(key, v)?,
            "synth_seed" => self.synth_seed = parse(key, v)?,
            other => return Err(HarnessError::Usage(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Apply `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Usage(format!("{origin}:{}: expected key=value", n + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| HarnessError::Usage(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Apply one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| HarnessError::Usage(format!("expected key=value, got '{kv}'")))?;
        self.set(k.trim(), v)
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
        if self.source.is_empty() || self.target.is_empty() || self.source == self.target {
            return Err(HarnessError::Usage("source and target emotions must differ".into()));
        }
        if self.targets.is_empty() || self.targets.contains(&self.source) {
            return Err(HarnessError::Usage("matrix targets must be non-empty and exclude the source".into()));
        }
        Ok(())
    }

    /// Canonical view of every key; round-trips through [`set`](Self::set).
    pub fn to_kv(&self) -> BTreeMap<&'static str, String> {
        let mut m = self.training.to_kv();
        m.insert("source", self.source.clone());
        m.insert("target", self.target.clone());
        m.insert("targets", self.targets.join(","));
        m.insert("split", self.split.name().to_string());
        m.insert("exclude_c0", self.exclude_c0.to_string());
        m.insert("dtw_band", self.dtw_band.map_or("none".into(), |b| b.to_string()));
        m.insert("probe_steps", self.probe.steps.to_string());
        m.insert("probe_batch", self.probe.batch.to_string());
        m.insert("probe_lr", self.probe.lr.to_string());
        m.insert("probe_seed", self.probe.seed.to_string());
        m.insert("synth_seed", self.synth_seed.to_string());
        m
    }

    pub fn hash(&self) -> u64 {
        hash_kv(self.to_kv().iter().map(|(k, v)| (*k, v.as_str())))
    }

    pub fn to_text(&self) -> String {
        self.to_kv().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            dtw: DtwOptions { band: self.dtw_band },
            mcd: McdOptions {
                exclude_c0: self.exclude_c0,
            },
        }
    }
}
