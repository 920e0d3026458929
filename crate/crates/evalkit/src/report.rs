//! Per-utterance metrics, aggregate reports and the comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use emovc::dsp::FeatureSet;
use serde::{Deserialize, Serialize};

use crate::dtw::{dtw_align, DtwOptions};
use crate::error::{io_err, EvalError, Result};
use crate::metrics::{logf0_mse, mcd, LogF0Error, McdOptions};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub dtw: DtwOptions,
    pub mcd: McdOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceMetrics {
    pub name: String,
    pub mcd_db: f64,
    pub logf0: LogF0Error,
}

/// Align on mel-cepstra, then score spectrum and F0 along the path.
pub fn evaluate_pair(name: &str, target: &FeatureSet, converted: &FeatureSet, opts: &EvalOptions) -> Result<UtteranceMetrics> {
    let start = usize::from(opts.mcd.exclude_c0);
    let strip = |m: &[Vec<f64>]| -> Vec<Vec<f64>> { m.iter().map(|f| f[start..].to_vec()).collect() };
    let path = dtw_align(&strip(&target.mcc), &strip(&converted.mcc), opts.dtw)?;
    Ok(UtteranceMetrics {
        name: name.to_string(),
        mcd_db: mcd(&target.mcc, &converted.mcc, &path, opts.mcd)?,
        logf0: logf0_mse(&target.f0, &converted.f0, &target.voicing, &converted.voicing, &path)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Row label, e.g. "Source" or "CycleGAN-4".
    pub model: String,
    pub combo: Option<String>,
    pub model_hash: Option<u64>,
    /// Hash of the evaluation settings that produced the report.
    pub run_hash: Option<u64>,
    pub source: String,
    pub target: String,
    pub utterances: Vec<UtteranceMetrics>,
    pub mean_mcd: f64,
    /// Mean over utterances with a defined value.
    pub mean_logf0: Option<f64>,
    pub co_voiced: usize,
    pub excluded: usize,
    /// Fraction of utterances the probe labels as the target emotion.
    pub probe_rate: Option<f64>,
}

impl EvalReport {
    pub fn new(
        model: &str,
        source: &str,
        target: &str,
        utterances: Vec<UtteranceMetrics>,
    ) -> Result<Self> {
        if utterances.is_empty() {
            return Err(EvalError::Degenerate("report needs at least one utterance".into()));
        }
        let n = utterances.len() as f64;
        let defined: Vec<f64> = utterances.iter().filter_map(|u| u.logf0.mse).collect();
        Ok(Self {
            model: model.to_string(),
            combo: None,
            model_hash: None,
            run_hash: None,
            source: source.to_string(),
            target: target.to_string(),
            mean_mcd: utterances.iter().map(|u| u.mcd_db).sum::<f64>() / n,
            mean_logf0: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
            co_voiced: utterances.iter().map(|u| u.logf0.co_voiced).sum(),
            excluded: utterances.iter().map(|u| u.logf0.excluded).sum(),
            utterances,
            probe_rate: None,
        })
    }

    /// Score converted utterances against targets, paired by position.
    pub fn from_pairs(
        model: &str,
        source: &str,
        target: &str,
        pairs: &[(String, &FeatureSet, &FeatureSet)],
        opts: &EvalOptions,
    ) -> Result<Self> {
        let metrics = pairs
            .iter()
            .map(|(name, t, c)| evaluate_pair(name, t, c, opts))
            .collect::<Result<Vec<_>>>()?;
        Self::new(model, source, target, metrics)
    }

    /// Any utterance whose log-F0 error is undefined.
    pub fn has_undefined(&self) -> bool {
        self.utterances.iter().any(|u| u.logf0.mse.is_none())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("utterance,mcd_db,logf0_mse,co_voiced,excluded\n");
        for u in &self.utterances {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                u.name,
                u.mcd_db,
                fmt_opt(u.logf0.mse),
                u.logf0.co_voiced,
                u.logf0.excluded
            );
        }
        let _ = writeln!(
            s,
            "mean,{},{},{},{}",
            self.mean_mcd,
            fmt_opt(self.mean_logf0),
            self.co_voiced,
            self.excluded
        );
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub model_hash: Option<u64>,
    /// Target emotion → report.
    pub cells: BTreeMap<String, EvalReport>,
}

/// Rows of models against target-emotion columns, MCD block then log-F0
/// block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub targets: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl ComparisonTable {
    /// Rows in first-seen order of model label; targets likewise.
    pub fn from_reports(reports: &[EvalReport]) -> Self {
        let mut t = Self::default();
        for r in reports {
            if !t.targets.contains(&r.target) {
                t.targets.push(r.target.clone());
            }
            let row = match t.rows.iter_mut().position(|row| row.label == r.model) {
                Some(i) => &mut t.rows[i],
                None => {
                    t.rows.push(TableRow {
                        label: r.model.clone(),
                        model_hash: None,
                        cells: BTreeMap::new(),
                    });
                    t.rows.last_mut().expect("just pushed")
                }
            };
            row.model_hash = row.model_hash.or(r.model_hash);
            row.cells.insert(r.target.clone(), r.clone());
        }
        t
    }

    /// Reports in row-major order.
    pub fn reports(&self) -> impl Iterator<Item = &EvalReport> {
        self.rows.iter().flat_map(|r| r.cells.values())
    }

    pub fn has_undefined(&self) -> bool {
        self.reports().any(EvalReport::has_undefined)
    }

    pub fn to_text(&self) -> String {
        let label_w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(6) + 2;
        let col_w = self.targets.iter().map(String::len).max().unwrap_or(0).max(8) + 2;
        let block = col_w * self.targets.len();
        let mut s = String::new();
        let _ = writeln!(s, "{:label_w$}{:<block$}{:<block$}", "", "MCD (dB)", "LogF0-MSE");
        let _ = write!(s, "{:label_w$}", "");
        for _ in 0..2 {
            for t in &self.targets {
                let _ = write!(s, "{:<col_w$}", capitalize(t));
            }
        }
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "{:label_w$}", row.label);
            for t in &self.targets {
                let v = row.cells.get(t).map_or("-".to_string(), |r| format!("{:.2}", r.mean_mcd));
                let _ = write!(s, "{v:<col_w$}");
            }
            for t in &self.targets {
                let v = row.cells.get(t).map_or("-".to_string(), |r| {
                    r.mean_logf0.map_or("undefined".to_string(), |x| format!("{x:.3}"))
                });
                let _ = write!(s, "{v:<col_w$}");
            }
            s.push('\n');
        }
        s.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,combo,model_hash,run_hash,source,target,mcd_db,logf0_mse,co_voiced,excluded,probe_rate\n");
        for r in self.reports() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.model,
                r.combo.as_deref().unwrap_or(""),
                hex(r.model_hash),
                hex(r.run_hash),
                r.source,
                r.target,
                r.mean_mcd,
                fmt_opt(r.mean_logf0),
                r.co_voiced,
                r.excluded,
                r.probe_rate.map_or(String::new(), |p| p.to_string())
            );
        }
        s
    }
}

fn hex(h: Option<u64>) -> String {
    h.map_or(String::new(), |h| format!("{h:016x}"))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}
