//! Mel-cepstral distortion and log-F0 error over an alignment path.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::dtw::DtwPath;
use crate::error::{EvalError, Result};

/// `10/ln 10`.
pub const MCD_SCALE: f64 = 10.0 / LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McdOptions {
    /// Leave out coefficient 0 (the gain term).
    pub exclude_c0: bool,
}

impl Default for McdOptions {
    fn default() -> Self {
        Self { exclude_c0: false }
    }
}

fn check_path(path: &DtwPath, t1: usize, t2: usize) -> Result<()> {
    if path.is_valid(t1, t2) {
        Ok(())
    } else {
        Err(EvalError::Contract(format!("alignment path does not fit sequences of {t1} and {t2} frames")))
    }
}

/// Per-frame distortion in dB.
pub fn frame_mcd(t: &[f64], c: &[f64], opts: McdOptions) -> f64 {
    let start = usize::from(opts.exclude_c0);
    let sq: f64 = t.iter().zip(c).skip(start).map(|(a, b)| (a - b).powi(2)).sum();
    MCD_SCALE * (2.0 * sq).sqrt()
}

/// Mean distortion over the aligned frame pairs, in dB.
pub fn mcd(target: &[Vec<f64>], converted: &[Vec<f64>], path: &DtwPath, opts: McdOptions) -> Result<f64> {
    check_path(path, target.len(), converted.len())?;
    let total: f64 = path
        .pairs
        .iter()
        .map(|&(i, j)| frame_mcd(&target[i], &converted[j], opts))
        .sum();
    Ok(total / path.pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogF0Error {
    /// Mean squared log difference over co-voiced pairs; `None` when there
    /// are none.
    pub mse: Option<f64>,
    pub co_voiced: usize,
    /// Path pairs voiced on exactly one side.
    pub excluded: usize,
}

pub fn logf0_mse(
    f0_t: &[f64],
    f0_c: &[f64],
    voicing_t: &[bool],
    voicing_c: &[bool],
    path: &DtwPath,
) -> Result<LogF0Error> {
    if f0_t.len() != voicing_t.len() || f0_c.len() != voicing_c.len() {
        return Err(EvalError::Contract("F0 and voicing tracks differ in length".into()));
    }
    check_path(path, f0_t.len(), f0_c.len())?;
    let (mut sum, mut co, mut excluded) = (0.0, 0usize, 0usize);
    for &(i, j) in &path.pairs {
        match (voicing_t[i], voicing_c[j]) {
            (true, true) => {
                if !(f0_t[i] > 0.0 && f0_c[j] > 0.0) {
                    return Err(EvalError::Contract(format!("voiced frame with F0 {} / {}", f0_t[i], f0_c[j])));
                }
                sum += (f0_t[i].ln() - f0_c[j].ln()).powi(2);
                co += 1;
            }
            (false, false) => {}
            _ => excluded += 1,
        }
    }
    Ok(LogF0Error {
        mse: (co > 0).then(|| sum / co as f64),
        co_voiced: co,
        excluded,
    })
}
