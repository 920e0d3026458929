use serde::{Deserialize, Serialize};

use crate::error::{EmovcError, Result};

/// A log-domain contour (log F0 or log energy) with its validity mask and
/// the normalization statistics recorded when it was encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsodyTrack {
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    pub mean: f64,
    pub std: f64,
}

impl ProsodyTrack {
    /// All frames valid, identity statistics.
    pub fn dense(values: Vec<f64>) -> Self {
        let mask = vec![true; values.len()];
        Self {
            values,
            mask,
            mean: 0.0,
            std: 1.0,
        }
    }

    pub fn masked(values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(EmovcError::Contract(format!(
                "track has {} values but {} mask entries",
                values.len(),
                mask.len()
            )));
        }
        Ok(Self {
            values,
            mask,
            mean: 0.0,
            std: 1.0,
        })
    }

    /// Log F0 with the voicing mask; unvoiced values are 0 placeholders.
    pub fn log_f0(f0: &[f64]) -> Self {
        let values = f0.iter().map(|&f| if f > 0.0 { f.ln() } else { 0.0 }).collect();
        let mask = f0.iter().map(|&f| f > 0.0).collect();
        Self {
            values,
            mask,
            mean: 0.0,
            std: 1.0,
        }
    }

    /// Log energy, treating non-positive energies as invalid frames.
    pub fn log_energy(energy: &[f64]) -> Self {
        Self::log_f0(energy)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Fill invalid frames by linear interpolation between valid neighbours;
/// leading and trailing gaps hold the nearest valid value. The mask is kept.
pub fn interpolate_unvoiced(track: &ProsodyTrack) -> Result<ProsodyTrack> {
    let valid: Vec<usize> = (0..track.len()).filter(|&i| track.mask[i]).collect();
    let (&first, &last) = match (valid.first(), valid.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(EmovcError::EmptyTrack),
    };
    if let Some(&i) = valid.iter().find(|&&i| !track.values[i].is_finite()) {
        return Err(EmovcError::Contract(format!("non-finite value at valid frame {i}")));
    }
    let mut values = track.values.clone();
    for v in values.iter_mut().take(first) {
        *v = track.values[first];
    }
    for v in values.iter_mut().skip(last + 1) {
        *v = track.values[last];
    }
    for w in valid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (va, vb) = (track.values[a], track.values[b]);
        for i in a + 1..b {
            let t = (i - a) as f64 / (b - a) as f64;
            values[i] = va + (vb - va) * t;
        }
    }
    Ok(ProsodyTrack {
        values,
        mask: track.mask.clone(),
        mean: track.mean,
        std: track.std,
    })
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `(x − mean)/std`.
pub fn normalize(values: &[f64], mean: f64, std: f64) -> Result<Vec<f64>> {
    if !(std > 0.0) {
        return Err(EmovcError::DegenerateContour(format!("std {std} is not positive")));
    }
    Ok(values.iter().map(|v| (v - mean) / std).collect())
}

/// `x·std + mean`.
pub fn denormalize(values: &[f64], mean: f64, std: f64) -> Result<Vec<f64>> {
    if !(std > 0.0) {
        return Err(EmovcError::DegenerateContour(format!("std {std} is not positive")));
    }
    Ok(values.iter().map(|v| v * std + mean).collect())
}
