//! Feature-combination rows, per-row normalization and the padded network
//! input built from them.

use ndgrad::{Scalar, Tensor};
use serde::{Deserialize, Serialize};

use crate::dsp::FeatureSet;
use crate::error::{EmovcError, Result};
use crate::model::{FeatureCombo, FeatureLayout, SegmentKind};
use crate::prosody::{cwt_decompose, interpolate_unvoiced, CwtMatrix, ProsodyTrack};

/// Standard deviations below this are floored (and flagged).
pub const STD_FLOOR: f64 = 1e-6;

/// Un-normalized representation of one utterance for a feature combination.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRows {
    pub combo: FeatureCombo,
    /// T × order.
    pub mcc: Vec<Vec<f64>>,
    /// Interpolated log F0 (MCC+LF0 only).
    pub lf0: Option<Vec<f64>>,
    pub lf0_cwt: Option<CwtMatrix>,
    pub le_cwt: Option<CwtMatrix>,
}

fn continuous(track: ProsodyTrack) -> Result<Vec<f64>> {
    Ok(interpolate_unvoiced(&track)?.values)
}

impl FeatureRows {
    pub fn extract(fs: &FeatureSet, combo: FeatureCombo) -> Result<Self> {
        let lf0 = || continuous(ProsodyTrack::log_f0(&fs.f0));
        let le = || continuous(ProsodyTrack::log_energy(&fs.energy));
        let (lf0_row, lf0_cwt, le_cwt) = match combo {
            FeatureCombo::Mcc => (None, None, None),
            FeatureCombo::MccLf0 => (Some(lf0()?), None, None),
            FeatureCombo::MccLf0Cwt => (None, Some(cwt_decompose(&ProsodyTrack::dense(lf0()?))?), None),
            FeatureCombo::MccLf0CwtLeCwt => (
                None,
                Some(cwt_decompose(&ProsodyTrack::dense(lf0()?))?),
                Some(cwt_decompose(&ProsodyTrack::dense(le()?))?),
            ),
        };
        Ok(Self {
            combo,
            mcc: fs.mcc.clone(),
            lf0: lf0_row,
            lf0_cwt,
            le_cwt,
        })
    }

    pub fn frames(&self) -> usize {
        self.mcc.len()
    }

    /// Feature rows (layout order, no padding), each of length T.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let t = self.frames();
        let order = self.mcc.first().map_or(0, Vec::len);
        let mut rows: Vec<Vec<f64>> = (0..order).map(|m| (0..t).map(|i| self.mcc[i][m]).collect()).collect();
        if let Some(l) = &self.lf0 {
            rows.push(l.clone());
        }
        for m in [&self.lf0_cwt, &self.le_cwt].into_iter().flatten() {
            rows.extend(m.coeffs.iter().cloned());
        }
        rows
    }

    /// Inverse of [`to_rows`](Self::to_rows). CWT statistics come from `cwt_stats`.
    pub fn from_rows(
        combo: FeatureCombo,
        rows: &[Vec<f64>],
        cwt_stats: &CwtStats,
    ) -> Result<Self> {
        let layout = combo.layout();
        if rows.len() != layout.feature_rows() {
            return Err(EmovcError::Contract(format!(
                "{} rows for combo {combo}, expected {}",
                rows.len(),
                layout.feature_rows()
            )));
        }
        let t = rows.first().map_or(0, Vec::len);
        let mcc_rows = layout.rows(SegmentKind::Mcc).expect("mcc segment");
        let mcc = (0..t).map(|i| mcc_rows.clone().map(|m| rows[m][i]).collect()).collect();
        let matrix = |kind: SegmentKind, stats: Option<(f64, f64)>| -> Result<Option<CwtMatrix>> {
            let Some(r) = layout.rows(kind) else { return Ok(None) };
            let (mean, std) = stats.ok_or_else(|| {
                EmovcError::Contract(format!("missing contour statistics for {kind:?}"))
            })?;
            Ok(Some(CwtMatrix {
                coeffs: rows[r].to_vec(),
                scales: crate::prosody::scales().to_vec(),
                mean,
                std,
            }))
        };
        Ok(Self {
            combo,
            mcc,
            lf0: layout.rows(SegmentKind::Lf0).map(|r| rows[r.start].clone()),
            lf0_cwt: matrix(SegmentKind::Lf0Cwt, cwt_stats.lf0)?,
            le_cwt: matrix(SegmentKind::LeCwt, cwt_stats.le)?,
        })
    }

    pub fn cwt_stats(&self) -> CwtStats {
        CwtStats {
            lf0: self.lf0_cwt.as_ref().map(|m| (m.mean, m.std)),
            le: self.le_cwt.as_ref().map(|m| (m.mean, m.std)),
        }
    }
}

/// Utterance-level (mean, std) of the contours under the wavelet rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CwtStats {
    pub lf0: Option<(f64, f64)>,
    pub le: Option<(f64, f64)>,
}

/// Per-row mean and standard deviation over a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowStats {
    pub combo: FeatureCombo,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Rows whose std was floored to [`STD_FLOOR`].
    pub floored: Vec<bool>,
}

impl RowStats {
    /// Pooled statistics over all frames of all given utterances.
    pub fn from_rows<'a>(
        combo: FeatureCombo,
        utterances: impl IntoIterator<Item = &'a Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n_rows = combo.layout().feature_rows();
        let mut sum = vec![0.0; n_rows];
        let mut count = 0usize;
        let mut kept: Vec<&Vec<Vec<f64>>> = Vec::new();
        for u in utterances {
            if u.len() != n_rows {
                return Err(EmovcError::Contract(format!("utterance has {} rows, expected {n_rows}", u.len())));
            }
            for (s, r) in sum.iter_mut().zip(u) {
                *s += r.iter().sum::<f64>();
            }
            count += u.first().map_or(0, Vec::len);
            kept.push(u);
        }
        if count == 0 {
            return Err(EmovcError::InsufficientInput("no frames to compute statistics from".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut var = vec![0.0; n_rows];
        for u in kept {
            for ((v, r), m) in var.iter_mut().zip(u).zip(&mean) {
                *v += r.iter().map(|x| (x - m).powi(2)).sum::<f64>();
            }
        }
        let mut floored = vec![false; n_rows];
        let std = var
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let s = (v / count as f64).sqrt();
                if s < STD_FLOOR {
                    floored[i] = true;
                    STD_FLOOR
                } else {
                    s
                }
            })
            .collect();
        Ok(Self {
            combo,
            mean,
            std,
            floored,
        })
    }

    pub fn rows(&self) -> usize {
        self.mean.len()
    }
}

/// Normalized, row- and width-padded network input for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub layout: FeatureLayout,
    /// Valid frames (columns before width padding).
    pub frames: usize,
    /// Padded width (multiple of 4).
    pub width: usize,
    /// height × width, row-major.
    pub data: Vec<f64>,
    pub cwt_stats: CwtStats,
}

impl FeatureTensor {
    pub fn height(&self) -> usize {
        self.layout.height
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    /// Columns `offset..offset+width`, wrapping around the valid frames.
    pub fn crop(&self, offset: usize, width: usize) -> Vec<f64> {
        let h = self.height();
        let mut out = Vec::with_capacity(h * width);
        for r in 0..h {
            let row = self.row(r);
            out.extend((0..width).map(|j| row[(offset + j) % self.frames]));
        }
        out
    }

    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        Tensor::from_f64(&[1, 1, self.height(), self.width], &self.data).expect("consistent shape")
    }

    /// Replace the data with a network output of the same shape.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(EmovcError::Contract(format!(
                "output has {} values, tensor has {}",
                data.len(),
                self.data.len()
            )));
        }
        Ok(Self {
            data,
            ..self.clone()
        })
    }
}

/// Normalize and pad an utterance's rows.
pub fn assemble(fs: &FeatureSet, combo: FeatureCombo, stats: &RowStats) -> Result<FeatureTensor> {
    assemble_rows(&FeatureRows::extract(fs, combo)?, stats)
}

pub fn assemble_rows(fr: &FeatureRows, stats: &RowStats) -> Result<FeatureTensor> {
    if stats.combo != fr.combo {
        return Err(EmovcError::Config(format!(
            "statistics are for combo {}, features for {}",
            stats.combo, fr.combo
        )));
    }
    let layout = fr.combo.layout();
    let rows = fr.to_rows();
    if rows.len() != stats.rows() {
        return Err(EmovcError::Config("statistics row count does not match layout".into()));
    }
    let frames = fr.frames();
    if frames == 0 {
        return Err(EmovcError::InsufficientInput("utterance has no frames".into()));
    }
    let width = frames.div_ceil(4) * 4;
    let mut data = vec![0.0; layout.height * width];
    for (r, row) in rows.iter().enumerate() {
        let (m, s) = (stats.mean[r], stats.std[r]);
        for (j, v) in row.iter().enumerate() {
            data[r * width + j] = (v - m) / s;
        }
    }
    Ok(FeatureTensor {
        layout,
        frames,
        width,
        data,
        cwt_stats: fr.cwt_stats(),
    })
}

/// Undo normalization, strip row and width padding.
pub fn disassemble(ft: &FeatureTensor, stats: &RowStats) -> Result<FeatureRows> {
    if stats.combo != ft.layout.combo {
        return Err(EmovcError::Config("statistics combo does not match tensor".into()));
    }
    let rows: Vec<Vec<f64>> = (0..stats.rows())
        .map(|r| {
            ft.row(r)[..ft.frames]
                .iter()
                .map(|v| v * stats.std[r] + stats.mean[r])
                .collect()
        })
        .collect();
    FeatureRows::from_rows(ft.layout.combo, &rows, &ft.cwt_stats)
}

