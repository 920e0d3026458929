//! Mel-cepstral coefficients on an all-pass warped frequency axis.
//!
//! The log envelope is modelled as `c0 + Σ_{m≥1} 2·c_m·cos(m·ω̃)` where
//! `ω̃` is the warped frequency of each linear bin. Encoding is a weighted
//! least-squares fit with weights uniform on the warped axis, so any envelope
//! produced by [`mcc_decode`] encodes back to the same coefficients.

use nalgebra::DMatrix;

use crate::error::{EmovcError, Result};

/// Power values are floored here before taking logs.
pub const ENVELOPE_FLOOR: f64 = 1e-10;

/// Warped frequency of `omega` (radians, 0..π) under an all-pass of `alpha`.
pub fn warp_frequency(omega: f64, alpha: f64) -> f64 {
    omega + 2.0 * (alpha * omega.sin() / (1.0 - alpha * omega.cos())).atan()
}

/// Precomputed basis and least-squares projector for one (bins, order, warp).
#[derive(Debug, Clone)]
pub struct MelBasis {
    bins: usize,
    order: usize,
    /// bins × order, row-major.
    basis: Vec<f64>,
    /// order × bins, row-major.
    projector: Vec<f64>,
}

impl MelBasis {
    pub fn new(bins: usize, order: usize, warp: f64) -> Result<Self> {
        if bins < 2 || order == 0 || order > bins {
            return Err(EmovcError::Contract(format!(
                "mel basis needs 2 <= bins and 1 <= order <= bins, got bins={bins} order={order}"
            )));
        }
        if !(warp.abs() < 1.0) {
            return Err(EmovcError::Contract(format!("warp {warp} outside (-1, 1)")));
        }
        let step = std::f64::consts::PI / (bins - 1) as f64;
        let mut basis = vec![0.0; bins * order];
        let mut weights = vec![0.0; bins];
        for k in 0..bins {
            let omega = k as f64 * step;
            let wt = warp_frequency(omega, warp);
            for m in 0..order {
                basis[k * order + m] = if m == 0 { 1.0 } else { 2.0 * (m as f64 * wt).cos() };
            }
            // dω̃/dω with trapezoid end weights.
            let d = (1.0 - warp * warp) / (1.0 + warp * warp - 2.0 * warp * omega.cos());
            let edge = if k == 0 || k == bins - 1 { 0.5 } else { 1.0 };
            weights[k] = d * edge;
        }
        let b = DMatrix::from_row_slice(bins, order, &basis);
        let mut bw = b.transpose();
        for k in 0..bins {
            for m in 0..order {
                bw[(m, k)] *= weights[k];
            }
        }
        let normal = &bw * &b;
        let chol = normal.cholesky().ok_or_else(|| {
            EmovcError::Contract("mel basis normal matrix is not positive definite".into())
        })?;
        let proj = chol.solve(&bw);
        let mut projector = vec![0.0; order * bins];
        for m in 0..order {
            for k in 0..bins {
                projector[m * bins + k] = proj[(m, k)];
            }
        }
        Ok(Self {
            bins,
            order,
            basis,
            projector,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficients of one log-envelope frame.
    pub fn fit_log(&self, log_env: &[f64]) -> Vec<f64> {
        debug_assert_eq!(log_env.len(), self.bins);
        (0..self.order)
            .map(|m| {
                let row = &self.projector[m * self.bins..(m + 1) * self.bins];
                row.iter().zip(log_env).map(|(p, l)| p * l).sum()
            })
            .collect()
    }

    /// Log envelope of one coefficient frame.
    pub fn eval_log(&self, c: &[f64]) -> Vec<f64> {
        debug_assert_eq!(c.len(), self.order);
        (0..self.bins)
            .map(|k| {
                let row = &self.basis[k * self.order..(k + 1) * self.order];
                row.iter().zip(c).map(|(b, v)| b * v).sum()
            })
            .collect()
    }
}

/// Encode power envelopes (T×K) as T×`order` mel-cepstra.
pub fn mcc_encode(envelope: &[Vec<f64>], order: usize, warp: f64) -> Result<Vec<Vec<f64>>> {
    let Some(first) = envelope.first() else {
        return Ok(Vec::new());
    };
    let basis = MelBasis::new(first.len(), order, warp)?;
    encode_with(&basis, envelope)
}

pub fn encode_with(basis: &MelBasis, envelope: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    envelope
        .iter()
        .enumerate()
        .map(|(t, frame)| {
            if frame.len() != basis.bins() {
                return Err(EmovcError::Contract(format!(
                    "frame {t} has {} bins, expected {}",
                    frame.len(),
                    basis.bins()
                )));
            }
            let mut log_env = Vec::with_capacity(frame.len());
            for (k, &p) in frame.iter().enumerate() {
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(EmovcError::Contract(format!(
                        "envelope value {p} at frame {t}, bin {k} is not a finite non-negative power"
                    )));
                }
                log_env.push(p.max(ENVELOPE_FLOOR).ln());
            }
            Ok(basis.fit_log(&log_env))
        })
        .collect()
}

/// Decode T×order mel-cepstra into T×`bins` power envelopes.
pub fn mcc_decode(mcc: &[Vec<f64>], bins: usize, warp: f64) -> Result<Vec<Vec<f64>>> {
    let Some(first) = mcc.first() else {
        return Ok(Vec::new());
    };
    let basis = MelBasis::new(bins, first.len(), warp)?;
    decode_with(&basis, mcc)
}

pub fn decode_with(basis: &MelBasis, mcc: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    mcc.iter()
        .enumerate()
        .map(|(t, c)| {
            if c.len() != basis.order() {
                return Err(EmovcError::Contract(format!(
                    "frame {t} has {} coefficients, expected {}",
                    c.len(),
                    basis.order()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(EmovcError::Contract(format!("non-finite coefficient in frame {t}")));
            }
            Ok(basis.eval_log(c).into_iter().map(f64::exp).collect())
        })
        .collect()
}

/// Power-domain bin sum per frame.
pub fn energy_contour(envelope: &[Vec<f64>]) -> Vec<f64> {
    envelope.iter().map(|f| f.iter().sum()).collect()
}
