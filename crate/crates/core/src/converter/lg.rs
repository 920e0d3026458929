//! Log-Gaussian normalized transform between two emotions' statistics.

use crate::corpus::LgStats;

/// `μ_t + (x − μ_s)·σ_t/σ_s` in the log domain.
pub fn lg_map(x: f64, src_mean: f64, src_std: f64, tgt_mean: f64, tgt_std: f64) -> f64 {
    tgt_mean + (x - src_mean) * tgt_std / src_std
}

/// Convert an F0 track (Hz, 0 = unvoiced). Unvoiced frames stay 0.
pub fn lg_convert_f0(f0: &[f64], src: &LgStats, tgt: &LgStats) -> Vec<f64> {
    f0.iter()
        .map(|&f| {
            if f > 0.0 {
                lg_map(f.ln(), src.lf0_mean, src.lf0_std, tgt.lf0_mean, tgt.lf0_std).exp()
            } else {
                0.0
            }
        })
        .collect()
}

/// Map an utterance's log-contour (mean, std) from source to target
/// statistics: the mean moves like a frame value, the spread scales by the
/// ratio of the two spreads.
pub fn lg_map_contour(
    (mean, std): (f64, f64),
    src_mean: f64,
    src_std: f64,
    tgt_mean: f64,
    tgt_std: f64,
) -> (f64, f64) {
    (lg_map(mean, src_mean, src_std, tgt_mean, tgt_std), std * tgt_std / src_std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form() {
        let src = LgStats {
            lf0_mean: 5.0,
            lf0_std: 0.1,
            le_mean: 0.0,
            le_std: 1.0,
        };
        let tgt = LgStats {
            lf0_mean: 5.5,
            lf0_std: 0.2,
            ..src
        };
        let out = lg_convert_f0(&[0.0, 5f64.exp(), 5.1f64.exp()], &src, &tgt);
        assert_eq!(out[0], 0.0);
        assert!((out[1] - 5.5f64.exp()).abs() < 1e-9);
        assert!((out[2] - 5.7f64.exp()).abs() < 1e-9);
    }
}
