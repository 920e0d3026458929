//! Dynamic time warping over frame sequences.

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwPath {
    /// Aligned `(i, j)` frame pairs from `(0, 0)` to `(T1−1, T2−1)`.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of local Euclidean distances along the path.
    pub cost: f64,
}

impl DtwPath {
    /// Monotone, unit-step, corner-to-corner.
    pub fn is_valid(&self, t1: usize, t2: usize) -> bool {
        let Some(&first) = self.pairs.first() else {
            return false;
        };
        let last = *self.pairs.last().expect("non-empty");
        first == (0, 0)
            && last == (t1.wrapping_sub(1), t2.wrapping_sub(1))
            && self.pairs.windows(2).all(|w| {
                let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
                matches!((di, dj), (1, 0) | (0, 1) | (1, 1))
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DtwOptions {
    /// Sakoe-Chiba half-width around the length-scaled diagonal, in frames of
    /// the shorter sequence.
    pub band: Option<usize>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, PartialEq)]
enum Step {
    Start,
    Diagonal,
    Down,
    Right,
}

/// Minimum-cost alignment under steps (1,1), (1,0), (0,1). Ties prefer the
/// diagonal, then (1,0).
pub fn dtw_align(x: &[Vec<f64>], y: &[Vec<f64>], opts: DtwOptions) -> Result<DtwPath> {
    let (t1, t2) = (x.len(), y.len());
    if t1 == 0 || t2 == 0 {
        return Err(EvalError::Contract("DTW needs two non-empty sequences".into()));
    }
    if x.iter().chain(y).any(|f| f.len() != x[0].len()) {
        return Err(EvalError::Contract("DTW frames differ in dimension".into()));
    }
    // The band is measured on the shorter axis around the rounded diagonal
    // indexed by the longer one, so every band width admits a path.
    let inside = |i: usize, j: usize| match opts.band {
        None => true,
        Some(b) => {
            let (long, short, n_long, n_short) = if t1 >= t2 { (i, j, t1, t2) } else { (j, i, t2, t1) };
            let centre = if n_long > 1 {
                (long as f64 * (n_short - 1) as f64 / (n_long - 1) as f64).round() as usize
            } else {
                0
            };
            short.abs_diff(centre) <= b
        }
    };
    let mut acc = vec![f64::INFINITY; t1 * t2];
    let mut from = vec![Step::Start; t1 * t2];
    for i in 0..t1 {
        for j in 0..t2 {
            if !inside(i, j) && (i, j) != (0, 0) && (i, j) != (t1 - 1, t2 - 1) {
                continue;
            }
            let local = euclidean(&x[i], &y[j]);
            let k = i * t2 + j;
            if i == 0 && j == 0 {
                acc[k] = local;
                continue;
            }
            let mut best = (f64::INFINITY, Step::Start);
            let candidates = [
                (i > 0 && j > 0, Step::Diagonal, (i.wrapping_sub(1), j.wrapping_sub(1))),
                (i > 0, Step::Down, (i.wrapping_sub(1), j)),
                (j > 0, Step::Right, (i, j.wrapping_sub(1))),
            ];
            for (ok, step, (pi, pj)) in candidates {
                if ok && acc[pi * t2 + pj] < best.0 {
                    best = (acc[pi * t2 + pj], step);
                }
            }
            acc[k] = best.0 + local;
            from[k] = best.1;
        }
    }
    let cost = acc[t1 * t2 - 1];
    if !cost.is_finite() {
        return Err(EvalError::Contract(format!(
            "no alignment inside band {:?} for lengths {t1} and {t2}",
            opts.band
        )));
    }
    let (mut i, mut j) = (t1 - 1, t2 - 1);
    let mut pairs = vec![(i, j)];
    loop {
        match from[i * t2 + j] {
            Step::Start => break,
            Step::Diagonal => (i, j) = (i - 1, j - 1),
            Step::Down => i -= 1,
            Step::Right => j -= 1,
        }
        pairs.push((i, j));
    }
    pairs.reverse();
    Ok(DtwPath { pairs, cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn identical_sequences_align_diagonally() {
        let x = seq(&[0.0, 1.0, 3.0, 2.0]);
        let p = dtw_align(&x, &x, DtwOptions::default()).unwrap();
        assert_eq!(p.pairs, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn repeated_frame_is_absorbed() {
        let p = dtw_align(&seq(&[0.0, 0.0, 1.0, 2.0]), &seq(&[0.0, 1.0, 2.0]), DtwOptions::default()).unwrap();
        assert_eq!(p.cost, 0.0);
        assert_eq!(p.pairs, vec![(0, 0), (1, 0), (2, 1), (3, 2)]);
        assert!(p.is_valid(4, 3));
    }

    #[test]
    fn ties_prefer_the_diagonal() {
        let p = dtw_align(&seq(&[0.0, 0.0]), &seq(&[0.0, 0.0]), DtwOptions::default()).unwrap();
        assert_eq!(p.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(dtw_align(&[], &seq(&[1.0]), DtwOptions::default()).is_err());
    }

    #[test]
    fn band_limits_the_search() {
        let x = seq(&[0.0, 5.0, 5.0, 5.0, 5.0, 5.0]);
        let y = seq(&[5.0, 5.0, 5.0, 5.0, 5.0, 0.0]);
        let free = dtw_align(&x, &y, DtwOptions::default()).unwrap();
        let banded = dtw_align(&x, &y, DtwOptions { band: Some(1) }).unwrap();
        assert!(banded.cost >= free.cost);
        assert!(banded.pairs.iter().all(|&(i, j)| (i as i64 - j as i64).abs() <= 1));
    }
}
