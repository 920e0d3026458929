use crate::dsp::energy_contour;
use crate::error::{EmovcError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub envelope: Vec<Vec<f64>>,
    /// Frames with zero energy but a positive target, left unscaled.
    pub skipped: Vec<usize>,
}

/// Scale each envelope frame so its bin-sum energy equals the target:
/// (i) measure the frame energies, (ii) take the ratio to the targets,
/// (iii) multiply each frame by its ratio.
pub fn energy_rescale(envelope: &[Vec<f64>], target: &[f64]) -> Result<Rescaled> {
    if envelope.len() != target.len() {
        return Err(EmovcError::Contract(format!(
            "{} envelope frames but {} target energies",
            envelope.len(),
            target.len()
        )));
    }
    if let Some(i) = target.iter().position(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(EmovcError::Contract(format!("target energy {} at frame {i}", target[i])));
    }
    if envelope.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(EmovcError::Contract("envelope must be finite and non-negative".into()));
    }
    let current = energy_contour(envelope);
    let mut skipped = Vec::new();
    let out = envelope
        .iter()
        .zip(current.iter().zip(target))
        .enumerate()
        .map(|(i, (frame, (&e_t, &e_c)))| {
            if e_t == 0.0 {
                if e_c > 0.0 {
                    skipped.push(i);
                }
                return frame.clone();
            }
            let r = e_c / e_t;
            frame.iter().map(|v| v * r).collect()
        })
        .collect();
    if !skipped.is_empty() {
        log::warn!("energy rescaling skipped {} zero-energy frame(s)", skipped.len());
    }
    Ok(Rescaled {
        envelope: out,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_when_targets_match() {
        let env = vec![vec![0.5, 1.5], vec![2.0, 2.0]];
        let r = energy_rescale(&env, &energy_contour(&env)).unwrap();
        assert_eq!(r.envelope, env);
    }

    #[test]
    fn doubling_target_doubles_frames() {
        let env = vec![vec![0.25, 0.75, 1.0]];
        let r = energy_rescale(&env, &[4.0]).unwrap();
        assert_eq!(r.envelope[0], vec![0.5, 1.5, 2.0]);
    }

    #[test]
    fn zero_frames_are_skipped() {
        let r = energy_rescale(&[vec![0.0, 0.0], vec![1.0, 1.0]], &[3.0, 4.0]).unwrap();
        assert_eq!(r.skipped, vec![0]);
        assert_eq!(r.envelope[1], vec![2.0, 2.0]);
    }
}
