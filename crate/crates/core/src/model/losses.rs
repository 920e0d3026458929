//! Loss assemblies: adversarial, cycle consistency, emotion classification
//! and the weighted full objective.
//!
//! Everything here returns graph values; which network ascends or descends a
//! term is decided by the trainer.

use ndgrad::{add, bce, gan_log, l1, scale, Scalar, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{EmovcError, Result};

/// Emotion A is labelled 0, emotion B is labelled 1.
pub const LABEL_A: f64 = 0.0;
pub const LABEL_B: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Cycle-consistency weight.
    pub lambda1: f64,
    /// Emotion-classification weight.
    pub lambda2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 10.0,
            lambda2: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.lambda1 >= 0.0 && self.lambda2 >= 0.0 {
            Ok(())
        } else {
            Err(EmovcError::Config(format!(
                "loss weights must be non-negative, got lambda1={} lambda2={}",
                self.lambda1, self.lambda2
            )))
        }
    }
}

fn label_like<T: Scalar>(t: &Tensor<T>, label: f64) -> Tensor<T> {
    Tensor::full(t.shape(), T::lit(label))
}

/// `E[log D(real)] + E[log(1 − D(fake))]` over clamped probabilities.
pub fn adversarial_loss<T: Scalar>(d_real: &Tensor<T>, d_fake: &Tensor<T>) -> Result<Tensor<T>> {
    let real = gan_log(d_real)?;
    // mean log(1 − p) is exactly −BCE(p, 0).
    let fake = scale(&bce(d_fake, &label_like(d_fake, 0.0))?, -T::one());
    Ok(add(&real, &fake)?)
}

/// Non-saturating generator term: `−E[log D(fake)]`.
pub fn generator_adversarial_loss<T: Scalar>(d_fake: &Tensor<T>) -> Result<Tensor<T>> {
    Ok(scale(&gan_log(d_fake)?, -T::one()))
}

/// `mean|S_ABA − S_A| + mean|S_BAB − S_B|`.
pub fn cycle_loss<T: Scalar>(
    s_a: &Tensor<T>,
    s_aba: &Tensor<T>,
    s_b: &Tensor<T>,
    s_bab: &Tensor<T>,
) -> Result<Tensor<T>> {
    Ok(add(&l1(s_aba, s_a)?, &l1(s_bab, s_b)?)?)
}

/// Classifier outputs on the six feature sets, in the order
/// `S_A, S_AB, S_ABA, S_B, S_BA, S_BAB`.
#[derive(Debug, Clone)]
pub struct ClassifierOutputs<T: Scalar> {
    pub a: Tensor<T>,
    pub ab: Tensor<T>,
    pub aba: Tensor<T>,
    pub b: Tensor<T>,
    pub ba: Tensor<T>,
    pub bab: Tensor<T>,
}

impl<T: Scalar> ClassifierOutputs<T> {
    /// (probabilities, desired label) pairs.
    pub fn terms(&self) -> [(&Tensor<T>, f64); 6] {
        [
            (&self.a, LABEL_A),
            (&self.ab, LABEL_B),
            (&self.aba, LABEL_A),
            (&self.b, LABEL_B),
            (&self.ba, LABEL_A),
            (&self.bab, LABEL_B),
        ]
    }
}

/// Sum of the six binary cross-entropy terms: genuine, converted and cycled
/// features of each emotion against the label they should carry.
pub fn emotion_loss<T: Scalar>(c: &ClassifierOutputs<T>) -> Result<Tensor<T>> {
    let mut total: Option<Tensor<T>> = None;
    for (p, label) in c.terms() {
        let term = bce(p, &label_like(p, label))?;
        total = Some(match total {
            None => term,
            Some(acc) => add(&acc, &term)?,
        });
    }
    Ok(total.expect("six terms"))
}

/// Classifier loss on genuine features only.
pub fn classifier_genuine_loss<T: Scalar>(c_a: &Tensor<T>, c_b: &Tensor<T>) -> Result<Tensor<T>> {
    Ok(add(
        &bce(c_a, &label_like(c_a, LABEL_A))?,
        &bce(c_b, &label_like(c_b, LABEL_B))?,
    )?)
}

/// `adv_AB + adv_BA + λ1·cyc + λ2·emo`.
pub fn full_objective<T: Scalar>(
    adv_ab: &Tensor<T>,
    adv_ba: &Tensor<T>,
    cyc: &Tensor<T>,
    emo: &Tensor<T>,
    w: LossWeights,
) -> Result<Tensor<T>> {
    w.validate()?;
    let adv = add(adv_ab, adv_ba)?;
    let weighted = add(&scale(cyc, T::lit(w.lambda1)), &scale(emo, T::lit(w.lambda2)))?;
    Ok(add(&adv, &weighted)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(v: &[f64]) -> Tensor<f64> {
        Tensor::new(&[v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn adversarial_at_chance() {
        let v = adversarial_loss(&probs(&[0.5; 3]), &probs(&[0.5; 3])).unwrap().item();
        assert!((v - 2.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn adversarial_supremum_is_zero_up_to_clamp() {
        let v = adversarial_loss(&probs(&[1.0]), &probs(&[0.0])).unwrap().item();
        assert!(v <= 0.0 && v > -1e-6, "{v}");
    }

    #[test]
    fn full_objective_direct_value() {
        let s = |v: f64| Tensor::<f64>::scalar(v);
        let w = LossWeights {
            lambda1: 10.0,
            lambda2: 1.0,
        };
        let v = full_objective(&s(-1.0), &s(-1.0), &s(2.0), &s(3.0), w).unwrap().item();
        assert_eq!(v, 21.0);
        let w0 = LossWeights {
            lambda1: 0.0,
            lambda2: 0.0,
        };
        assert_eq!(full_objective(&s(-1.0), &s(-2.5), &s(2.0), &s(3.0), w0).unwrap().item(), -3.5);
        let neg = LossWeights {
            lambda1: -1.0,
            lambda2: 0.0,
        };
        assert!(full_objective(&s(0.0), &s(0.0), &s(0.0), &s(0.0), neg).is_err());
    }
}
