//! Scalar losses. All reduce by the mean over elements.

use crate::error::{shape_err, NdError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Probabilities entering a log are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    L1,
    Bce,
    GanLog,
}

fn check_finite<T: Scalar>(op: &'static str, ts: &[&Tensor<T>]) -> Result<()> {
    if ts.iter().all(|t| t.all_finite()) {
        Ok(())
    } else {
        Err(NdError::NonFinite { op })
    }
}

fn check_pair<T: Scalar>(op: &'static str, pred: &Tensor<T>, target: &Tensor<T>) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(shape_err(op, format!("{:?} vs {:?}", pred.shape(), target.shape())));
    }
    if pred.numel() == 0 {
        return Err(NdError::InvalidArgument(format!("{op} of empty tensors")));
    }
    check_finite(op, &[pred, target])
}

fn clamp_prob<T: Scalar>(p: T) -> T {
    let lo = T::lit(PROB_CLAMP);
    let hi = T::one() - lo;
    p.max(lo).min(hi)
}

/// Dispatch by kind. `target` is ignored for `GanLog`.
pub fn loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>, kind: LossKind) -> Result<Tensor<T>> {
    match kind {
        LossKind::L1 => l1(pred, target),
        LossKind::Bce => bce(pred, target),
        LossKind::GanLog => gan_log(pred),
    }
}

/// Mean absolute difference.
pub fn l1<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    check_pair("l1", pred, target)?;
    let n = T::from_usize(pred.numel()).unwrap();
    let diff: Vec<T> = pred.data().iter().zip(target.data()).map(|(p, t)| *p - *t).collect();
    let value = diff.iter().map(|d| d.abs()).sum::<T>() / n;
    Ok(Tensor::from_op(
        "l1",
        Vec::new(),
        vec![value],
        vec![pred.clone(), target.clone()],
        move |g| {
            let gp: Vec<T> = diff.iter().map(|d| g[0] * d.signum_or_zero() / n).collect();
            let gt = gp.iter().map(|v| -*v).collect();
            vec![Some(gp), Some(gt)]
        },
    ))
}

trait SignumOrZero {
    fn signum_or_zero(self) -> Self;
}

impl<T: Scalar> SignumOrZero for T {
    fn signum_or_zero(self) -> Self {
        if self > T::zero() {
            T::one()
        } else if self < T::zero() {
            -T::one()
        } else {
            T::zero()
        }
    }
}

/// Binary cross-entropy on probabilities. The gradient is evaluated at the
/// clamped probability and passed straight through the clamp, so saturated
/// predictions still receive a finite, nonzero gradient.
pub fn bce<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    check_pair("bce", pred, target)?;
    let n = T::from_usize(pred.numel()).unwrap();
    let clamped: Vec<T> = pred.data().iter().map(|&p| clamp_prob(p)).collect();
    let targets = target.to_vec();
    let value = clamped
        .iter()
        .zip(&targets)
        .map(|(&p, &t)| -(t * p.ln() + (T::one() - t) * (T::one() - p).ln()))
        .sum::<T>()
        / n;
    Ok(Tensor::from_op(
        "bce",
        Vec::new(),
        vec![value],
        vec![pred.clone(), target.clone()],
        move |g| {
            let gp = clamped
                .iter()
                .zip(&targets)
                .map(|(&p, &t)| g[0] * (-t / p + (T::one() - t) / (T::one() - p)) / n)
                .collect();
            vec![Some(gp), None]
        },
    ))
}

/// Mean of `log p` over clamped probabilities.
pub fn gan_log<T: Scalar>(pred: &Tensor<T>) -> Result<Tensor<T>> {
    if pred.numel() == 0 {
        return Err(NdError::InvalidArgument("gan_log of empty tensor".into()));
    }
    check_finite("gan_log", &[pred])?;
    let n = T::from_usize(pred.numel()).unwrap();
    let clamped: Vec<T> = pred.data().iter().map(|&p| clamp_prob(p)).collect();
    let value = clamped.iter().map(|p| p.ln()).sum::<T>() / n;
    Ok(Tensor::from_op(
        "gan_log",
        Vec::new(),
        vec![value],
        vec![pred.clone()],
        move |g| vec![Some(clamped.iter().map(|&p| g[0] / (p * n)).collect())],
    ))
}
