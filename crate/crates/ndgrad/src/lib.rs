//! Dense NCHW tensors with reverse-mode automatic differentiation, sized for
//! small convolutional GANs: convolution, transposed convolution, instance
//! normalization, pointwise activations, a handful of losses, an adaptive
//! moment optimizer and a binary checkpoint container.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision for callers that do not care.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod ops;
pub mod optim;
pub mod params;
pub mod scalar;
pub mod tensor;

pub use checkpoint::{Checkpoint, Record};
pub use error::{NdError, Result};
pub use ops::*;
pub use optim::{AdamConfig, OptimState, StepOutcome};
pub use params::ParamSet;
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type ParamSet64 = ParamSet<f64>;
pub type ParamSet32 = ParamSet<f32>;
pub type OptimState64 = OptimState<f64>;
pub type OptimState32 = OptimState<f32>;
