//! Emotional voice conversion with a CycleGAN over spectral and prosodic
//! features.
//!
//! The crate covers feature analysis and resynthesis ([`dsp`]), wavelet
//! prosody features ([`prosody`]), the networks and loss assemblies
//! ([`model`]), corpora ([`corpus`]), non-parallel training ([`trainer`]) and
//! utterance conversion ([`converter`]). Network math is generic over the
//! [`ndgrad::Scalar`] precision; the aliases below pick one.

pub mod converter;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod model;
pub mod prosody;
pub mod trainer;

pub use error::{EmovcError, Result};

pub type Generator64 = model::GeneratorNet<f64>;
pub type Generator32 = model::GeneratorNet<f32>;
pub type Discriminator64 = model::DiscriminatorNet<f64>;
pub type Discriminator32 = model::DiscriminatorNet<f32>;
