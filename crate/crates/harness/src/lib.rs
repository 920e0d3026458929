//! Command-line front end: corpus generation, feature extraction, training,
//! conversion, evaluation and report emission.

pub mod cli;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod plot;

pub use cli::run;
pub use config::Settings;
pub use error::{HarnessError, Result};
