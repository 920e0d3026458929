//! Objective evaluation of converted speech: dynamic time warping,
//! mel-cepstral distortion, log-F0 error, a held-out emotion probe and
//! comparison reports.

pub mod dtw;
pub mod error;
pub mod metrics;
pub mod probe;
pub mod report;

pub use dtw::{dtw_align, DtwOptions, DtwPath};
pub use error::{EvalError, Result};
pub use metrics::{frame_mcd, logf0_mse, mcd, LogF0Error, McdOptions, MCD_SCALE};
pub use probe::{Probe, ProbeConfig, PROBE_COMBO, PROBE_WINDOW};
pub use report::{evaluate_pair, ComparisonTable, EvalOptions, EvalReport, TableRow, UtteranceMetrics};
