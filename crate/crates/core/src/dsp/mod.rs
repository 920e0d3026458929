//! Waveform analysis and resynthesis.

mod analysis;
mod config;
mod features;
mod mcc;
mod pitch;
mod spectrum;
mod synth;
mod wav;
mod window;

pub use analysis::analyze;
pub use config::{AnalysisConfig, SynthesisConfig};
pub use features::{FeatureSet, Provenance};
pub use mcc::{
    decode_with as mcc_decode_with, encode_with as mcc_encode_with, energy_contour, mcc_decode,
    mcc_encode, warp_frequency, MelBasis, ENVELOPE_FLOOR,
};
pub use pitch::{PitchTrack, PitchTracker, SILENCE_RMS};
pub use spectrum::EnvelopeAnalyzer;
pub use synth::synthesize;
pub use wav::{read_wav, write_wav, Waveform};
pub use window::hann;
