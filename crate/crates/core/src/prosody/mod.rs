//! Prosody contours: unvoiced interpolation, normalization and the
//! wavelet decomposition used for log F0 and log energy.

mod cwt;
mod track;

pub use cwt::{
    cwt_decompose, cwt_reconstruct, cwt_transform, inverse_transform, mexican_hat,
    mexican_hat_spectrum, reconstruction_gain, reconstruction_response, reconstruction_weight,
    scales, CwtMatrix, BASE_SCALE, MIN_FRAMES,
};
pub use track::{denormalize, interpolate_unvoiced, mean_std, normalize, ProsodyTrack};
