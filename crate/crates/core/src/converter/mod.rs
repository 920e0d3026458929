//! Utterance conversion: feature assembly, generator application, prosody
//! reconstruction, energy rescaling and resynthesis.

mod assemble;
mod convert;
mod lg;
mod rescale;

pub use assemble::{
    assemble, assemble_rows, disassemble, CwtStats, FeatureRows, FeatureTensor, RowStats,
    STD_FLOOR,
};
pub use convert::{
    convert_features, convert_utterance, ConversionContext, ConversionResult, ConvertedFeatures,
    Direction, MAX_CONVERT_FRAMES,
};
pub use lg::{lg_convert_f0, lg_map, lg_map_contour};
pub use rescale::{energy_rescale, Rescaled};
