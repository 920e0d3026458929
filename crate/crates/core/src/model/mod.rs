mod layout;
pub mod losses;
mod nets;

pub use layout::{FeatureCombo, FeatureLayout, Segment, SegmentKind, CWT_SCALES, HEIGHT_ALIGN, MCC_ORDER};
pub use nets::{
    scaled_width, ClassifierNet, DiscriminatorNet, FeatureMapper, GeneratorNet, IdentityMapper,
    DISCRIMINATOR_STRIDE, LEAKY_SLOPE, RESIDUAL_BLOCKS,
};
