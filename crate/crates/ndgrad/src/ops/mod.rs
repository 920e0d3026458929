mod conv;
mod elementwise;
mod loss;
mod norm;

pub use conv::{conv2d, conv_transpose2d, conv_transpose_output_extent, ConvSpec, Padding};
pub use elementwise::{activate, add, mean, mul, scale, sum, Activation};
pub use loss::{bce, gan_log, l1, loss, LossKind, PROB_CLAMP};
pub use norm::instance_norm;
