//! Non-parallel pairing: each draw picks an A utterance and a B utterance
//! independently and uniformly, then an independent crop offset in each.

use std::sync::Arc;

use ndgrad::{Scalar, Tensor};
use rand::Rng;

use crate::converter::FeatureTensor;
use crate::error::{EmovcError, Result};

#[derive(Debug, Clone)]
pub struct PairSampler {
    pool_a: Arc<Vec<FeatureTensor>>,
    pool_b: Arc<Vec<FeatureTensor>>,
}

/// One drawn pair of crops (height × width, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub a_index: usize,
    pub b_index: usize,
    pub a_offset: usize,
    pub b_offset: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Uniform start column; utterances shorter than `width` wrap around.
fn offset(rng: &mut impl Rng, frames: usize, width: usize) -> usize {
    if frames >= width {
        rng.gen_range(0..=frames - width)
    } else {
        rng.gen_range(0..frames)
    }
}

impl PairSampler {
    pub fn new(pool_a: Vec<FeatureTensor>, pool_b: Vec<FeatureTensor>) -> Result<Self> {
        if pool_a.is_empty() || pool_b.is_empty() {
            return Err(EmovcError::Config(format!(
                "training pools must be non-empty (A has {}, B has {})",
                pool_a.len(),
                pool_b.len()
            )));
        }
        let h = pool_a[0].height();
        if pool_a.iter().chain(&pool_b).any(|f| f.height() != h || f.frames == 0) {
            return Err(EmovcError::Config("pool tensors must share one layout and have frames".into()));
        }
        Ok(Self {
            pool_a: Arc::new(pool_a),
            pool_b: Arc::new(pool_b),
        })
    }

    pub fn pool_sizes(&self) -> (usize, usize) {
        (self.pool_a.len(), self.pool_b.len())
    }

    pub fn height(&self) -> usize {
        self.pool_a[0].height()
    }

    pub fn sample_pair(&self, rng: &mut impl Rng, crop_width: usize) -> Pair {
        let a_index = rng.gen_range(0..self.pool_a.len());
        let b_index = rng.gen_range(0..self.pool_b.len());
        let (fa, fb) = (&self.pool_a[a_index], &self.pool_b[b_index]);
        let a_offset = offset(rng, fa.frames, crop_width);
        let b_offset = offset(rng, fb.frames, crop_width);
        Pair {
            a_index,
            b_index,
            a_offset,
            b_offset,
            a: fa.crop(a_offset, crop_width),
            b: fb.crop(b_offset, crop_width),
        }
    }

    /// `batch` pairs stacked as two `[batch, 1, H, crop_width]` tensors.
    pub fn sample_batch<T: Scalar>(
        &self,
        rng: &mut impl Rng,
        crop_width: usize,
        batch: usize,
    ) -> (Tensor<T>, Tensor<T>) {
        let h = self.height();
        let mut a = Vec::with_capacity(batch * h * crop_width);
        let mut b = Vec::with_capacity(batch * h * crop_width);
        for _ in 0..batch {
            let p = self.sample_pair(rng, crop_width);
            a.extend(p.a);
            b.extend(p.b);
        }
        let shape = [batch, 1, h, crop_width];
        (
            Tensor::from_f64(&shape, &a).expect("batch shape"),
            Tensor::from_f64(&shape, &b).expect("batch shape"),
        )
    }
}
