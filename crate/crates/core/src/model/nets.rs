//! Generator and discriminator/classifier networks.

use ndgrad::{
    activate, add, conv2d, conv_transpose2d, instance_norm, Activation, ConvSpec, Padding, ParamSet,
    Scalar, Tensor,
};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{EmovcError, Result};

const IN_EPS: f64 = 1e-5;
const INIT_STD: f64 = 0.02;
pub const RESIDUAL_BLOCKS: usize = 6;
pub const LEAKY_SLOPE: f64 = 0.01;
/// Total spatial reduction of the five stride-2 discriminator convolutions.
pub const DISCRIMINATOR_STRIDE: usize = 32;

/// Channel width `base·ρ`, never below one.
pub fn scaled_width(base: usize, rho: f64) -> usize {
    ((base as f64 * rho).round() as usize).max(1)
}

#[derive(Debug, Clone, Copy)]
struct Conv {
    spec: ConvSpec,
    weight: usize,
    bias: usize,
    transpose: bool,
}

#[derive(Debug, Clone, Copy)]
struct Norm {
    scale: usize,
    shift: usize,
}

fn normal_values(n: usize, std: f64, rng: &mut impl Rng) -> Vec<f64> {
    let dist = Normal::new(0.0, std).expect("valid normal");
    (0..n).map(|_| dist.sample(rng)).collect()
}

fn lit<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn add_conv<T: Scalar>(
    params: &mut ParamSet<T>,
    name: &str,
    spec: ConvSpec,
    transpose: bool,
    rng: &mut impl Rng,
) -> Result<Conv> {
    let shape = if transpose {
        spec.transpose_weight_shape()
    } else {
        spec.conv_weight_shape()
    };
    let n = shape.iter().product();
    let weight = params.push(format!("{name}.w"), &shape, lit(&normal_values(n, INIT_STD, rng)))?;
    let bias = params.push(format!("{name}.b"), &[spec.out_channels], vec![T::zero(); spec.out_channels])?;
    Ok(Conv {
        spec,
        weight,
        bias,
        transpose,
    })
}

fn add_norm<T: Scalar>(params: &mut ParamSet<T>, name: &str, channels: usize) -> Result<Norm> {
    let scale = params.push(format!("{name}.scale"), &[channels], vec![T::one(); channels])?;
    let shift = params.push(format!("{name}.shift"), &[channels], vec![T::zero(); channels])?;
    Ok(Norm { scale, shift })
}

fn run_conv<T: Scalar>(params: &ParamSet<T>, c: &Conv, x: &Tensor<T>) -> Result<Tensor<T>> {
    let (w, b) = (params.tensor(c.weight), params.tensor(c.bias));
    Ok(if c.transpose {
        conv_transpose2d(x, &c.spec, w, b)?
    } else {
        conv2d(x, &c.spec, w, b)?
    })
}

fn run_norm<T: Scalar>(params: &ParamSet<T>, n: &Norm, x: &Tensor<T>) -> Result<Tensor<T>> {
    Ok(instance_norm(x, params.tensor(n.scale), params.tensor(n.shift), T::lit(IN_EPS))?)
}

fn relu<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    Ok(activate(x, Activation::Relu)?)
}

/// Anything that maps a `[B, 1, H, W]` feature tensor to one of the same
/// shape. Implemented by [`GeneratorNet`] and by [`IdentityMapper`].
pub trait FeatureMapper<T: Scalar> {
    fn map(&self, x: &Tensor<T>) -> Result<Tensor<T>>;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityMapper;

impl<T: Scalar> FeatureMapper<T> for IdentityMapper {
    fn map(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(x.clone())
    }
}

#[derive(Debug, Clone, Copy)]
struct ResidualBlock {
    conv1: Conv,
    norm1: Norm,
    conv2: Conv,
    norm2: Norm,
}

/// Fully convolutional encoder / residual / decoder generator:
/// conv 3×9 → two stride-2 4×8 down-sampling convs → six residual blocks →
/// two stride-2 4×4 transposed convs → conv 7×7 to one channel. Widths are
/// 64/128/256 scaled by `rho`.
#[derive(Debug, Clone)]
pub struct GeneratorNet<T: Scalar> {
    rho: f64,
    params: ParamSet<T>,
    conv_in: Conv,
    norm_in: Norm,
    down: [(Conv, Norm); 2],
    residual: Vec<ResidualBlock>,
    up: [(Conv, Norm); 2],
    conv_out: Conv,
}

impl<T: Scalar> GeneratorNet<T> {
    pub fn new(rho: f64, rng: &mut impl Rng) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(EmovcError::Config(format!("channel scale rho must be positive, got {rho}")));
        }
        let (c1, c2, c3) = (scaled_width(64, rho), scaled_width(128, rho), scaled_width(256, rho));
        let mut p = ParamSet::new();
        let conv_in = add_conv(&mut p, "conv_in", ConvSpec::new(3, 9, 1, c1, 1, Padding::new(1, 1, 4, 4)), false, rng)?;
        let norm_in = add_norm(&mut p, "norm_in", c1)?;
        let down_pad = Padding::new(1, 1, 3, 3);
        let d1 = add_conv(&mut p, "down1", ConvSpec::new(4, 8, c1, c2, 2, down_pad), false, rng)?;
        let n1 = add_norm(&mut p, "down1_norm", c2)?;
        let d2 = add_conv(&mut p, "down2", ConvSpec::new(4, 8, c2, c3, 2, down_pad), false, rng)?;
        let n2 = add_norm(&mut p, "down2_norm", c3)?;
        let mut residual = Vec::with_capacity(RESIDUAL_BLOCKS);
        for i in 0..RESIDUAL_BLOCKS {
            let spec = ConvSpec::new(3, 3, c3, c3, 1, Padding::uniform(1));
            residual.push(ResidualBlock {
                conv1: add_conv(&mut p, &format!("res{i}.conv1"), spec, false, rng)?,
                norm1: add_norm(&mut p, &format!("res{i}.norm1"), c3)?,
                conv2: add_conv(&mut p, &format!("res{i}.conv2"), spec, false, rng)?,
                norm2: add_norm(&mut p, &format!("res{i}.norm2"), c3)?,
            });
        }
        let u1 = add_conv(&mut p, "up1", ConvSpec::new(4, 4, c3, c2, 2, Padding::uniform(1)), true, rng)?;
        let un1 = add_norm(&mut p, "up1_norm", c2)?;
        let u2 = add_conv(&mut p, "up2", ConvSpec::new(4, 4, c2, c1, 2, Padding::uniform(1)), true, rng)?;
        let un2 = add_norm(&mut p, "up2_norm", c1)?;
        let conv_out = add_conv(&mut p, "conv_out", ConvSpec::new(7, 7, c1, 1, 1, Padding::uniform(3)), false, rng)?;
        Ok(Self {
            rho,
            params: p,
            conv_in,
            norm_in,
            down: [(d1, n1), (d2, n2)],
            residual,
            up: [(u1, un1), (u2, un2)],
            conv_out,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    /// Copy whose parameters are untracked constants.
    pub fn frozen(&self) -> Self {
        Self {
            params: self.params.frozen(),
            ..self.clone()
        }
    }

    /// Zeroes both convolutions (weights and biases) of every residual
    /// branch, turning each residual block into the identity.
    pub fn zero_residual_branches(&mut self) -> Result<()> {
        for blk in self.residual.clone() {
            for c in [blk.conv1, blk.conv2] {
                for idx in [c.weight, c.bias] {
                    let n = self.params.tensor(idx).numel();
                    self.params.set(idx, vec![T::zero(); n])?;
                }
            }
        }
        Ok(())
    }

    fn residual_block(&self, blk: &ResidualBlock, x: &Tensor<T>) -> Result<Tensor<T>> {
        let p = &self.params;
        let h = relu(&run_norm(p, &blk.norm1, &run_conv(p, &blk.conv1, x)?)?)?;
        let h = run_norm(p, &blk.norm2, &run_conv(p, &blk.conv2, &h)?)?;
        Ok(add(x, &h)?)
    }

    /// Activations entering the residual stack, and leaving it.
    pub fn residual_io(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let h = self.encode(x)?;
        let mut r = h.clone();
        for blk in &self.residual {
            r = self.residual_block(blk, &r)?;
        }
        Ok((h, r))
    }

    fn encode(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        check_generator_input(x)?;
        let p = &self.params;
        let mut h = relu(&run_norm(p, &self.norm_in, &run_conv(p, &self.conv_in, x)?)?)?;
        for (c, n) in &self.down {
            h = relu(&run_norm(p, n, &run_conv(p, c, &h)?)?)?;
        }
        Ok(h)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (_, mut h) = self.residual_io(x)?;
        let p = &self.params;
        for (c, n) in &self.up {
            h = relu(&run_norm(p, n, &run_conv(p, c, &h)?)?)?;
        }
        run_conv(p, &self.conv_out, &h)
    }
}

impl<T: Scalar> FeatureMapper<T> for GeneratorNet<T> {
    fn map(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward(x)
    }
}

fn check_generator_input<T: Scalar>(x: &Tensor<T>) -> Result<()> {
    match *x.shape() {
        [_, 1, h, w] if h % 4 == 0 && w % 4 == 0 && h > 0 && w > 0 => Ok(()),
        [_, 1, h, w] => Err(EmovcError::Contract(format!(
            "generator input height {h} and width {w} must both be positive multiples of 4"
        ))),
        _ => Err(EmovcError::Contract(format!(
            "generator input must be [B, 1, H, W], got {:?}",
            x.shape()
        ))),
    }
}

/// Five stride-2 4×4 convolutions with leaky ReLU (64ρ channels doubling to
/// 1024ρ), then a valid convolution whose kernel spans the remaining
/// `⌈H/32⌉×⌈W/32⌉` map, giving one logit per item. Shared by the two
/// discriminators and the emotion classifier.
#[derive(Debug, Clone)]
pub struct DiscriminatorNet<T: Scalar> {
    rho: f64,
    height: usize,
    width: usize,
    params: ParamSet<T>,
    convs: Vec<Conv>,
    head: Conv,
}

/// The emotion classifier has the discriminator architecture with its own
/// parameters.
pub type ClassifierNet<T> = DiscriminatorNet<T>;

impl<T: Scalar> DiscriminatorNet<T> {
    /// Builds a network for `height × width` inputs. `width` must be a
    /// multiple of 32.
    pub fn new(rho: f64, height: usize, width: usize, rng: &mut impl Rng) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(EmovcError::Config(format!("channel scale rho must be positive, got {rho}")));
        }
        if width == 0 || width % DISCRIMINATOR_STRIDE != 0 || height == 0 {
            return Err(EmovcError::Contract(format!(
                "discriminator input {height}x{width}: width must be a positive multiple of {DISCRIMINATOR_STRIDE}"
            )));
        }
        let mut p = ParamSet::new();
        // Pad (1,2) yields ceil(n/2) per stride-2 conv for odd and even n alike.
        let pad = Padding::new(1, 2, 1, 2);
        let mut convs = Vec::new();
        let mut cin = 1;
        let mut cout = scaled_width(64, rho);
        for i in 0..5 {
            convs.push(add_conv(&mut p, &format!("conv{i}"), ConvSpec::new(4, 4, cin, cout, 2, pad), false, rng)?);
            cin = cout;
            cout = scaled_width(64 << (i + 1), rho);
        }
        let (k1, k2) = (height.div_ceil(DISCRIMINATOR_STRIDE), width.div_ceil(DISCRIMINATOR_STRIDE));
        let head = add_conv(&mut p, "head", ConvSpec::new(k1, k2, cin, 1, 1, Padding::default()), false, rng)?;
        Ok(Self {
            rho,
            height,
            width,
            params: p,
            convs,
            head,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn input_hw(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Extents of the output kernel (the map left after the stride-32 stack).
    pub fn head_kernel(&self) -> (usize, usize) {
        (self.head.spec.kernel_h, self.head.spec.kernel_w)
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    pub fn frozen(&self) -> Self {
        Self {
            params: self.params.frozen(),
            ..self.clone()
        }
    }

    /// One logit per batch item, shape `[B]`.
    pub fn logits(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match *x.shape() {
            [_, 1, h, w] if h == self.height && w == self.width => {}
            _ => {
                return Err(EmovcError::Contract(format!(
                    "discriminator built for [B, 1, {}, {}], got {:?}",
                    self.height,
                    self.width,
                    x.shape()
                )))
            }
        }
        let mut h = x.clone();
        for c in &self.convs {
            h = activate(&run_conv(&self.params, c, &h)?, Activation::LeakyRelu(LEAKY_SLOPE))?;
        }
        let out = run_conv(&self.params, &self.head, &h)?;
        debug_assert_eq!(&out.shape()[1..], &[1, 1, 1]);
        Ok(out.reshape(&[x.shape()[0]])?)
    }

    /// Probability per batch item, shape `[B]`.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(activate(&self.logits(x)?, Activation::Sigmoid)?)
    }
}
