//! 2-D convolution and transposed convolution over NCHW tensors, lowered to
//! GEMM through an explicit column buffer.

use std::sync::Arc;

use crate::error::{shape_err, NdError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Explicit per-side zero padding. Even kernels need asymmetric padding to
/// realize exact halving/doubling of spatial extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Padding {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl Padding {
    pub const fn new(top: usize, bottom: usize, left: usize, right: usize) -> Self {
        Self {
            top,
            bottom,
            left,
            right,
        }
    }

    pub const fn uniform(p: usize) -> Self {
        Self::new(p, p, p, p)
    }

    pub const fn vertical(&self) -> usize {
        self.top + self.bottom
    }

    pub const fn horizontal(&self) -> usize {
        self.left + self.right
    }
}

/// Kernel geometry in `kh×kw×Cin×Cout` terms.
///
/// For [`conv2d`] the weight is `[Cout, Cin, kh, kw]`; for
/// [`conv_transpose2d`] it is `[Cin, Cout, kh, kw]`, `Cin` being the channel
/// count of the transposed convolution's input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    pub padding: Padding,
}

impl ConvSpec {
    pub fn new(
        kernel_h: usize,
        kernel_w: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        padding: Padding,
    ) -> Self {
        Self {
            kernel_h,
            kernel_w,
            in_channels,
            out_channels,
            stride,
            padding,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let extents = [
            ("kernel_h", self.kernel_h),
            ("kernel_w", self.kernel_w),
            ("in_channels", self.in_channels),
            ("out_channels", self.out_channels),
            ("stride", self.stride),
        ];
        for (name, v) in extents {
            if v == 0 {
                return Err(NdError::InvalidArgument(format!("conv spec {name} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn conv_weight_shape(&self) -> [usize; 4] {
        [self.out_channels, self.in_channels, self.kernel_h, self.kernel_w]
    }

    pub fn transpose_weight_shape(&self) -> [usize; 4] {
        [self.in_channels, self.out_channels, self.kernel_h, self.kernel_w]
    }

    /// Output spatial extents of [`conv2d`] for an `h×w` input.
    pub fn conv_output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let ph = h + self.padding.vertical();
        let pw = w + self.padding.horizontal();
        if ph < self.kernel_h || pw < self.kernel_w {
            return None;
        }
        Some((
            (ph - self.kernel_h) / self.stride + 1,
            (pw - self.kernel_w) / self.stride + 1,
        ))
    }
}

/// `(h - 1)·stride - pad + k`, or `None` when that is not positive.
pub fn conv_transpose_output_extent(h: usize, k: usize, stride: usize, pad: usize) -> Option<usize> {
    let grown = (h.checked_sub(1)?) * stride + k;
    grown.checked_sub(pad).filter(|&v| v >= 1)
}

/// Sliding-window geometry over an image of `c×h×w` producing `ho×wo` taps.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    top: usize,
    left: usize,
    ho: usize,
    wo: usize,
}

impl Geometry {
    fn rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn cols(&self) -> usize {
        self.ho * self.wo
    }

    fn image_len(&self) -> usize {
        self.c * self.h * self.w
    }

    /// Input index along one axis for output position `o` and kernel tap `k`.
    #[inline]
    fn src(o: usize, k: usize, stride: usize, pad: usize, extent: usize) -> Option<usize> {
        let pos = (o * stride + k) as isize - pad as isize;
        (pos >= 0 && (pos as usize) < extent).then_some(pos as usize)
    }

    fn im2col<T: Scalar>(&self, image: &[T], cols: &mut [T]) {
        let n = self.cols();
        for ci in 0..self.c {
            let plane = &image[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = (ci * self.kh + ky) * self.kw + kx;
                    let out = &mut cols[row * n..(row + 1) * n];
                    for oy in 0..self.ho {
                        let dst = &mut out[oy * self.wo..(oy + 1) * self.wo];
                        match Self::src(oy, ky, self.stride, self.top, self.h) {
                            None => dst.fill(T::zero()),
                            Some(iy) => {
                                let src_row = &plane[iy * self.w..(iy + 1) * self.w];
                                for (ox, d) in dst.iter_mut().enumerate() {
                                    *d = match Self::src(ox, kx, self.stride, self.left, self.w) {
                                        Some(ix) => src_row[ix],
                                        None => T::zero(),
                                    };
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`Geometry::im2col`]: scatter-adds columns into `image`.
    fn col2im<T: Scalar>(&self, cols: &[T], image: &mut [T]) {
        let n = self.cols();
        for ci in 0..self.c {
            let plane = &mut image[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = (ci * self.kh + ky) * self.kw + kx;
                    let src = &cols[row * n..(row + 1) * n];
                    for oy in 0..self.ho {
                        let Some(iy) = Self::src(oy, ky, self.stride, self.top, self.h) else {
                            continue;
                        };
                        let dst_row = &mut plane[iy * self.w..(iy + 1) * self.w];
                        for ox in 0..self.wo {
                            if let Some(ix) = Self::src(ox, kx, self.stride, self.left, self.w) {
                                dst_row[ix] += src[oy * self.wo + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn check_rank4<T: Scalar>(op: &'static str, x: &Tensor<T>) -> Result<[usize; 4]> {
    match *x.shape() {
        [b, c, h, w] => Ok([b, c, h, w]),
        _ => Err(shape_err(op, format!("input must be rank 4 (B,C,H,W), got {:?}", x.shape()))),
    }
}

fn check_params<T: Scalar>(
    op: &'static str,
    spec: &ConvSpec,
    weight: &Tensor<T>,
    want_weight: [usize; 4],
    bias: &Tensor<T>,
) -> Result<()> {
    spec.validate()?;
    if weight.shape() != want_weight {
        return Err(shape_err(
            op,
            format!("weight shape {:?}, spec requires {:?}", weight.shape(), want_weight),
        ));
    }
    if bias.shape() != [spec.out_channels] {
        return Err(shape_err(
            op,
            format!("bias shape {:?}, spec requires [{}]", bias.shape(), spec.out_channels),
        ));
    }
    Ok(())
}

fn add_bias<T: Scalar>(out: &mut [T], bias: &[T], plane: usize) {
    for (chunk, b) in out.chunks_mut(plane).zip(bias.iter().cycle()) {
        for v in chunk {
            *v += *b;
        }
    }
}

fn bias_grad<T: Scalar>(g: &[T], channels: usize, plane: usize) -> Vec<T> {
    let mut gb = vec![T::zero(); channels];
    for (i, chunk) in g.chunks(plane).enumerate() {
        gb[i % channels] += chunk.iter().copied().sum::<T>();
    }
    gb
}

/// Cross-correlation `[B,Cin,H,W] → [B,Cout,H',W']` with
/// `H' = floor((H + pad_top + pad_bottom − kh)/stride) + 1` (same for W).
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    spec: &ConvSpec,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let [b, c, h, w] = check_rank4("conv2d", input)?;
    check_params("conv2d", spec, weight, spec.conv_weight_shape(), bias)?;
    if c != spec.in_channels {
        return Err(shape_err(
            "conv2d",
            format!("input channels {c} != spec in_channels {}", spec.in_channels),
        ));
    }
    let Some((ho, wo)) = spec.conv_output_hw(h, w) else {
        return Err(shape_err(
            "conv2d",
            format!(
                "padded input {}x{} smaller than kernel {}x{} (height or width)",
                h + spec.padding.vertical(),
                w + spec.padding.horizontal(),
                spec.kernel_h,
                spec.kernel_w
            ),
        ));
    };
    let geo = Geometry {
        c,
        h,
        w,
        kh: spec.kernel_h,
        kw: spec.kernel_w,
        stride: spec.stride,
        top: spec.padding.top,
        left: spec.padding.left,
        ho,
        wo,
    };
    let cout = spec.out_channels;
    let (k, n) = (geo.rows(), geo.cols());
    let x = input.data();
    let wdata = weight.data_arc();

    let mut cols = vec![T::zero(); b * k * n];
    let mut out = vec![T::zero(); b * cout * n];
    for bi in 0..b {
        let col_b = &mut cols[bi * k * n..(bi + 1) * k * n];
        geo.im2col(&x[bi * geo.image_len()..(bi + 1) * geo.image_len()], col_b);
        T::gemm(cout, k, n, &wdata, false, col_b, false, &mut out[bi * cout * n..(bi + 1) * cout * n], false);
    }
    add_bias(&mut out, bias.data(), n);

    let need_input = input.is_tracked();
    let need_weight = weight.is_tracked();
    let cols = Arc::new(cols);
    Ok(Tensor::from_op(
        "conv2d",
        vec![b, cout, ho, wo],
        out,
        vec![input.clone(), weight.clone(), bias.clone()],
        move |g| {
            let mut gx = need_input.then(|| vec![T::zero(); b * geo.image_len()]);
            let mut gw = need_weight.then(|| vec![T::zero(); cout * k]);
            let mut dcols = vec![T::zero(); if need_input { k * n } else { 0 }];
            for bi in 0..b {
                let g_b = &g[bi * cout * n..(bi + 1) * cout * n];
                if let Some(gw) = gw.as_mut() {
                    T::gemm(cout, n, k, g_b, false, &cols[bi * k * n..(bi + 1) * k * n], true, gw, true);
                }
                if let Some(gx) = gx.as_mut() {
                    T::gemm(k, cout, n, &wdata, true, g_b, false, &mut dcols, false);
                    geo.col2im(&dcols, &mut gx[bi * geo.image_len()..(bi + 1) * geo.image_len()]);
                }
            }
            vec![gx, gw, Some(bias_grad(g, cout, n))]
        },
    ))
}

/// Transposed convolution (the adjoint of [`conv2d`] in its input):
/// `H' = (H − 1)·stride − pad_top − pad_bottom + kh`. Kernel 4, stride 2 and
/// unit padding on every side yields exactly `2H × 2W`.
pub fn conv_transpose2d<T: Scalar>(
    input: &Tensor<T>,
    spec: &ConvSpec,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let [b, c, h, w] = check_rank4("conv_transpose2d", input)?;
    check_params("conv_transpose2d", spec, weight, spec.transpose_weight_shape(), bias)?;
    if c != spec.in_channels {
        return Err(shape_err(
            "conv_transpose2d",
            format!("input channels {c} != spec in_channels {}", spec.in_channels),
        ));
    }
    let out_h = conv_transpose_output_extent(h, spec.kernel_h, spec.stride, spec.padding.vertical());
    let out_w = conv_transpose_output_extent(w, spec.kernel_w, spec.stride, spec.padding.horizontal());
    let (Some(oh), Some(ow)) = (out_h, out_w) else {
        return Err(shape_err(
            "conv_transpose2d",
            format!("padding exceeds output extent for input {h}x{w} (height or width)"),
        ));
    };
    let cout = spec.out_channels;
    // The equivalent forward convolution maps the (cout, oh, ow) output back
    // onto the (h, w) input grid.
    let geo = Geometry {
        c: cout,
        h: oh,
        w: ow,
        kh: spec.kernel_h,
        kw: spec.kernel_w,
        stride: spec.stride,
        top: spec.padding.top,
        left: spec.padding.left,
        ho: h,
        wo: w,
    };
    debug_assert_eq!(spec.conv_output_hw(oh, ow), Some((h, w)));
    let (k, n) = (geo.rows(), geo.cols());
    let x = input.data_arc();
    let wdata = weight.data_arc();

    let mut out = vec![T::zero(); b * geo.image_len()];
    let mut cols = vec![T::zero(); k * n];
    for bi in 0..b {
        T::gemm(k, c, n, &wdata, true, &x[bi * c * n..(bi + 1) * c * n], false, &mut cols, false);
        geo.col2im(&cols, &mut out[bi * geo.image_len()..(bi + 1) * geo.image_len()]);
    }
    add_bias(&mut out, bias.data(), oh * ow);

    let need_input = input.is_tracked();
    let need_weight = weight.is_tracked();
    Ok(Tensor::from_op(
        "conv_transpose2d",
        vec![b, cout, oh, ow],
        out,
        vec![input.clone(), weight.clone(), bias.clone()],
        move |g| {
            let mut gx = need_input.then(|| vec![T::zero(); b * c * n]);
            let mut gw = need_weight.then(|| vec![T::zero(); c * k]);
            let mut gcols = vec![T::zero(); k * n];
            if need_input || need_weight {
                for bi in 0..b {
                    geo.im2col(&g[bi * geo.image_len()..(bi + 1) * geo.image_len()], &mut gcols);
                    if let Some(gx) = gx.as_mut() {
                        T::gemm(c, k, n, &wdata, false, &gcols, false, &mut gx[bi * c * n..(bi + 1) * c * n], false);
                    }
                    if let Some(gw) = gw.as_mut() {
                        T::gemm(c, n, k, &x[bi * c * n..(bi + 1) * c * n], false, &gcols, true, gw, true);
                    }
                }
            }
            vec![gx, gw, Some(bias_grad(g, cout, oh * ow))]
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: Vec<f64>) -> Tensor<f64> {
        Tensor::new(shape, v).unwrap()
    }

    #[test]
    fn two_by_two_sum_kernel() {
        let x = t(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let spec = ConvSpec::new(2, 2, 1, 1, 1, Padding::default());
        let y = conv2d(&x, &spec, &t(&[1, 1, 2, 2], vec![1.0; 4]), &t(&[1], vec![0.0])).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1, 1]);
        assert_eq!(y.item(), 10.0);
    }

    #[test]
    fn identity_kernel_returns_input() {
        let data: Vec<f64> = (0..2 * 3 * 5 * 4).map(|i| (i as f64).sin()).collect();
        let x = t(&[2, 3, 5, 4], data.clone());
        let spec = ConvSpec::new(1, 1, 3, 3, 1, Padding::default());
        let mut w = vec![0.0; 9];
        for c in 0..3 {
            w[c * 3 + c] = 1.0;
        }
        let y = conv2d(&x, &spec, &t(&[3, 3, 1, 1], w), &t(&[3], vec![0.0; 3])).unwrap();
        assert_eq!(y.data(), &data[..]);
    }

    #[test]
    fn generator_input_block_shape() {
        let x = Tensor::<f64>::zeros(&[1, 1, 36, 128]);
        let spec = ConvSpec::new(3, 9, 1, 64, 1, Padding::new(1, 1, 4, 4));
        let w = Tensor::zeros(&spec.conv_weight_shape());
        let y = conv2d(&x, &spec, &w, &Tensor::zeros(&[64])).unwrap();
        assert_eq!(y.shape(), &[1, 64, 36, 128]);
    }

    #[test]
    fn upsampling_block_shape() {
        let x = Tensor::<f64>::zeros(&[1, 256, 14, 32]);
        let spec = ConvSpec::new(4, 4, 256, 128, 2, Padding::uniform(1));
        let w = Tensor::zeros(&spec.transpose_weight_shape());
        let y = conv_transpose2d(&x, &spec, &w, &Tensor::zeros(&[128])).unwrap();
        assert_eq!(y.shape(), &[1, 128, 28, 64]);
    }

    #[test]
    fn transpose_of_scalar_is_product() {
        let spec = ConvSpec::new(1, 1, 1, 1, 1, Padding::default());
        let y = conv_transpose2d(
            &t(&[1, 1, 1, 1], vec![3.0]),
            &spec,
            &t(&[1, 1, 1, 1], vec![-2.5]),
            &t(&[1], vec![0.0]),
        )
        .unwrap();
        assert_eq!(y.item(), -7.5);
    }

    #[test]
    fn shape_errors_name_the_dimension() {
        let spec = ConvSpec::new(3, 3, 2, 4, 1, Padding::default());
        let x = Tensor::<f64>::zeros(&[1, 3, 8, 8]);
        let err = conv2d(&x, &spec, &Tensor::zeros(&[4, 2, 3, 3]), &Tensor::zeros(&[4])).unwrap_err();
        assert!(err.to_string().contains("channels"), "{err}");

        let x = Tensor::<f64>::zeros(&[1, 2, 2, 8]);
        let err = conv2d(&x, &spec, &Tensor::zeros(&[4, 2, 3, 3]), &Tensor::zeros(&[4])).unwrap_err();
        assert!(err.to_string().contains("height"), "{err}");

        let x = Tensor::<f64>::zeros(&[1, 2, 8, 8]);
        let err = conv2d(&x, &spec, &Tensor::zeros(&[4, 2, 3, 1]), &Tensor::zeros(&[4])).unwrap_err();
        assert!(err.to_string().contains("weight"), "{err}");

        let zero_stride = ConvSpec::new(3, 3, 2, 4, 0, Padding::default());
        assert!(conv2d(&x, &zero_stride, &Tensor::zeros(&[4, 2, 3, 3]), &Tensor::zeros(&[4])).is_err());
    }

    #[test]
    fn transpose_is_adjoint_of_conv() {
        // <conv(x), y> == <x, convT(y)> with shared weights and zero bias.
        let spec = ConvSpec::new(4, 3, 2, 3, 2, Padding::new(1, 2, 1, 0));
        let x: Vec<f64> = (0..2 * 9 * 6).map(|i| ((i * 7 % 13) as f64 - 6.0) / 5.0).collect();
        let w: Vec<f64> = (0..3 * 2 * 4 * 3).map(|i| ((i * 5 % 11) as f64 - 5.0) / 4.0).collect();
        let wt = t(&[3, 2, 4, 3], w);
        let y = conv2d(&t(&[1, 2, 9, 6], x.clone()), &spec, &wt, &Tensor::zeros(&[3])).unwrap();
        let probe: Vec<f64> = (0..y.numel()).map(|i| ((i * 3 % 7) as f64) - 3.0).collect();
        let lhs: f64 = y.data().iter().zip(&probe).map(|(a, b)| a * b).sum();

        let tspec = ConvSpec::new(4, 3, 3, 2, 2, Padding::new(1, 2, 1, 0));
        let back = conv_transpose2d(&t(y.shape(), probe), &tspec, &wt, &Tensor::zeros(&[2])).unwrap();
        assert_eq!(back.shape(), &[1, 2, 9, 6]);
        let rhs: f64 = back.data().iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }
}
