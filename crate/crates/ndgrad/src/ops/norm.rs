use std::sync::Arc;

use crate::error::{shape_err, NdError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Per-(batch, channel) normalization over the spatial plane with a learned
/// per-channel affine map. Uses the population variance.
pub fn instance_norm<T: Scalar>(
    input: &Tensor<T>,
    scale: &Tensor<T>,
    shift: &Tensor<T>,
    eps: T,
) -> Result<Tensor<T>> {
    let [b, c, h, w] = match *input.shape() {
        [b, c, h, w] => [b, c, h, w],
        _ => {
            return Err(shape_err(
                "instance_norm",
                format!("input must be rank 4, got {:?}", input.shape()),
            ))
        }
    };
    if scale.shape() != [c] || shift.shape() != [c] {
        return Err(shape_err(
            "instance_norm",
            format!(
                "scale {:?} / shift {:?} must both be [{c}] (channels)",
                scale.shape(),
                shift.shape()
            ),
        ));
    }
    let plane = h * w;
    if plane < 2 {
        return Err(NdError::DegenerateSlice {
            op: "instance_norm",
            detail: format!("spatial plane {h}x{w} has a single element"),
        });
    }
    let n = T::from_usize(plane).unwrap();
    let x = input.data();
    let (gamma, beta) = (scale.data(), shift.data());

    let mut xhat = vec![T::zero(); x.len()];
    let mut inv_std = vec![T::zero(); b * c];
    let mut out = vec![T::zero(); x.len()];
    for s in 0..b * c {
        let ch = s % c;
        let xs = &x[s * plane..(s + 1) * plane];
        let mean = xs.iter().copied().sum::<T>() / n;
        let var = xs.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / n;
        let denom = (var + eps).sqrt();
        // Zero variance with eps = 0: the centered slice is identically zero.
        let inv = if denom > T::zero() { T::one() / denom } else { T::zero() };
        inv_std[s] = inv;
        for i in 0..plane {
            let xh = (xs[i] - mean) * inv;
            xhat[s * plane + i] = xh;
            out[s * plane + i] = gamma[ch] * xh + beta[ch];
        }
    }

    let xhat = Arc::new(xhat);
    let gamma = scale.data_arc();
    Ok(Tensor::from_op(
        "instance_norm",
        input.shape().to_vec(),
        out,
        vec![input.clone(), scale.clone(), shift.clone()],
        move |g| {
            let mut gx = vec![T::zero(); g.len()];
            let mut gscale = vec![T::zero(); c];
            let mut gshift = vec![T::zero(); c];
            for s in 0..b * c {
                let ch = s % c;
                let gs = &g[s * plane..(s + 1) * plane];
                let xh = &xhat[s * plane..(s + 1) * plane];
                let mut sum_g = T::zero();
                let mut sum_gx = T::zero();
                for i in 0..plane {
                    sum_g += gs[i];
                    sum_gx += gs[i] * xh[i];
                }
                gscale[ch] += sum_gx;
                gshift[ch] += sum_g;
                // d/dx of gamma·xhat: inv/N · (N·dxhat − Σdxhat − xhat·Σ(dxhat·xhat))
                let k = gamma[ch] * inv_std[s] / n;
                for i in 0..plane {
                    gx[s * plane + i] = k * (n * gs[i] - sum_g - xh[i] * sum_gx);
                }
            }
            vec![Some(gx), Some(gscale), Some(gshift)]
        },
    ))
}
