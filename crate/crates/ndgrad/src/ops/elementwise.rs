use crate::error::{shape_err, NdError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    /// Negative-side slope in (0, 1).
    LeakyRelu(f64),
    Sigmoid,
}

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(shape_err(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape("add", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| *x + *y).collect();
    Ok(Tensor::from_op(
        "add",
        a.shape().to_vec(),
        data,
        vec![a.clone(), b.clone()],
        |g| vec![Some(g.to_vec()), Some(g.to_vec())],
    ))
}

pub fn mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape("mul", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| *x * *y).collect();
    let (av, bv) = (a.data_arc(), b.data_arc());
    Ok(Tensor::from_op(
        "mul",
        a.shape().to_vec(),
        data,
        vec![a.clone(), b.clone()],
        move |g| {
            let ga = g.iter().zip(bv.iter()).map(|(g, y)| *g * *y).collect();
            let gb = g.iter().zip(av.iter()).map(|(g, x)| *g * *x).collect();
            vec![Some(ga), Some(gb)]
        },
    ))
}

/// `c · a` for a constant `c`.
pub fn scale<T: Scalar>(a: &Tensor<T>, c: T) -> Tensor<T> {
    let data = a.data().iter().map(|x| *x * c).collect();
    Tensor::from_op("scale", a.shape().to_vec(), data, vec![a.clone()], move |g| {
        vec![Some(g.iter().map(|v| *v * c).collect())]
    })
}

pub fn sum<T: Scalar>(a: &Tensor<T>) -> Tensor<T> {
    let total = a.data().iter().copied().sum();
    let n = a.numel();
    Tensor::from_op("sum", Vec::new(), vec![total], vec![a.clone()], move |g| {
        vec![Some(vec![g[0]; n])]
    })
}

pub fn mean<T: Scalar>(a: &Tensor<T>) -> Result<Tensor<T>> {
    if a.numel() == 0 {
        return Err(NdError::InvalidArgument("mean of empty tensor".into()));
    }
    let inv = T::one() / T::from_usize(a.numel()).unwrap();
    Ok(scale(&sum(a), inv))
}

pub fn activate<T: Scalar>(x: &Tensor<T>, kind: Activation) -> Result<Tensor<T>> {
    match kind {
        Activation::Relu => Ok(leaky(x, T::zero(), "relu")),
        Activation::LeakyRelu(alpha) => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(NdError::InvalidArgument(format!(
                    "leaky_relu slope must lie in (0,1), got {alpha}"
                )));
            }
            Ok(leaky(x, T::lit(alpha), "leaky_relu"))
        }
        Activation::Sigmoid => Ok(sigmoid(x)),
    }
}

// Subgradient at exactly zero is taken as 1.
fn leaky<T: Scalar>(x: &Tensor<T>, alpha: T, op: &'static str) -> Tensor<T> {
    let data = x
        .data()
        .iter()
        .map(|&v| if v >= T::zero() { v } else { alpha * v })
        .collect();
    let xv = x.data_arc();
    Tensor::from_op(op, x.shape().to_vec(), data, vec![x.clone()], move |g| {
        let gx = g
            .iter()
            .zip(xv.iter())
            .map(|(g, &v)| if v >= T::zero() { *g } else { alpha * *g })
            .collect();
        vec![Some(gx)]
    })
}

fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let out: Vec<T> = x
        .data()
        .iter()
        .map(|&v| {
            // Branch keeps exp() from overflowing for large |v|.
            if v >= T::zero() {
                T::one() / (T::one() + (-v).exp())
            } else {
                let e = v.exp();
                e / (T::one() + e)
            }
        })
        .collect();
    let y = std::sync::Arc::new(out.clone());
    Tensor::from_op("sigmoid", x.shape().to_vec(), out, vec![x.clone()], move |g| {
        let gx = g
            .iter()
            .zip(y.iter())
            .map(|(g, &s)| *g * s * (T::one() - s))
            .collect();
        vec![Some(gx)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[f64]) -> Tensor<f64> {
        Tensor::new(&[v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn relu_values() {
        let y = activate(&t(&[-3.0, 3.0, 0.0]), Activation::Relu).unwrap();
        assert_eq!(y.data(), &[0.0, 3.0, 0.0]);
    }

    #[test]
    fn leaky_relu_value() {
        let y = activate(&t(&[-1.0]), Activation::LeakyRelu(0.01)).unwrap();
        assert!((y.item() + 0.01).abs() < 1e-15);
        assert!(activate(&t(&[1.0]), Activation::LeakyRelu(1.5)).is_err());
    }

    #[test]
    fn sigmoid_values() {
        let y = activate(&t(&[0.0, 800.0, -800.0]), Activation::Sigmoid).unwrap();
        assert_eq!(y.data()[0], 0.5);
        assert_eq!(y.data()[1], 1.0);
        assert_eq!(y.data()[2], 0.0);
    }

    #[test]
    fn relu_subgradient_at_zero_is_one() {
        let x = Tensor::<f64>::leaf(&[1], vec![0.0]).unwrap();
        let y = sum(&activate(&x, Activation::Relu).unwrap());
        y.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0]);
    }

    #[test]
    fn sum_of_squares_gradient_is_two_x() {
        let xs = vec![1.5, -2.0, 0.25];
        let x = Tensor::<f64>::leaf(&[3], xs.clone()).unwrap();
        let loss = sum(&mul(&x, &x).unwrap());
        loss.backward().unwrap();
        let g = x.grad().unwrap();
        for (g, v) in g.iter().zip(&xs) {
            assert_eq!(*g, 2.0 * v);
        }
    }

    #[test]
    fn repeated_backward_accumulates() {
        let x = Tensor::<f64>::leaf(&[2], vec![1.0, 2.0]).unwrap();
        let loss = sum(&x);
        loss.backward().unwrap();
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0, 2.0]);
        x.zero_grad();
        assert!(x.grad().is_none());
    }
}
