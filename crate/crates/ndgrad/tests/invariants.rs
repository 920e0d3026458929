mod common;

use common::*;
use ndgrad::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn instance_norm_slices_are_standardized(
        seed in 0u64..1000,
        c in 1usize..4,
        h in 2usize..6,
        w in 2usize..6,
    ) {
        let eps = 1e-5;
        let mut r = rng(seed);
        let x = Tensor64::new(&[2, c, h, w], uniform(&mut r, 2 * c * h * w, -3.0, 5.0)).unwrap();
        let y = instance_norm(&x, &Tensor64::full(&[c], 1.0), &Tensor64::zeros(&[c]), eps).unwrap();
        for slice in y.data().chunks(h * w) {
            let n = slice.len() as f64;
            let mean = slice.iter().sum::<f64>() / n;
            let var = slice.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            // Constant slices normalize to zero; all others to unit variance.
            prop_assert!(var < 1e-12 || (var - 1.0).abs() < 10.0 * eps);
        }
    }
}

#[test]
fn down_then_up_sampling_restores_spatial_shape() {
    for (h, w) in [(40, 32), (48, 64), (56, 128), (8, 4)] {
        let x = Tensor64::zeros(&[1, 1, h, w]);
        let down = ConvSpec::new(4, 8, 1, 2, 2, Padding::new(1, 1, 3, 3));
        let down2 = ConvSpec::new(4, 8, 2, 2, 2, Padding::new(1, 1, 3, 3));
        let up = ConvSpec::new(4, 4, 2, 2, 2, Padding::uniform(1));
        let up2 = ConvSpec::new(4, 4, 2, 1, 2, Padding::uniform(1));
        let y = conv2d(&x, &down, &Tensor64::zeros(&down.conv_weight_shape()), &Tensor64::zeros(&[2])).unwrap();
        let y = conv2d(&y, &down2, &Tensor64::zeros(&down2.conv_weight_shape()), &Tensor64::zeros(&[2])).unwrap();
        assert_eq!(y.shape(), &[1, 2, h / 4, w / 4]);
        let y = conv_transpose2d(&y, &up, &Tensor64::zeros(&up.transpose_weight_shape()), &Tensor64::zeros(&[2])).unwrap();
        let y = conv_transpose2d(&y, &up2, &Tensor64::zeros(&up2.transpose_weight_shape()), &Tensor64::zeros(&[1])).unwrap();
        assert_eq!(y.shape(), &[1, 1, h, w]);
    }
}

#[test]
fn repeated_optimization_is_bit_identical() {
    let run = || {
        let mut r = rng(42);
        let spec = ConvSpec::new(3, 3, 1, 2, 1, Padding::uniform(1));
        let mut params = ParamSet::<f64>::new();
        params.push("w", &spec.conv_weight_shape(), uniform(&mut r, 18, -0.5, 0.5)).unwrap();
        params.push("b", &[2], vec![0.0; 2]).unwrap();
        let x = Tensor64::new(&[1, 1, 5, 5], uniform(&mut r, 25, -1.0, 1.0)).unwrap();
        let target = Tensor64::zeros(&[1, 2, 5, 5]);
        let mut opt = OptimState::new(AdamConfig::gan(1e-2), &params);
        for _ in 0..25 {
            let y = conv2d(&x, &spec, params.tensor(0), params.tensor(1)).unwrap();
            l1(&y, &target).unwrap().backward().unwrap();
            opt.step(&mut params).unwrap();
        }
        params.tensor(0).data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn reachable_tracked_tensors_all_receive_gradients() {
    let x = Tensor64::leaf(&[1, 1, 4, 4], (0..16).map(|i| i as f64 / 7.0 - 1.0).collect()).unwrap();
    let spec = ConvSpec::new(3, 3, 1, 1, 1, Padding::uniform(1));
    let w = Tensor64::leaf(&spec.conv_weight_shape(), vec![0.1; 9]).unwrap();
    let b = Tensor64::leaf(&[1], vec![0.0]).unwrap();
    let h = conv2d(&x, &spec, &w, &b).unwrap();
    let a = activate(&h, Activation::Sigmoid).unwrap();
    let loss = mean(&a).unwrap();
    loss.backward().unwrap();
    for t in [&x, &w, &b, &h, &a, &loss] {
        let g = t.grad().expect("grad populated");
        assert_eq!(g.len(), t.numel());
    }
}
