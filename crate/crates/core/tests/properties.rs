//! Randomized invariants.

use oucr::data::make_split;
use oucr::eval::{psnr, ssim};
use oucr::image::{fft2c, ifft2c, ComplexImage, MagnitudeImage};
use oucr::kspace::{data_consistency, forward_encode, mask_generate_with};
use oucr::tensor::{Graph, Tensor};
use proptest::prelude::*;

fn image(h: usize, w: usize, vals: &[f64]) -> ComplexImage<f64> {
    let mut img = ComplexImage::zeros(h, w);
    for (d, v) in img.data_mut().iter_mut().zip(vals.iter().cycle()) {
        *d = *v;
    }
    img
}

fn dims_and_values() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..=12, 1usize..=12).prop_flat_map(|(h, w)| {
        (Just(h), Just(w), prop::collection::vec(-10.0f64..10.0, 2 * h * w))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_is_unitary((h, w, v) in dims_and_values()) {
        let x = image(h, w, &v);
        let k = fft2c(&x).unwrap();
        let n = x.norm();
        prop_assert!((k.norm() - n).abs() <= 1e-12 * n.max(1.0));
        let back = ifft2c(&k).unwrap();
        prop_assert!(back.max_abs_diff(&x) <= 1e-12 * n.max(1.0));
    }

    #[test]
    fn data_consistency_is_idempotent_and_exact(
        (z, t) in (prop::collection::vec(-1.0f64..1.0, 2 * 16 * 32), prop::collection::vec(-1.0f64..1.0, 2 * 16 * 32)),
        seed in 0u64..1000,
        af in prop::sample::select(vec![2.0, 4.0, 8.0]),
    ) {
        let cf = if af >= 8.0 { 0.04 } else { 0.08 };
        let mask = mask_generate_with(16, 32, af, cf, seed).unwrap();
        let x = forward_encode(&image(16, 32, &t), &mask).unwrap();
        let once = data_consistency(&image(16, 32, &z), &x, &mask).unwrap();
        let twice = data_consistency(&once, &x, &mask).unwrap();
        prop_assert!(twice.max_abs_diff(&once) <= 1e-12);
        let k = fft2c(&once).unwrap();
        for i in 0..16 {
            for j in 0..32 {
                if mask.columns()[j] {
                    for c in 0..2 {
                        let idx = c * 512 + i * 32 + j;
                        prop_assert!((k.data()[idx] - x.values.data()[idx]).abs() <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn split_is_a_partition(n in 3usize..400, seed in any::<u64>()) {
        let s = make_split(n, [0.71, 0.10, 0.19], seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(make_split(n, [0.71, 0.10, 0.19], seed).unwrap(), s);
    }

    #[test]
    fn maxpool_inverts_upsample(c in 1usize..4, h in 1usize..8, w in 1usize..8, seed in any::<u64>()) {
        let mut rng = seed;
        let t = Tensor::from_fn(&[c, h, w], |_| {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        let mut g = Graph::<f64>::new();
        let x = g.constant(t.clone());
        let u = g.upsample_nearest2x2(x).unwrap();
        let p = g.maxpool2x2(u).unwrap();
        prop_assert_eq!(g.value(p), &t);
    }

    #[test]
    fn metric_bounds(v in prop::collection::vec(0.0f64..1.0, 2 * 64), shift in 0.01f64..0.5) {
        let a = MagnitudeImage::new(8, 16, v[..128].to_vec()).unwrap();
        let b = MagnitudeImage::new(8, 16, v.iter().map(|x| x + shift).take(128).collect()).unwrap();
        prop_assume!(a.max() > 0.0);
        let s = ssim(&b, &a).unwrap();
        prop_assert!(s <= 1.0 && s >= -1.0);
        prop_assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        prop_assert!(psnr(&b, &a).unwrap().is_finite());
    }
}
