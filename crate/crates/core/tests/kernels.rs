mod common;

use common::*;
use mvot_core::head::pairwise_depthwise_xcorr;
use mvot_core::{conv2d, erode3x3, hanning2d, roi_align, softmax_pairs, BBox, Kernel2D, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn conv2d_matches_loop_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..120 {
        let c = rng.gen_range(1..5);
        let oc = rng.gen_range(1..5);
        let k = [1, 3, 5][rng.gen_range(0..3)];
        let stride = rng.gen_range(1..=2);
        let pad = rng.gen_range(0..=k / 2);
        let h = rng.gen_range(k..14);
        let w = rng.gen_range(k..14);
        let x = random_tensor(&[c, h, w], &mut rng);
        let wt = random_tensor(&[oc, c, k, k], &mut rng);
        let bias: Vec<f32> = (0..oc).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let kernel = Kernel2D::new(wt.clone(), bias.clone(), stride, pad).unwrap();
        let got = conv2d(&x, &kernel).unwrap();
        let want = conv_oracle(&x, &wt, &bias, stride, pad);
        assert!(max_abs_diff(got.data(), &want) < 1e-5);
    }
}

#[test]
fn roi_align_matches_bilinear_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..120 {
        let (h, w) = (rng.gen_range(4..20), rng.gen_range(4..20));
        let feat = random_tensor(&[2, h, w], &mut rng);
        let region = BBox::new(
            rng.gen_range(-4.0..w as f64 + 4.0),
            rng.gen_range(-4.0..h as f64 + 4.0),
            rng.gen_range(0.5..12.0),
            rng.gen_range(0.5..12.0),
        );
        let out = rng.gen_range(1..9);
        let got = roi_align(&feat, &region, out).unwrap();
        assert!(max_abs_diff(got.data(), &roi_align_oracle(&feat, &region, out)) < 1e-6);
    }
}

#[test]
fn erosion_matches_min_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..120 {
        let shape = [rng.gen_range(1..4), rng.gen_range(1..12), rng.gen_range(1..12)];
        let m = random_tensor(&shape, &mut rng);
        let got = erode3x3(&m).unwrap();
        assert!(max_abs_diff(got.data(), &erode_oracle(&m)) == 0.0);
    }
}

#[test]
fn xcorr_matches_loop_oracle_for_every_batch_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for n in 1..=16 {
        let c = rng.gen_range(1..6);
        let e = random_tensor(&[n, c, 7, 7], &mut rng);
        let s = random_tensor(&[n, c, 31, 31], &mut rng);
        let got = pairwise_depthwise_xcorr(&e, &s).unwrap();
        assert_eq!(got.shape(), &[n, c, 25, 25]);
        assert!(max_abs_diff(got.data(), &xcorr_oracle(&e, &s)) < 1e-5);
    }
}

#[test]
fn roi_align_over_aligned_block_copies_it() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let feat = random_tensor(&[3, 12, 12], &mut rng);
    let crop = roi_align(&feat, &BBox::from_ltwh(2.0, 5.0, 6.0, 6.0), 6).unwrap();
    for c in 0..3 {
        for y in 0..6 {
            for x in 0..6 {
                assert_eq!(crop.at(c, y, x), feat.at(c, y + 5, x + 2));
            }
        }
    }
}

#[test]
fn hanning_spot_values() {
    let h3 = hanning2d(3).unwrap();
    assert_eq!(h3.at(0, 1, 1), 1.0);
    assert_eq!(h3.at(0, 0, 0), 0.0);
    assert!((hanning2d(5).unwrap().at(0, 1, 1) - 0.25).abs() < 1e-7);
    assert_eq!(hanning2d(1).unwrap().data(), &[1.0]);
    assert!(hanning2d(0).is_err());
}

#[test]
fn softmax_pair_spot_values() {
    let m = Tensor::new(&[4, 1, 1], vec![2.0, 1.0, 0.0, 100.0]).unwrap();
    let p = softmax_pairs(&m).unwrap();
    assert!((p.data()[0] as f64 - 1.0 / (1.0 + 1f64.exp())).abs() < 1e-6);
    assert!((p.data()[1] - 1.0).abs() < 1e-6);
    assert!(softmax_pairs(&Tensor::zeros(&[3, 2, 2]).unwrap()).is_err());
}

fn tensor_strategy(shape: [usize; 3]) -> impl Strategy<Value = Tensor> {
    ranged_tensor(shape, 10.0)
}

fn ranged_tensor(shape: [usize; 3], r: f32) -> impl Strategy<Value = Tensor> {
    proptest::collection::vec(-r..r, shape.iter().product::<usize>())
        .prop_map(move |d| Tensor::new(&shape, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conv_is_linear_without_bias(a in tensor_strategy([4, 8, 8]), b in tensor_strategy([4, 8, 8]), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = Kernel2D::new(random_tensor(&[3, 4, 3, 3], &mut rng), vec![0.0; 3], 1, 1).unwrap();
        let mut sum = a.clone();
        sum.add_assign(&b).unwrap();
        let lhs = conv2d(&sum, &k).unwrap();
        let (ca, cb) = (conv2d(&a, &k).unwrap(), conv2d(&b, &k).unwrap());
        for ((l, x), y) in lhs.data().iter().zip(ca.data()).zip(cb.data()) {
            prop_assert!((l - (x + y)).abs() < 1e-5 * (1.0 + l.abs()) * 10.0);
        }
    }

    #[test]
    fn erosion_is_below_input_and_monotone(x in tensor_strategy([2, 7, 9]), bump in proptest::collection::vec(0.0f32..3.0, 126)) {
        let y = Tensor::new(&[2, 7, 9], x.data().iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        let (ex, ey) = (erode3x3(&x).unwrap(), erode3x3(&y).unwrap());
        for ((e, v), f) in ex.data().iter().zip(x.data()).zip(ey.data()) {
            prop_assert!(e <= v);
            prop_assert!(e <= f);
        }
    }

    // Logit gaps stay below the f32 saturation point of the logistic.
    #[test]
    fn softmax_pairs_bounded_and_shift_invariant(x in ranged_tensor([4, 3, 3], 6.0), shift in -20.0f32..20.0) {
        let p = softmax_pairs(&x).unwrap();
        let q = softmax_pairs(&Tensor::new(&[4, 3, 3], x.data().iter().map(|v| v + shift).collect()).unwrap()).unwrap();
        for (a, b) in p.data().iter().zip(q.data()) {
            prop_assert!(*a > 0.0 && *a < 1.0);
            prop_assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn hanning_equals_its_transpose(n in 1usize..40) {
        let h = hanning2d(n).unwrap();
        for y in 0..n {
            for x in 0..n {
                prop_assert_eq!(h.at(0, y, x), h.at(0, x, y));
            }
        }
    }
}
