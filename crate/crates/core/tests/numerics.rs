mod common;

use common::{conv_oracle, max_gradient_error, random_projection, random_tensor};
use proptest::prelude::*;
use shapebias::numerics::{Padding, Rng, Tape, Tensor};
use shapebias::Error;

const H: f64 = 1e-5;

fn t(shape: &[usize], data: &[f64]) -> Tensor {
    Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
}

#[test]
fn matmul_fixtures() {
    let mut tape = Tape::new();
    let eye = tape.leaf(t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]), false);
    let m = tape.leaf(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]), false);
    let p = tape.matmul(eye, m).unwrap();
    assert_eq!(tape.value(p).data(), &[1.0, 2.0, 3.0, 4.0]);

    let a = tape.leaf(t(&[1, 2], &[1.0, 2.0]), false);
    let b = tape.leaf(t(&[2, 1], &[3.0, 4.0]), false);
    let c = tape.matmul(a, b).unwrap();
    assert_eq!(tape.value(c).data(), &[11.0]);

    let err = tape.matmul(a, a).unwrap_err();
    assert!(matches!(err, Error::Dimension(ref s) if s.contains("[1, 2]")));
}

#[test]
fn matmul_gradient_of_sum() {
    let mut rng = Rng::seed_from(1);
    let a = random_tensor(&[3, 4], &mut rng, 0.0);
    let b = random_tensor(&[4, 2], &mut rng, 0.0);
    let err = max_gradient_error(&[a, b], H, |tape, v| {
        let c = tape.matmul(v[0], v[1]).unwrap();
        tape.sum(c)
    });
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn conv_delta_kernel_is_identity() {
    let mut rng = Rng::seed_from(2);
    let input = random_tensor(&[1, 5, 6], &mut rng, 0.0);
    let mut k = vec![0.0; 9];
    k[4] = 1.0;
    let mut tape = Tape::new();
    let x = tape.leaf(input.clone(), false);
    let kv = tape.leaf(t(&[1, 1, 3, 3], &k), false);
    let bv = tape.leaf(t(&[1], &[0.0]), false);
    let y = tape.conv2d(x, kv, bv, Padding::Same).unwrap();
    assert_eq!(tape.value(y).shape(), &[1, 5, 6]);
    assert_eq!(tape.value(y).data(), input.data());
}

#[test]
fn conv_ones_fixture() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::filled(&[1, 3, 3], 1.0), false);
    let k = tape.leaf(Tensor::filled(&[1, 1, 2, 2], 1.0), false);
    let b = tape.leaf(t(&[1], &[0.0]), false);
    let y = tape.conv2d(x, k, b, Padding::Valid).unwrap();
    assert_eq!(tape.value(y).shape(), &[1, 2, 2]);
    assert_eq!(tape.value(y).data(), &[4.0; 4]);
}

#[test]
fn conv_oversized_kernel_is_dimension_error() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(&[1, 2, 2]), false);
    let k = tape.leaf(Tensor::zeros(&[1, 1, 3, 3]), false);
    let b = tape.leaf(Tensor::zeros(&[1]), false);
    assert!(matches!(
        tape.conv2d(x, k, b, Padding::Valid),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn conv_gradients_match_finite_differences() {
    let mut rng = Rng::seed_from(3);
    let x = random_tensor(&[1, 5, 5], &mut rng, 0.0);
    let k = random_tensor(&[2, 1, 3, 3], &mut rng, 0.0);
    let b = random_tensor(&[2], &mut rng, 0.0);
    for padding in [Padding::Valid, Padding::Same] {
        let err = max_gradient_error(&[x.clone(), k.clone(), b.clone()], H, |tape, v| {
            let y = tape.conv2d(v[0], v[1], v[2], padding).unwrap();
            random_projection(tape, y, 11)
        });
        assert!(err < 1e-5, "{padding:?}: relative error {err}");
    }
}

#[test]
fn maxpool_fixtures() {
    let mut tape = Tape::new();
    let c = tape.leaf(Tensor::filled(&[2, 4, 4], 0.3), false);
    let p = tape.maxpool2d(c, 2, 2).unwrap();
    assert_eq!(tape.value(p).shape(), &[2, 2, 2]);
    assert!(tape.value(p).data().iter().all(|&v| v == 0.3));

    let x = tape.leaf(t(&[1, 2, 2], &[1.0, 2.0, 3.0, 4.0]), true);
    let y = tape.maxpool2d(x, 2, 2).unwrap();
    assert_eq!(tape.value(y).data(), &[4.0]);
    let s = tape.sum(y);
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[0.0, 0.0, 0.0, 1.0]);

    assert!(matches!(tape.maxpool2d(x, 3, 1), Err(Error::Dimension(_))));
}

#[test]
fn maxpool_tie_goes_to_first_maximum() {
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[1, 2, 2], &[5.0, 5.0, 5.0, 5.0]), true);
    let y = tape.maxpool2d(x, 2, 2).unwrap();
    let s = tape.sum(y);
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn maxpool_gradient_matches_finite_differences() {
    let mut rng = Rng::seed_from(4);
    let x = random_tensor(&[2, 6, 6], &mut rng, 0.0);
    let err = max_gradient_error(&[x], H, |tape, v| {
        let y = tape.maxpool2d(v[0], 2, 2).unwrap();
        random_projection(tape, y, 5)
    });
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn relu_fixtures_and_gradient() {
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[3], &[-1.0, 0.0, 2.0]), true);
    let y = tape.relu(x);
    assert_eq!(tape.value(y).data(), &[0.0, 0.0, 2.0]);
    let s = tape.sum(y);
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[0.0, 0.0, 1.0]);

    let neg = tape.leaf(t(&[4], &[-1.0, -2.0, -0.5, -3.0]), false);
    let z = tape.relu(neg);
    assert!(tape.value(z).data().iter().all(|&v| v == 0.0));

    let mut rng = Rng::seed_from(6);
    let x = random_tensor(&[3, 4], &mut rng, 1e-2);
    let err = max_gradient_error(&[x], H, |tape, v| {
        let y = tape.relu(v[0]);
        random_projection(tape, y, 9)
    });
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn softmax_nll_fixtures() {
    let mut tape = Tape::new();
    let u = tape.leaf(Tensor::filled(&[2, 5], 0.7), false);
    let l = tape.softmax_nll(u, &[0, 3]).unwrap();
    assert!((tape.value(l).item() - 5f64.ln()).abs() < 1e-12);

    let x = tape.leaf(t(&[1, 2], &[10.0, -10.0]), false);
    let l = tape.softmax_nll(x, &[0]).unwrap();
    let expected = (1.0 + (-20f64).exp()).ln();
    assert!((tape.value(l).item() - expected).abs() < 1e-20);
    assert!((tape.value(l).item() - 2.06e-9).abs() < 1e-11);

    assert!(matches!(tape.softmax_nll(x, &[2]), Err(Error::Index(_))));
}

#[test]
fn softmax_nll_gradient_is_probs_minus_onehot() {
    let mut rng = Rng::seed_from(7);
    let logits = random_tensor(&[3, 4], &mut rng, 0.0);
    let labels = [1usize, 3, 0];
    let mut tape = Tape::new();
    let x = tape.leaf(logits.clone(), true);
    let l = tape.softmax_nll(x, &labels).unwrap();
    tape.backward(l).unwrap();
    let probs = shapebias::numerics::softmax_rows(logits.data(), 4);
    for (i, g) in tape.grad(x).unwrap().iter().enumerate() {
        let onehot = if labels[i / 4] == i % 4 { 1.0 } else { 0.0 };
        assert!((g - (probs[i] - onehot) / 3.0).abs() < 1e-15);
    }
    let err = max_gradient_error(&[logits], H, |tape, v| {
        tape.softmax_nll(v[0], &labels).unwrap()
    });
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn l2_penalty_fixtures() {
    let mut tape = Tape::new();
    let w = tape.leaf(t(&[2], &[3.0, 4.0]), true);
    let zero = tape.l2_penalty(&[w], 0.0).unwrap();
    assert_eq!(tape.value(zero).item(), 0.0);
    let p = tape.l2_penalty(&[w], 1.0).unwrap();
    assert_eq!(tape.value(p).item(), 25.0);
    assert!(matches!(tape.l2_penalty(&[w], -1.0), Err(Error::Config(_))));

    let mut tape = Tape::new();
    let w = tape.leaf(t(&[2], &[3.0, 4.0]), true);
    let p = tape.l2_penalty(&[w], 0.5).unwrap();
    tape.backward(p).unwrap();
    assert_eq!(tape.grad(w).unwrap(), &[3.0, 4.0]);

    let mut rng = Rng::seed_from(8);
    let a = random_tensor(&[3, 3], &mut rng, 0.0);
    let b = random_tensor(&[4], &mut rng, 0.0);
    let err = max_gradient_error(&[a, b], H, |tape, v| tape.l2_penalty(v, 0.3).unwrap());
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn dropout_modes() {
    let mut rng = Rng::seed_from(9);
    let mut tape = Tape::new();
    let x = tape.leaf(t(&[4], &[1.0, 2.0, 3.0, 4.0]), false);
    for training in [true, false] {
        let y = tape.dropout(x, 0.0, &mut rng, training).unwrap();
        assert_eq!(tape.value(y).data(), &[1.0, 2.0, 3.0, 4.0]);
    }
    let y = tape.dropout(x, 0.5, &mut rng, false).unwrap();
    assert_eq!(tape.value(y).data(), &[1.0, 2.0, 3.0, 4.0]);
    assert!(matches!(
        tape.dropout(x, 1.0, &mut rng, true),
        Err(Error::Config(_))
    ));
}

#[test]
fn dropout_preserves_expectation() {
    let n = 100_000;
    let mut rng = Rng::seed_from(10);
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::filled(&[n], 1.5), false);
    let y = tape.dropout(x, 0.5, &mut rng, true).unwrap();
    let mean = tape.value(y).data().iter().sum::<f64>() / n as f64;
    assert!((mean - 1.5).abs() / 1.5 < 0.02, "mean {mean}");
    let zeros = tape.value(y).data().iter().filter(|&&v| v == 0.0).count();
    assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
}

#[test]
fn dropout_gradient_uses_mask() {
    let mut rng = Rng::seed_from(12);
    let x0 = random_tensor(&[50], &mut rng, 0.0);
    let mut tape = Tape::new();
    let x = tape.leaf(x0, true);
    let y = tape.dropout(x, 0.3, &mut rng, true).unwrap();
    let out = tape.value(y).data().to_vec();
    let s = tape.sum(y);
    tape.backward(s).unwrap();
    for (g, o) in tape.grad(x).unwrap().iter().zip(out) {
        if o == 0.0 {
            assert_eq!(*g, 0.0);
        } else {
            assert!((g - 1.0 / 0.7).abs() < 1e-15);
        }
    }
}

#[test]
fn composite_network_gradient() {
    let mut rng = Rng::seed_from(13);
    let x = random_tensor(&[2, 2, 6, 6], &mut rng, 0.0);
    let k1 = random_tensor(&[3, 2, 3, 3], &mut rng, 0.0);
    let b1 = random_tensor(&[3], &mut rng, 0.0);
    let w = random_tensor(&[27, 4], &mut rng, 0.0);
    let bw = random_tensor(&[4], &mut rng, 0.0);
    let err = max_gradient_error(&[x, k1, b1, w, bw], H, |tape, v| {
        let c = tape.conv2d(v[0], v[1], v[2], Padding::Same).unwrap();
        let r = tape.relu(c);
        let p = tape.maxpool2d(r, 2, 2).unwrap();
        let f = tape.reshape(p, vec![2, 27]).unwrap();
        let h = tape.matmul(f, v[3]).unwrap();
        let h = tape.add_bias(h, v[4]).unwrap();
        let nll = tape.softmax_nll(h, &[1, 2]).unwrap();
        let pen = tape.l2_penalty(&[v[1], v[3]], 0.01).unwrap();
        tape.add(nll, pen).unwrap()
    });
    assert!(err < 1e-4, "relative error {err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_matches_direct_summation(
        b in 1usize..3, c in 1usize..4, h in 1usize..7, w in 1usize..7,
        o in 1usize..4, kh in 1usize..7, kw in 1usize..7,
        same in any::<bool>(), seed in any::<u64>(),
    ) {
        let padding = if same { Padding::Same } else { Padding::Valid };
        prop_assume!(same || (kh <= h && kw <= w));
        let mut rng = Rng::seed_from(seed);
        let x = random_tensor(&[b, c, h, w], &mut rng, 0.0);
        let k = random_tensor(&[o, c, kh, kw], &mut rng, 0.0);
        let bias = random_tensor(&[o], &mut rng, 0.0);
        let mut tape = Tape::new();
        let (xv, kv, bv) = (tape.leaf(x.clone(), false), tape.leaf(k.clone(), false), tape.leaf(bias.clone(), false));
        let y = tape.conv2d(xv, kv, bv, padding).unwrap();
        let oracle = conv_oracle(&x, &k, &bias, padding);
        prop_assert_eq!(tape.value(y).shape(), oracle.shape());
        for (a, e) in tape.value(y).data().iter().zip(oracle.data()) {
            prop_assert!((a - e).abs() <= 1e-12);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant(
        rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2..8), 1..5),
        shift in -100.0f64..100.0,
    ) {
        let classes = rows[0].len();
        prop_assume!(rows.iter().all(|r| r.len() == classes));
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        for row in shapebias::numerics::softmax_rows(&flat, classes).chunks(classes) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let labels: Vec<usize> = (0..rows.len()).map(|i| i % classes).collect();
        let shifted: Vec<f64> = flat.iter().map(|x| x + shift).collect();
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::new(vec![rows.len(), classes], flat).unwrap(), false);
        let b = tape.leaf(Tensor::new(vec![rows.len(), classes], shifted).unwrap(), false);
        let la = tape.softmax_nll(a, &labels).unwrap();
        let lb = tape.softmax_nll(b, &labels).unwrap();
        prop_assert!((tape.value(la).item() - tape.value(lb).item()).abs() < 1e-9);
    }
}
