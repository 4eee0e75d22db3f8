#![allow(dead_code)]

use shapebias::numerics::{Padding, Rng, Tape, Tensor, Var};

/// Central finite-difference gradient check.
///
/// `build` maps the leaf variables to a scalar loss. Returns the largest
/// relative error `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`
/// over every element of every input.
pub fn max_gradient_error<F>(inputs: &[Tensor], h: f64, build: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone(), true)).collect();
    let loss = build(&mut tape, &vars);
    tape.backward(loss).unwrap();
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .map(|&v| {
            tape.grad(v)
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; tape.value(v).len()])
        })
        .collect();

    let eval = |ts: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ts.iter().map(|t| tape.leaf(t.clone(), false)).collect();
        let loss = build(&mut tape, &vars);
        tape.value(loss).item()
    };

    let mut worst = 0.0f64;
    for (i, input) in inputs.iter().enumerate() {
        for j in 0..input.len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= h;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let a = analytic[i][j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Contracts an arbitrary tensor with fixed random weights into a scalar.
pub fn random_projection(tape: &mut Tape, v: Var, seed: u64) -> Var {
    let n = tape.value(v).len();
    let mut rng = Rng::seed_from(seed);
    let w: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let flat = tape.reshape(v, vec![1, n]).unwrap();
    let wv = tape.leaf(Tensor::new(vec![n, 1], w).unwrap(), false);
    let out = tape.matmul(flat, wv).unwrap();
    tape.sum(out)
}

/// Uniform tensor in `[-1, 1]` with every entry at least `gap` away from 0.
pub fn random_tensor(shape: &[usize], rng: &mut Rng, gap: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let mag = rng.uniform_range(gap, 1.0);
            if rng.bernoulli(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Direct-summation convolution oracle: bias, then channels, kernel rows,
/// kernel columns, the same order the production kernel uses.
pub fn conv_oracle(input: &Tensor, kernels: &Tensor, bias: &Tensor, padding: Padding) -> Tensor {
    let s = input.shape();
    let (b, c, h, w) = (s[0], s[1], s[2], s[3]);
    let k = kernels.shape();
    let (o, kh, kw) = (k[0], k[2], k[3]);
    let (pt, pb) = padding.amounts(kh);
    let (pl, pr) = padding.amounts(kw);
    let oh = h + pt + pb - kh + 1;
    let ow = w + pl + pr - kw + 1;
    let at = |bi: usize, ci: usize, y: isize, x: isize| -> f64 {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            0.0
        } else {
            input.get(&[bi, ci, y as usize, x as usize]).unwrap()
        }
    };
    let mut out = Vec::with_capacity(b * o * oh * ow);
    for bi in 0..b {
        for oi in 0..o {
            for y in 0..oh {
                for x in 0..ow {
                    let mut acc = bias.data()[oi];
                    for ci in 0..c {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = y as isize + ky as isize - pt as isize;
                                let ix = x as isize + kx as isize - pl as isize;
                                acc += kernels.get(&[oi, ci, ky, kx]).unwrap() * at(bi, ci, iy, ix);
                            }
                        }
                    }
                    out.push(acc);
                }
            }
        }
    }
    Tensor::new(vec![b, o, oh, ow], out).unwrap()
}
