//! Raw slice kernels behind the differentiable tape operations.
//!
//! Layouts are row-major: images are `[batch, channels, height, width]`,
//! convolution kernels `[out_channels, in_channels, kh, kw]`.

use serde::{Deserialize, Serialize};

/// Spatial padding mode of a convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// No padding; output shrinks by `k - 1`.
    Valid,
    /// Zero padding so the output keeps the input extent. For even kernels
    /// the extra row/column goes after the image.
    Same,
}

impl Padding {
    /// `(before, after)` zero padding for a kernel extent.
    pub fn amounts(self, k: usize) -> (usize, usize) {
        match self {
            Padding::Valid => (0, 0),
            Padding::Same => {
                let total = k - 1;
                (total / 2, total - total / 2)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub out_channels: usize,
    pub kh: usize,
    pub kw: usize,
    pub pad_top: usize,
    pub pad_left: usize,
    pub padded_h: usize,
    pub padded_w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    /// Returns `None` when the kernel does not fit the padded input.
    pub fn new(
        batch: usize,
        in_channels: usize,
        height: usize,
        width: usize,
        out_channels: usize,
        kh: usize,
        kw: usize,
        padding: Padding,
    ) -> Option<Self> {
        if kh == 0 || kw == 0 {
            return None;
        }
        let (pt, pb) = padding.amounts(kh);
        let (pl, pr) = padding.amounts(kw);
        let padded_h = height + pt + pb;
        let padded_w = width + pl + pr;
        if kh > padded_h || kw > padded_w {
            return None;
        }
        Some(Self {
            batch,
            in_channels,
            height,
            width,
            out_channels,
            kh,
            kw,
            pad_top: pt,
            pad_left: pl,
            padded_h,
            padded_w,
            out_h: padded_h - kh + 1,
            out_w: padded_w - kw + 1,
        })
    }

    /// Padded-buffer offset of every kernel tap, in (channel, row, column) order.
    fn tap_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.in_channels * self.kh * self.kw);
        for c in 0..self.in_channels {
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    out.push((c * self.padded_h + ky) * self.padded_w + kx);
                }
            }
        }
        out
    }

    fn pad_image(&self, image: &[f64], buf: &mut [f64]) {
        let (h, w, ph, pw) = (self.height, self.width, self.padded_h, self.padded_w);
        if ph == h && pw == w {
            buf.copy_from_slice(image);
            return;
        }
        buf.fill(0.0);
        for c in 0..self.in_channels {
            for y in 0..h {
                let src = &image[(c * h + y) * w..][..w];
                let dst = &mut buf[(c * ph + y + self.pad_top) * pw + self.pad_left..][..w];
                dst.copy_from_slice(src);
            }
        }
    }
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

const LANES: usize = 8;
const WIDE: usize = 32;

/// Dot product with a fixed eight-lane accumulation order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Cross-correlation plus per-channel bias.
///
/// Summation order per output element: bias, then input channels, then
/// kernel rows, then kernel columns.
pub fn conv2d_forward(g: &ConvGeometry, input: &[f64], kernels: &[f64], bias: &[f64]) -> Vec<f64> {
    let in_plane = g.in_channels * g.height * g.width;
    let out_plane = g.out_h * g.out_w;
    let taps = g.in_channels * g.kh * g.kw;
    let mut out = vec![0.0; g.batch * g.out_channels * out_plane];
    let mut buf = vec![0.0; g.in_channels * g.padded_h * g.padded_w];
    let offsets = g.tap_offsets();
    let wide = g.out_w / WIDE * WIDE;
    let full = g.out_w / LANES * LANES;
    for b in 0..g.batch {
        g.pad_image(&input[b * in_plane..][..in_plane], &mut buf);
        for o in 0..g.out_channels {
            let w = &kernels[o * taps..][..taps];
            let plane = &mut out[(b * g.out_channels + o) * out_plane..][..out_plane];
            for y in 0..g.out_h {
                let row = &mut plane[y * g.out_w..][..g.out_w];
                let base = y * g.padded_w;
                for x in (0..wide).step_by(WIDE) {
                    row[x..x + WIDE].copy_from_slice(&taps_block::<WIDE>(
                        bias[o],
                        w,
                        &offsets,
                        &buf[base + x..],
                    ));
                }
                for x in (wide..full).step_by(LANES) {
                    row[x..x + LANES].copy_from_slice(&taps_block::<LANES>(
                        bias[o],
                        w,
                        &offsets,
                        &buf[base + x..],
                    ));
                }
                for x in full..g.out_w {
                    let mut acc = bias[o];
                    for (&wv, &off) in w.iter().zip(&offsets) {
                        acc += wv * buf[base + off + x];
                    }
                    row[x] = acc;
                }
            }
        }
    }
    out
}

/// `N` adjacent outputs: `start + sum_t w[t] * src[offsets[t] .. + N]`.
#[inline(always)]
fn taps_block<const N: usize>(start: f64, w: &[f64], offsets: &[usize], src: &[f64]) -> [f64; N] {
    let mut acc = [start; N];
    for (&wv, &off) in w.iter().zip(offsets) {
        let s: &[f64; N] = src[off..off + N].try_into().expect("block in bounds");
        for l in 0..N {
            acc[l] += wv * s[l];
        }
    }
    acc
}

pub struct ConvGrads {
    pub input: Option<Vec<f64>>,
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn conv2d_backward(
    g: &ConvGeometry,
    input: &[f64],
    kernels: &[f64],
    grad_out: &[f64],
    need_input_grad: bool,
) -> ConvGrads {
    let in_plane = g.in_channels * g.height * g.width;
    let out_plane = g.out_h * g.out_w;
    let padded_len = g.in_channels * g.padded_h * g.padded_w;
    let mut gk = vec![0.0; kernels.len()];
    let mut gb = vec![0.0; g.out_channels];
    let mut gin = need_input_grad.then(|| vec![0.0; input.len()]);
    let mut buf = vec![0.0; padded_len];
    let mut gbuf = vec![0.0; if need_input_grad { padded_len } else { 0 }];
    let taps = g.in_channels * g.kh * g.kw;
    let offsets = g.tap_offsets();
    let full = g.out_w / LANES * LANES;
    let mut lanes = vec![[0.0f64; LANES]; taps];
    let mut tails = vec![0.0f64; taps];
    for b in 0..g.batch {
        g.pad_image(&input[b * in_plane..][..in_plane], &mut buf);
        if need_input_grad {
            gbuf.fill(0.0);
        }
        for o in 0..g.out_channels {
            let go = &grad_out[(b * g.out_channels + o) * out_plane..][..out_plane];
            gb[o] += go.iter().sum::<f64>();
            lanes.iter_mut().for_each(|a| *a = [0.0; LANES]);
            tails.fill(0.0);
            for y in 0..g.out_h {
                let gr = &go[y * g.out_w..][..g.out_w];
                let base = y * g.padded_w;
                for t in 0..taps {
                    let src = &buf[base + offsets[t]..][..g.out_w];
                    let mut acc = lanes[t];
                    for (pg, ps) in gr[..full]
                        .chunks_exact(LANES)
                        .zip(src[..full].chunks_exact(LANES))
                    {
                        for l in 0..LANES {
                            acc[l] += pg[l] * ps[l];
                        }
                    }
                    lanes[t] = acc;
                    for x in full..g.out_w {
                        tails[t] += gr[x] * src[x];
                    }
                }
                if need_input_grad {
                    let w = &kernels[o * taps..][..taps];
                    for (&wv, &off) in w.iter().zip(&offsets) {
                        axpy(wv, gr, &mut gbuf[base + off..][..g.out_w]);
                    }
                }
            }
            for t in 0..taps {
                let acc = lanes[t];
                let s = ((acc[0] + acc[4]) + (acc[1] + acc[5]))
                    + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
                gk[o * taps + t] += s + tails[t];
            }
        }
        if let Some(gin) = gin.as_mut() {
            let dst = &mut gin[b * in_plane..][..in_plane];
            for c in 0..g.in_channels {
                for y in 0..g.height {
                    let src = &gbuf[(c * g.padded_h + y + g.pad_top) * g.padded_w + g.pad_left..]
                        [..g.width];
                    dst[(c * g.height + y) * g.width..][..g.width].copy_from_slice(src);
                }
            }
        }
    }
    ConvGrads {
        input: gin,
        kernels: gk,
        bias: gb,
    }
}

/// Max pooling over `[planes, h, w]`; returns output values and, for each
/// output, the flat input index of the first (row-major) maximum.
pub fn maxpool_forward(
    input: &[f64],
    planes: usize,
    h: usize,
    w: usize,
    window: usize,
    stride: usize,
) -> (Vec<f64>, Vec<usize>, usize, usize) {
    let oh = (h - window) / stride + 1;
    let ow = (w - window) / stride + 1;
    let mut out = Vec::with_capacity(planes * oh * ow);
    let mut arg = Vec::with_capacity(planes * oh * ow);
    for p in 0..planes {
        let base = p * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = base + oy * stride * w + ox * stride;
                for dy in 0..window {
                    let row = base + (oy * stride + dy) * w + ox * stride;
                    for dx in 0..window {
                        let v = input[row + dx];
                        if v > best {
                            best = v;
                            best_idx = row + dx;
                        }
                    }
                }
                out.push(input[best_idx]);
                arg.push(best_idx);
            }
        }
    }
    (out, arg, oh, ow)
}

/// `[m, k] x [k, n]`.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut c[i * n..][..n];
        for p in 0..k {
            axpy(a[i * k + p], &b[p * n..][..n], row);
        }
    }
    c
}

/// Gradients of `c = a b` given `dc`.
pub fn matmul_backward(
    a: &[f64],
    b: &[f64],
    dc: &[f64],
    m: usize,
    k: usize,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut da = vec![0.0; m * k];
    let mut db = vec![0.0; k * n];
    for i in 0..m {
        let dci = &dc[i * n..][..n];
        for p in 0..k {
            da[i * k + p] = dot(dci, &b[p * n..][..n]);
            axpy(a[i * k + p], dci, &mut db[p * n..][..n]);
        }
    }
    (da, db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_padding_amounts() {
        assert_eq!(Padding::Same.amounts(5), (2, 2));
        assert_eq!(Padding::Same.amounts(4), (1, 2));
        assert_eq!(Padding::Valid.amounts(5), (0, 0));
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..19).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..19).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9);
    }

    #[test]
    fn oversized_kernel_rejected() {
        assert!(ConvGeometry::new(1, 1, 3, 3, 1, 4, 4, Padding::Valid).is_none());
        assert!(ConvGeometry::new(1, 1, 3, 3, 1, 4, 4, Padding::Same).is_some());
    }
}
