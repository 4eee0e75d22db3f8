//! First-layer convolution filters as images.

use std::path::Path;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::numerics::Tensor;
use crate::stimuli::export::{encode_pgm, encode_ppm, write_bytes};

/// One filter's R, G and B planes, min-max normalized jointly to `[0, 1]`.
/// A constant filter maps to 0.5 everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterImages {
    pub extent: usize,
    pub channels: [Vec<f64>; 3],
}

impl FilterImages {
    /// `[3, k, k]` tensor of the three planes.
    pub fn composite(&self) -> Tensor {
        let data = self.channels.concat();
        Tensor::new(vec![3, self.extent, self.extent], data).expect("three k x k planes")
    }

    /// Mean over positions of the mean absolute pairwise channel difference.
    pub fn channel_difference(&self) -> f64 {
        let [r, g, b] = &self.channels;
        let n = r.len() as f64;
        r.iter()
            .zip(g)
            .zip(b)
            .map(|((r, g), b)| ((r - g).abs() + (r - b).abs() + (g - b).abs()) / 3.0)
            .sum::<f64>()
            / n
    }
}

/// Normalized RGB planes of every first-layer filter; the fourth input
/// channel is left out.
pub fn export_filters(model: &Model) -> Result<Vec<FilterImages>> {
    let kernels = model
        .first_conv_kernels()
        .ok_or_else(|| Error::arg("model has no convolution layer"))?;
    let s = kernels.shape();
    if s.len() != 4 || s[1] < 3 || s[2] != s[3] {
        return Err(Error::dim(format!("unexpected kernel shape {s:?}")));
    }
    let (maps, channels, k) = (s[0], s[1], s[2]);
    let plane = k * k;
    Ok((0..maps)
        .map(|m| {
            let base = m * channels * plane;
            let rgb = &kernels.data()[base..base + 3 * plane];
            let lo = rgb.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = rgb.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let norm = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            FilterImages {
                extent: k,
                channels: [0, 1, 2].map(|c| {
                    rgb[c * plane..(c + 1) * plane]
                        .iter()
                        .map(|&v| norm(v))
                        .collect()
                }),
            }
        })
        .collect())
}

/// Mean channel difference over all first-layer filters.
pub fn cross_channel_difference(model: &Model) -> Result<f64> {
    let filters = export_filters(model)?;
    Ok(filters
        .iter()
        .map(FilterImages::channel_difference)
        .sum::<f64>()
        / filters.len() as f64)
}

fn upscale(plane: &[f64], k: usize, scale: usize) -> Vec<f64> {
    let e = k * scale;
    (0..e * e)
        .map(|i| plane[(i / e / scale) * k + (i % e) / scale])
        .collect()
}

/// Writes `filter{i}_{r,g,b}.pgm` and `filter{i}_rgb.ppm`, each pixel
/// enlarged to a `scale x scale` block.
pub fn write_filter_images(dir: &Path, filters: &[FilterImages], scale: usize) -> Result<()> {
    let scale = scale.max(1);
    for (i, f) in filters.iter().enumerate() {
        let e = f.extent * scale;
        let planes: Vec<Vec<f64>> = f
            .channels
            .iter()
            .map(|p| upscale(p, f.extent, scale))
            .collect();
        for (name, p) in ["r", "g", "b"].iter().zip(&planes) {
            write_bytes(
                &dir.join(format!("filter{i}_{name}.pgm")),
                &encode_pgm(p, e, e)?,
            )?;
        }
        let rgb = Tensor::new(vec![3, e, e], planes.concat())?;
        write_bytes(&dir.join(format!("filter{i}_rgb.ppm")), &encode_ppm(&rgb)?)?;
    }
    Ok(())
}
