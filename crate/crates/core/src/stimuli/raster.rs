//! Scanline polygon fill into four-channel images.

use super::palette::Rgb;
use super::polygon::PolygonSpec;
use super::texture::TextureField;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Inside-object texture values are mapped into `[TEXTURE_FLOOR, 1]` so that
/// the texture channel's support is exactly the object mask.
pub const TEXTURE_FLOOR: f64 = 0.05;

/// A rendered object: `pixels` is `[4, H, W]` (R, G, B, texture).
#[derive(Clone, Debug, PartialEq)]
pub struct ImageObject {
    pub pixels: Tensor,
    pub shape_id: usize,
    pub color_id: usize,
    pub texture_id: usize,
    pub label: usize,
    pub offset: (i32, i32),
}

/// Even-odd scanline fill sampled at pixel centers. Returns a row-major
/// boolean mask.
pub fn scanline_mask(poly: &PolygonSpec, width: usize, height: usize) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    let n = poly.vertices.len();
    let mut xs = Vec::with_capacity(n);
    for y in 0..height {
        let sy = y as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (x0, y0) = poly.vertices[i];
            let (x1, y1) = poly.vertices[(i + 1) % n];
            // half-open rule so shared vertices are counted once
            if (y0 <= sy && sy < y1) || (y1 <= sy && sy < y0) {
                xs.push(x0 + (sy - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // pixel centers x + 0.5 in [left, right)
            let start = (pair[0] - 0.5).ceil().max(0.0) as usize;
            let end = ((pair[1] - 0.5).ceil().max(0.0) as usize).min(width);
            for x in start..end {
                mask[y * width + x] = true;
            }
        }
    }
    mask
}

/// Whether a polygon shifted by `offset` lies inside an `extent` frame.
pub fn fits(poly: &PolygonSpec, extent: usize, offset: (i32, i32)) -> bool {
    let (x0, y0, x1, y1) = poly.bounds();
    let (dx, dy) = (f64::from(offset.0), f64::from(offset.1));
    x0 + dx >= 0.0 && y0 + dy >= 0.0 && x1 + dx <= extent as f64 && y1 + dy <= extent as f64
}

/// Renders `spec` shifted by `jitter` onto a white `extent x extent` frame.
///
/// RGB takes `color` inside the mask and 1.0 outside; the texture channel
/// takes the texture field (sampled in object coordinates, wrapping) inside
/// the mask and 0 outside.
pub fn rasterize(
    spec: &PolygonSpec,
    color: Rgb,
    texture: &TextureField,
    jitter: (i32, i32),
    extent: usize,
) -> Result<Tensor> {
    if !fits(spec, extent, jitter) {
        return Err(Error::arg(format!(
            "polygon with offset {jitter:?} leaves the {extent}x{extent} frame"
        )));
    }
    let shifted = spec.translated(f64::from(jitter.0), f64::from(jitter.1));
    let mask = scanline_mask(&shifted, extent, extent);
    let plane = extent * extent;
    let mut data = vec![1.0; 4 * plane];
    data[3 * plane..].fill(0.0);
    let te = texture.extent as i64;
    for (i, &inside) in mask.iter().enumerate() {
        if !inside {
            continue;
        }
        for c in 0..3 {
            data[c * plane + i] = color[c];
        }
        let (x, y) = ((i % extent) as i64, (i / extent) as i64);
        let tx = (x - i64::from(jitter.0)).rem_euclid(te) as usize;
        let ty = (y - i64::from(jitter.1)).rem_euclid(te) as usize;
        data[3 * plane + i] = TEXTURE_FLOOR + (1.0 - TEXTURE_FLOOR) * texture.at(tx, ty);
    }
    Tensor::new(vec![4, extent, extent], data)
}
