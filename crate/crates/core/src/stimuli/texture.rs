//! Grayscale texture fields for the fourth image channel.
//!
//! The default bank is procedural: each id selects a family (gratings,
//! rotated checkerboards, multi-octave value noise, dot lattices) and draws
//! that family's parameters from a stream keyed by `(seed, id)`. A bank can
//! also be loaded from user-supplied grayscale PGM images.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Square grayscale field with values in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureField {
    pub extent: usize,
    pub values: Vec<f64>,
}

impl TextureField {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.extent + x]
    }

    pub fn mean_abs_difference(&self, other: &TextureField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / self.values.len() as f64
    }
}

const FAMILIES: u64 = 4;

/// Procedural texture `id` at `extent x extent`.
pub fn gen_texture(texture_id: usize, extent: usize, seed: u64) -> TextureField {
    let mut rng = Rng::stream(seed, "texture", &[texture_id as u64]);
    let family = texture_id as u64 % FAMILIES;
    let scale = extent as f64 / 64.0;
    let values = match family {
        0 => {
            let theta = rng.uniform() * std::f64::consts::PI;
            let period = rng.uniform_range(3.0, 12.0) * scale;
            let phase = rng.uniform() * std::f64::consts::TAU;
            let (c, s) = (theta.cos(), theta.sin());
            field(extent, |x, y| {
                0.5 + 0.5 * ((x * c + y * s) * std::f64::consts::TAU / period + phase).sin()
            })
        }
        1 => {
            let theta = rng.uniform() * std::f64::consts::FRAC_PI_2;
            let cell = rng.uniform_range(3.0, 10.0) * scale;
            let (c, s) = (theta.cos(), theta.sin());
            field(extent, |x, y| {
                let u = ((x * c + y * s) / cell).floor() as i64;
                let v = ((-x * s + y * c) / cell).floor() as i64;
                if (u + v).rem_euclid(2) == 0 {
                    0.9
                } else {
                    0.1
                }
            })
        }
        2 => {
            let base = rng.uniform_range(4.0, 16.0) * scale;
            let octaves = 3;
            let grids: Vec<(usize, Vec<f64>)> = (0..octaves)
                .map(|o| {
                    let cells =
                        ((extent as f64 / (base / (1 << o) as f64)).ceil() as usize).max(1) + 2;
                    (cells, (0..cells * cells).map(|_| rng.uniform()).collect())
                })
                .collect();
            let raw = field(extent, |x, y| {
                let mut total = 0.0;
                let mut amp = 1.0;
                let mut norm = 0.0;
                for (o, (cells, grid)) in grids.iter().enumerate() {
                    let size = base / (1 << o) as f64;
                    total += amp * value_noise(grid, *cells, x / size, y / size);
                    norm += amp;
                    amp *= 0.5;
                }
                total / norm
            });
            stretch(raw)
        }
        _ => {
            let spacing = rng.uniform_range(5.0, 12.0) * scale;
            let radius = spacing * rng.uniform_range(0.2, 0.45);
            let shift = spacing * rng.uniform();
            field(extent, |x, y| {
                let row = ((y + shift) / spacing).floor();
                let ox = if row as i64 % 2 == 0 {
                    0.0
                } else {
                    spacing / 2.0
                };
                let cx = ((x + ox) / spacing).floor() * spacing + spacing / 2.0 - ox;
                let cy = row * spacing + spacing / 2.0 - shift;
                let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                if d <= radius {
                    0.95
                } else {
                    0.05
                }
            })
        }
    };
    TextureField { extent, values }
}

fn field(extent: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(extent * extent);
    for y in 0..extent {
        for x in 0..extent {
            out.push(f(x as f64 + 0.5, y as f64 + 0.5).clamp(0.0, 1.0));
        }
    }
    out
}

fn value_noise(grid: &[f64], cells: usize, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (fx, fy) = (x - x.floor(), y - y.floor());
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let at = |i: usize, j: usize| grid[(j.min(cells - 1)) * cells + i.min(cells - 1)];
    let top = at(x0, y0) * (1.0 - sx) + at(x0 + 1, y0) * sx;
    let bottom = at(x0, y0 + 1) * (1.0 - sx) + at(x0 + 1, y0 + 1) * sx;
    top * (1.0 - sy) + bottom * sy
}

fn stretch(mut v: Vec<f64>) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        v.iter_mut().for_each(|x| *x = (*x - lo) / (hi - lo));
    }
    v
}

/// An indexed collection of texture fields at one extent.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureBank {
    pub fields: Vec<TextureField>,
}

impl TextureBank {
    pub fn procedural(count: usize, extent: usize, seed: u64) -> Self {
        Self {
            fields: (0..count).map(|id| gen_texture(id, extent, seed)).collect(),
        }
    }

    /// Loads grayscale images (binary PGM) and resamples them to `extent`
    /// with nearest-neighbour lookup.
    pub fn from_pgm_files<P: AsRef<Path>>(paths: &[P], extent: usize) -> Result<Self> {
        let fields = paths
            .iter()
            .map(|p| {
                let (w, h, pixels) = super::export::read_pgm(p.as_ref())?;
                let values = (0..extent * extent)
                    .map(|i| {
                        let (x, y) = (i % extent, i / extent);
                        let sx = x * w / extent;
                        let sy = y * h / extent;
                        f64::from(pixels[sy * w + sx]) / 255.0
                    })
                    .collect();
                Ok(TextureField { extent, values })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { fields })
    }

    pub fn get(&self, id: usize) -> Result<&TextureField> {
        self.fields.get(id).ok_or_else(|| {
            Error::config(format!(
                "texture id {id} not in bank of {}",
                self.fields.len()
            ))
        })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}
