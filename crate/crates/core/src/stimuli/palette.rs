//! Evenly separated RGB palettes.

use crate::error::{Error, Result};
use crate::numerics::Rng;

pub type Rgb = [f64; 3];

/// Levels per channel of the candidate lattice.
pub const LATTICE_LEVELS: usize = 17;
/// Minimum Euclidean distance of a palette entry from white.
pub const WHITE_MARGIN: f64 = 0.15;

pub fn rgb_distance(a: &Rgb, b: &Rgb) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Candidate colors: the `17^3` RGB lattice minus everything within
/// [`WHITE_MARGIN`] of white.
pub fn color_lattice() -> Vec<Rgb> {
    let step = 1.0 / (LATTICE_LEVELS - 1) as f64;
    let mut out = Vec::new();
    for r in 0..LATTICE_LEVELS {
        for g in 0..LATTICE_LEVELS {
            for b in 0..LATTICE_LEVELS {
                let c = [r as f64 * step, g as f64 * step, b as f64 * step];
                if rgb_distance(&c, &[1.0; 3]) >= WHITE_MARGIN {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Greedy farthest-point palette.
///
/// The first color is a random chromatic cube corner (neither black nor
/// white, so its opposite corner is in the lattice); every following color
/// is the lattice point farthest from all colors chosen so far (lowest
/// lattice index on ties).
pub fn gen_color_palette(count: usize, rng: &mut Rng) -> Result<Vec<Rgb>> {
    let lattice = color_lattice();
    if count == 0 || count > lattice.len() {
        return Err(Error::config(format!(
            "palette size {count} outside 1..={}",
            lattice.len()
        )));
    }
    let corners: Vec<usize> = lattice
        .iter()
        .enumerate()
        .filter(|(_, c)| c.iter().all(|&v| v == 0.0 || v == 1.0) && c.contains(&1.0))
        .map(|(i, _)| i)
        .collect();
    let first = corners[rng.below(corners.len())];
    let mut chosen = vec![lattice[first]];
    let mut nearest: Vec<f64> = lattice
        .iter()
        .map(|c| rgb_distance(c, &lattice[first]))
        .collect();
    while chosen.len() < count {
        let (best, _) = nearest
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
            );
        let c = lattice[best];
        chosen.push(c);
        for (n, p) in nearest.iter_mut().zip(&lattice) {
            *n = n.min(rgb_distance(p, &c));
        }
    }
    Ok(chosen)
}

pub fn min_pairwise_distance(colors: &[Rgb]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..colors.len() {
        for j in i + 1..colors.len() {
            best = best.min(rgb_distance(&colors[i], &colors[j]));
        }
    }
    best
}

/// `1 - cos` between two RGB vectors.
pub fn rgb_cosine_distance(a: &Rgb, b: &Rgb) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    1.0 - ab / (na * nb)
}
