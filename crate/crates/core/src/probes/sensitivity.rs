//! Parametric sensitivity curves: similarity of a modified stimulus to the
//! original as one attribute is pushed further away.

use serde::{Deserialize, Serialize};

use super::hausdorff::modified_hausdorff;
use super::FeatureExtractor;
use crate::error::{Error, Result};
use crate::experiments::stats::{mean, spearman, stddev};
use crate::numerics::{cosine_similarity, Rng, Tensor};
use crate::stimuli::bits::{BitObject, POOL_BITS};
use crate::stimuli::palette::{rgb_cosine_distance, Rgb, WHITE_MARGIN};
use crate::stimuli::polygon::sample_polygon;
use crate::stimuli::{Attribute, ImageUniverse, Item, Universe};

/// Boundary samples per polygon for shape distances.
pub const BOUNDARY_POINTS: usize = 64;
pub const DEFAULT_CANDIDATES: usize = 50;
const COLOR_POOL_FACTOR: usize = 20;
const IMAGES_PER_BATCH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub mean: f64,
    pub stddev: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    /// Mean fall in similarity from the first point over all later points.
    pub fn mean_drop(&self) -> f64 {
        let Some(first) = self.points.first() else {
            return 0.0;
        };
        let rest: Vec<f64> = self.points[1..]
            .iter()
            .map(|p| first.mean - p.mean)
            .collect();
        if rest.is_empty() {
            0.0
        } else {
            mean(&rest)
        }
    }
}

/// CSV with columns `curve,x,mean,stddev,n`.
pub fn curve_csv(curves: &[Curve]) -> String {
    let mut out = String::from("curve,x,mean,stddev,n\n");
    for c in curves {
        for p in &c.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.label, p.x, p.mean, p.stddev, p.n
            ));
        }
    }
    out
}

fn similarities_to_first<F: FeatureExtractor + ?Sized>(
    extractor: &F,
    inputs: &Tensor,
) -> Result<Vec<f64>> {
    let feats = extractor.features(inputs)?;
    feats[1..]
        .iter()
        .map(|f| cosine_similarity(&feats[0], f).map(|s| if s.is_nan() { 0.0 } else { s }))
        .collect()
}

/// Similarity between `object` and copies with `f` random bits of one pool
/// flipped, for `f = 0..=max_flips`, averaged over `repeats` flip sets.
pub fn bitflip_sensitivity<F: FeatureExtractor + ?Sized>(
    extractor: &F,
    object: &BitObject,
    attribute: Attribute,
    max_flips: usize,
    repeats: usize,
    rng: &mut Rng,
) -> Result<Curve> {
    if max_flips > POOL_BITS {
        return Err(Error::arg(format!(
            "at most {POOL_BITS} bits can be flipped, asked for {max_flips}"
        )));
    }
    if repeats == 0 {
        return Err(Error::arg("repeats must be >= 1"));
    }
    let mut points = Vec::with_capacity(max_flips + 1);
    let base = object.encode();
    let offset = attribute.index() * POOL_BITS;
    for flips in 0..=max_flips {
        let mut rows = vec![base.clone()];
        for _ in 0..repeats {
            let mut row = base.clone();
            for &b in &rng.permutation(POOL_BITS)[..flips] {
                row[offset + b] = 1.0 - row[offset + b];
            }
            rows.push(row);
        }
        let sims = similarities_to_first(extractor, &Tensor::from_rows(&rows)?)?;
        points.push(CurvePoint {
            x: flips as f64,
            mean: mean(&sims),
            stddev: stddev(&sims),
            n: sims.len(),
        });
    }
    Ok(Curve {
        label: attribute.name().to_string(),
        points,
    })
}

/// Similarity against shape distance. Index 0 is the exemplar itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorphCurve {
    pub mhd: Vec<f64>,
    pub similarity: Vec<f64>,
    /// Rank correlation between similarity and distance over all entries.
    pub spearman: f64,
}

impl MorphCurve {
    pub fn curve(&self) -> Curve {
        Curve {
            label: "shape".into(),
            points: self
                .mhd
                .iter()
                .zip(&self.similarity)
                .map(|(&x, &s)| CurvePoint {
                    x,
                    mean: s,
                    stddev: 0.0,
                    n: 1,
                })
                .collect(),
        }
    }
}

fn centered_boundary(universe: &ImageUniverse, shape: usize) -> Result<Vec<(f64, f64)>> {
    let poly = universe.polygon(shape)?;
    let (cx, cy) = poly.centroid();
    Ok(poly
        .boundary_points(BOUNDARY_POINTS)
        .into_iter()
        .map(|(x, y)| (x - cx, y - cy))
        .collect())
}

fn batched_similarities<F: FeatureExtractor + ?Sized>(
    extractor: &F,
    universe: &ImageUniverse,
    items: &[Item],
) -> Result<Vec<f64>> {
    let reference = universe.encode_batch(&[&items[0]])?;
    let anchor = extractor.features(&reference)?.remove(0);
    let mut out = Vec::with_capacity(items.len());
    for chunk in items.chunks(IMAGES_PER_BATCH) {
        let refs: Vec<&Item> = chunk.iter().collect();
        for f in extractor.features(&universe.encode_batch(&refs)?)? {
            let s = cosine_similarity(&anchor, &f)?;
            out.push(if s.is_nan() { 0.0 } else { s });
        }
    }
    Ok(out)
}

/// Samples `candidate_count` new polygons, orders them by modified
/// Hausdorff distance to the exemplar's outline, renders each with the
/// exemplar's color and texture and records the network similarity.
pub fn shape_morph_sensitivity<F: FeatureExtractor + ?Sized>(
    extractor: &F,
    universe: &ImageUniverse,
    exemplar: &Item,
    candidate_count: usize,
    rng: &mut Rng,
) -> Result<MorphCurve> {
    let mut u = universe.clone();
    let reference = centered_boundary(&u, exemplar.shape())?;
    let first_new = u.polygons.len();
    let mut scored = Vec::with_capacity(candidate_count);
    for c in 0..candidate_count {
        let poly = sample_polygon(rng, u.resolution)?;
        u.polygons.push(poly);
        let d = modified_hausdorff(&reference, &centered_boundary(&u, first_new + c)?)?;
        scored.push((d, first_new + c));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut mhd = vec![0.0];
    let mut items = vec![Item::new(
        exemplar.shape(),
        exemplar.color(),
        exemplar.texture(),
    )];
    for (d, id) in scored {
        mhd.push(d);
        items.push(Item::new(id, exemplar.color(), exemplar.texture()));
    }
    let similarity = batched_similarities(extractor, &u, &items)?;
    let rho = spearman(&similarity, &mhd).unwrap_or(f64::NAN);
    Ok(MorphCurve {
        mhd,
        similarity,
        spearman: rho,
    })
}

/// Replaces the exemplar's color with `steps` random colors spread evenly
/// over increasing RGB cosine distance; shape and texture are kept.
pub fn color_step_sensitivity<F: FeatureExtractor + ?Sized>(
    extractor: &F,
    universe: &ImageUniverse,
    exemplar: &Item,
    steps: usize,
    rng: &mut Rng,
) -> Result<Curve> {
    let base: Rgb = *universe
        .palette
        .get(exemplar.color())
        .ok_or_else(|| Error::Index(format!("color id {} outside palette", exemplar.color())))?;
    let mut pool: Vec<(f64, Rgb)> = Vec::with_capacity(steps * COLOR_POOL_FACTOR);
    while pool.len() < steps * COLOR_POOL_FACTOR {
        let c = [rng.uniform(), rng.uniform(), rng.uniform()];
        if c.iter().all(|&v| v > 1.0 - WHITE_MARGIN) {
            continue;
        }
        pool.push((rgb_cosine_distance(&base, &c), c));
    }
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut u = universe.clone();
    let mut xs = vec![0.0];
    let mut items = vec![Item::new(
        exemplar.shape(),
        exemplar.color(),
        exemplar.texture(),
    )];
    for s in 0..steps {
        let idx = if steps == 1 {
            pool.len() - 1
        } else {
            s * (pool.len() - 1) / (steps - 1)
        };
        let (d, c) = pool[idx];
        u.palette.push(c);
        xs.push(d);
        items.push(Item::new(
            exemplar.shape(),
            u.palette.len() - 1,
            exemplar.texture(),
        ));
    }
    let sims = batched_similarities(extractor, &u, &items)?;
    Ok(Curve {
        label: "color".into(),
        points: xs
            .into_iter()
            .zip(sims)
            .map(|(x, s)| CurvePoint {
                x,
                mean: s,
                stddev: 0.0,
                n: 1,
            })
            .collect(),
    })
}
