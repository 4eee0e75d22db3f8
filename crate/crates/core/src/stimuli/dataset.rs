//! Dataset construction: balanced attribute assignment, feasibility, and
//! the bit and image generators.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::attributes::{Attribute, Item};
use super::bits::BitUniverse;
use super::image::{jitter_for, ImageUniverse};
use super::palette::gen_color_palette;
use super::polygon::sample_polygon;
use super::texture::TextureBank;
use super::{StimulusSet, Universe};
use crate::error::{Error, Result};
use crate::numerics::Rng;

pub const DEFAULT_BIT_HOLDOUT: usize = 100;
pub const DEFAULT_IMAGE_HOLDOUT: usize = 20;
pub const DEFAULT_RESOLUTION: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_categories: usize,
    pub n_examples: usize,
    /// Attribute the category labels follow.
    pub label_attribute: Attribute,
    /// Permit repeated (shape, color, texture) objects when `K > N^2`.
    pub allow_repeats: bool,
    /// Holdout pool size for every attribute.
    pub holdout: usize,
}

impl DatasetConfig {
    pub fn new(n_categories: usize, n_examples: usize) -> Self {
        Self {
            n_categories,
            n_examples,
            label_attribute: Attribute::Shape,
            allow_repeats: false,
            holdout: DEFAULT_BIT_HOLDOUT,
        }
    }

    pub fn with_label(mut self, attr: Attribute) -> Self {
        self.label_attribute = attr;
        self
    }

    pub fn with_repeats(mut self, allow: bool) -> Self {
        self.allow_repeats = allow;
        self
    }

    pub fn with_holdout(mut self, holdout: usize) -> Self {
        self.holdout = holdout;
        self
    }
}

/// Whether `(n, k)` admits a set without repeated objects.
pub fn is_feasible(n: usize, k: usize) -> bool {
    k <= n * n
}

pub fn check_feasible(cfg: &DatasetConfig) -> Result<()> {
    if cfg.n_categories < 2 {
        return Err(Error::config("at least 2 categories are required"));
    }
    if cfg.n_examples < 1 {
        return Err(Error::config("at least 1 example per category is required"));
    }
    if !cfg.allow_repeats && !is_feasible(cfg.n_categories, cfg.n_examples) {
        return Err(Error::Infeasible(format!(
            "N={} K={}: only {} unique examples per category exist (allow repeats to override)",
            cfg.n_categories,
            cfg.n_examples,
            cfg.n_categories * cfg.n_categories
        )));
    }
    Ok(())
}

fn duplicate_count(rows: &[[usize; 3]]) -> usize {
    let mut seen: HashMap<[usize; 3], usize> = HashMap::new();
    for r in rows {
        *seen.entry(*r).or_default() += 1;
    }
    seen.values().map(|&c| c - 1).sum()
}

/// Balanced assignment: the labeled attribute takes value `i` for the `K`
/// items of category `i`; each other attribute is a random permutation of
/// `K` replicas of every value. Without `allow_repeats`, random swaps within
/// an attribute column remove duplicate objects.
pub fn assign_balanced(cfg: &DatasetConfig, rng: &mut Rng) -> Result<Vec<[usize; 3]>> {
    check_feasible(cfg)?;
    let (n, k) = (cfg.n_categories, cfg.n_examples);
    let label = cfg.label_attribute.index();
    let others: Vec<usize> = (0..3).filter(|&a| a != label).collect();
    let mut rows = vec![[0usize; 3]; n * k];
    for (i, row) in rows.iter_mut().enumerate() {
        row[label] = i / k;
    }
    for &a in &others {
        let mut replicas: Vec<usize> = (0..n * k).map(|i| i / k).collect();
        rng.shuffle(&mut replicas);
        for (row, v) in rows.iter_mut().zip(replicas) {
            row[a] = v;
        }
    }
    if cfg.allow_repeats {
        return Ok(rows);
    }
    let mut dups = duplicate_count(&rows);
    let mut iterations = 0;
    while dups > 0 {
        iterations += 1;
        if iterations > 200_000 {
            return Err(Error::Infeasible(format!(
                "could not remove duplicate objects for N={n} K={k}"
            )));
        }
        let i = rng.below(rows.len());
        let j = rng.below(rows.len());
        let a = others[rng.below(2)];
        if i == j || rows[i][a] == rows[j][a] {
            continue;
        }
        let (vi, vj) = (rows[i][a], rows[j][a]);
        rows[i][a] = vj;
        rows[j][a] = vi;
        let after = duplicate_count(&rows);
        if after <= dups {
            dups = after;
        } else {
            rows[i][a] = vi;
            rows[j][a] = vj;
        }
    }
    Ok(rows)
}

fn place_items<U: Universe>(
    universe: &U,
    rows: Vec<[usize; 3]>,
    rng: &mut Rng,
) -> Result<Vec<Item>> {
    rows.into_iter()
        .map(|attrs| {
            let offset = universe.place(attrs[0], rng)?;
            Ok(Item { attrs, offset })
        })
        .collect()
}

/// Bit-vector dataset with `N x K` items and disjoint holdout pools.
pub fn gen_bit_dataset(cfg: &DatasetConfig, rng: &mut Rng) -> Result<StimulusSet<BitUniverse>> {
    check_feasible(cfg)?;
    let mut pattern_rng = rng.fork("patterns");
    let mut assign_rng = rng.fork("assignment");
    let n = cfg.n_categories;
    let universe = BitUniverse::generate([n; 3], cfg.holdout, &mut pattern_rng);
    let rows = assign_balanced(cfg, &mut assign_rng)?;
    let items = place_items(&universe, rows, &mut assign_rng)?;
    Ok(StimulusSet {
        universe,
        items,
        n_categories: n,
        n_examples: cfg.n_examples,
        label_attribute: cfg.label_attribute,
        train_counts: [n; 3],
    })
}

/// Where image textures come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextureSource {
    #[default]
    Procedural,
    /// Grayscale PGM files; the bank needs at least `N + holdout` entries.
    Files(Vec<PathBuf>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageConfig {
    pub resolution: usize,
    pub textures: TextureSource,
}

impl Default for ImageConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            textures: TextureSource::Procedural,
        }
    }
}

impl ImageConfig {
    pub fn at(resolution: usize) -> Self {
        Self {
            resolution,
            ..Self::default()
        }
    }
}

/// Builds the attribute tables: `counts[a]` training values followed by
/// `holdout` values for each attribute.
pub fn image_universe(
    counts: [usize; 3],
    holdout: usize,
    image: &ImageConfig,
    rng: &mut Rng,
) -> Result<ImageUniverse> {
    let res = image.resolution;
    let mut shape_rng = rng.fork("shapes");
    let mut color_rng = rng.fork("palette");
    let texture_seed = rng.fork("textures").next_u64();

    let polygons = (0..counts[0] + holdout)
        .map(|_| sample_polygon(&mut shape_rng, res))
        .collect::<Result<Vec<_>>>()?;

    let mut palette = gen_color_palette(counts[1] + holdout, &mut color_rng)?;
    color_rng.shuffle(&mut palette);

    let needed = counts[2] + holdout;
    let textures = match &image.textures {
        TextureSource::Procedural => TextureBank::procedural(needed, res, texture_seed),
        TextureSource::Files(paths) => {
            let mut bank = TextureBank::from_pgm_files(paths, res)?;
            if bank.len() < needed {
                return Err(Error::config(format!(
                    "texture bank has {} images, {needed} required",
                    bank.len()
                )));
            }
            let mut order = color_rng.permutation(bank.len());
            order.truncate(needed);
            bank.fields = order.into_iter().map(|i| bank.fields[i].clone()).collect();
            bank
        }
    };
    Ok(ImageUniverse {
        resolution: res,
        max_jitter: jitter_for(res),
        polygons,
        palette,
        textures,
    })
}

/// Image dataset following the same balance law as [`gen_bit_dataset`],
/// with fresh jitter per item.
pub fn gen_image_dataset(
    cfg: &DatasetConfig,
    image: &ImageConfig,
    rng: &mut Rng,
) -> Result<StimulusSet<ImageUniverse>> {
    check_feasible(cfg)?;
    let n = cfg.n_categories;
    let universe = image_universe([n; 3], cfg.holdout, image, &mut rng.fork("universe"))?;
    let mut assign_rng = rng.fork("assignment");
    let rows = assign_balanced(cfg, &mut assign_rng)?;
    let items = place_items(&universe, rows, &mut assign_rng)?;
    Ok(StimulusSet {
        universe,
        items,
        n_categories: n,
        n_examples: cfg.n_examples,
        label_attribute: cfg.label_attribute,
        train_counts: [n; 3],
    })
}

/// Shape-labeled image set whose colors and textures are drawn uniformly at
/// random from their own category counts (the three-label vocabulary setup).
pub fn gen_multilabel_image_dataset(
    counts: [usize; 3],
    examples_per_shape: usize,
    holdout: usize,
    image: &ImageConfig,
    rng: &mut Rng,
) -> Result<StimulusSet<ImageUniverse>> {
    if counts.iter().any(|&c| c < 2) || examples_per_shape == 0 {
        return Err(Error::config(
            "multi-label set needs >= 2 values per attribute and K >= 1",
        ));
    }
    let universe = image_universe(counts, holdout, image, &mut rng.fork("universe"))?;
    let mut assign_rng = rng.fork("assignment");
    let rows: Vec<[usize; 3]> = (0..counts[0] * examples_per_shape)
        .map(|i| {
            [
                i / examples_per_shape,
                assign_rng.below(counts[1]),
                assign_rng.below(counts[2]),
            ]
        })
        .collect();
    let items = place_items(&universe, rows, &mut assign_rng)?;
    Ok(StimulusSet {
        universe,
        items,
        n_categories: counts[0],
        n_examples: examples_per_shape,
        label_attribute: Attribute::Shape,
        train_counts: counts,
    })
}
