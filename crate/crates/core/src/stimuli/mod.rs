//! Stimulus generation: bit-vector objects, synthetic images, holdout pools
//! and generalization trials.

pub mod attributes;
pub mod bits;
pub mod dataset;
pub mod export;
pub mod image;
pub mod palette;
pub mod polygon;
pub mod raster;
pub mod texture;
pub mod trials;

use std::ops::Range;

pub use attributes::{Attribute, Item};
pub use bits::{BitObject, BitUniverse};
pub use dataset::{
    gen_bit_dataset, gen_image_dataset, gen_multilabel_image_dataset, is_feasible, DatasetConfig,
    ImageConfig, TextureSource,
};
pub use image::ImageUniverse;
pub use palette::{gen_color_palette, Rgb};
pub use polygon::{sample_polygon, PolygonSpec};
pub use raster::{rasterize, ImageObject};
pub use texture::{gen_texture, TextureBank, TextureField};
pub use trials::{build_trials, GeneralizationTrial, TestOrder};

use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

/// Maps attribute ids to network input.
pub trait Universe: Send + Sync {
    /// Shape of one encoded object (without the batch axis).
    fn input_shape(&self) -> Vec<usize>;

    fn encode_into(&self, item: &Item, out: &mut [f64]) -> Result<()>;

    /// Number of ids (training plus holdout) for an attribute.
    fn attribute_count(&self, attr: Attribute) -> usize;

    /// Chooses a placement offset for an object of the given shape.
    fn place(&self, shape: usize, rng: &mut Rng) -> Result<(i32, i32)>;

    fn input_len(&self) -> usize {
        self.input_shape().iter().product()
    }

    /// Encodes a batch as `[B, ...input_shape]`.
    fn encode_batch(&self, items: &[&Item]) -> Result<Tensor> {
        let len = self.input_len();
        let mut data = vec![0.0; items.len() * len];
        for (item, chunk) in items.iter().zip(data.chunks_mut(len.max(1))) {
            self.encode_into(item, chunk)?;
        }
        let mut shape = vec![items.len()];
        shape.extend(self.input_shape());
        Tensor::new(shape, data)
    }
}

/// A labeled training set together with its attribute universe.
///
/// For every attribute, ids `0..train_counts[a]` are training values and
/// the remaining ids of the universe form the holdout pool.
#[derive(Clone, Debug, PartialEq)]
pub struct StimulusSet<U> {
    pub universe: U,
    pub items: Vec<Item>,
    pub n_categories: usize,
    pub n_examples: usize,
    pub label_attribute: Attribute,
    pub train_counts: [usize; 3],
}

impl<U: Universe> StimulusSet<U> {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn training_values(&self, attr: Attribute) -> Range<usize> {
        0..self.train_counts[attr.index()]
    }

    pub fn holdout(&self, attr: Attribute) -> Range<usize> {
        self.train_counts[attr.index()]..self.universe.attribute_count(attr)
    }

    pub fn label(&self, item: &Item) -> usize {
        item.get(self.label_attribute)
    }

    /// Class indices of every item along one attribute.
    pub fn labels(&self, attr: Attribute) -> Vec<usize> {
        self.items.iter().map(|it| it.get(attr)).collect()
    }

    /// Number of classes along an attribute.
    pub fn class_count(&self, attr: Attribute) -> usize {
        self.train_counts[attr.index()]
    }

    pub fn encode_items(&self, indices: &[usize]) -> Result<Tensor> {
        let refs: Vec<&Item> = indices
            .iter()
            .map(|&i| {
                self.items.get(i).ok_or_else(|| {
                    Error::Index(format!("item {i} outside set of {}", self.items.len()))
                })
            })
            .collect::<Result<_>>()?;
        self.universe.encode_batch(&refs)
    }
}

impl StimulusSet<BitUniverse> {
    pub fn bit_object(&self, index: usize) -> BitObject {
        let item = &self.items[index];
        self.universe.object(item, self.label(item))
    }
}

impl StimulusSet<ImageUniverse> {
    pub fn image_object(&self, index: usize) -> Result<ImageObject> {
        let item = &self.items[index];
        self.universe.render(item, self.label(item))
    }
}
