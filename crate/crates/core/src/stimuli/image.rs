use super::attributes::Item;
use super::palette::Rgb;
use super::polygon::PolygonSpec;
use super::raster::{fits, rasterize, ImageObject};
use super::texture::TextureBank;
use super::Universe;
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::stimuli::Attribute;

/// Jitter bound at the reference 200 px resolution.
pub const REFERENCE_JITTER: f64 = 20.0;
pub const REFERENCE_RESOLUTION: f64 = 200.0;
const PLACEMENT_RETRIES: usize = 100;

/// Attribute tables for image objects at a fixed resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageUniverse {
    pub resolution: usize,
    pub max_jitter: i32,
    pub polygons: Vec<PolygonSpec>,
    pub palette: Vec<Rgb>,
    pub textures: TextureBank,
}

/// Jitter bound scaled from 20 px at 200 x 200.
pub fn jitter_for(resolution: usize) -> i32 {
    (REFERENCE_JITTER * resolution as f64 / REFERENCE_RESOLUTION).round() as i32
}

impl ImageUniverse {
    pub fn render(&self, item: &Item, label: usize) -> Result<ImageObject> {
        let poly = self.polygon(item.shape())?;
        let color = *self
            .palette
            .get(item.color())
            .ok_or_else(|| Error::Index(format!("color id {} outside palette", item.color())))?;
        let texture = self.textures.get(item.texture())?;
        let pixels = rasterize(poly, color, texture, item.offset, self.resolution)?;
        Ok(ImageObject {
            pixels,
            shape_id: item.shape(),
            color_id: item.color(),
            texture_id: item.texture(),
            label,
            offset: item.offset,
        })
    }

    pub fn polygon(&self, id: usize) -> Result<&PolygonSpec> {
        self.polygons.get(id).ok_or_else(|| {
            Error::Index(format!("shape id {id} outside 0..{}", self.polygons.len()))
        })
    }

    /// Uniform integer jitter in `[-J, J]^2` that keeps `poly` in frame,
    /// re-drawn up to a bounded number of times.
    pub fn place_polygon(&self, poly: &PolygonSpec, rng: &mut Rng) -> Result<(i32, i32)> {
        let j = i64::from(self.max_jitter);
        for _ in 0..PLACEMENT_RETRIES {
            let off = (
                rng.int_inclusive(-j, j) as i32,
                rng.int_inclusive(-j, j) as i32,
            );
            if fits(poly, self.resolution, off) {
                return Ok(off);
            }
        }
        if fits(poly, self.resolution, (0, 0)) {
            return Ok((0, 0));
        }
        Err(Error::arg("polygon does not fit the frame"))
    }
}

impl Universe for ImageUniverse {
    fn input_shape(&self) -> Vec<usize> {
        vec![4, self.resolution, self.resolution]
    }

    fn encode_into(&self, item: &Item, out: &mut [f64]) -> Result<()> {
        let obj = self.render(item, 0)?;
        if out.len() != obj.pixels.len() {
            return Err(Error::dim("image buffer size mismatch"));
        }
        out.copy_from_slice(obj.pixels.data());
        Ok(())
    }

    fn attribute_count(&self, attr: Attribute) -> usize {
        match attr {
            Attribute::Shape => self.polygons.len(),
            Attribute::Color => self.palette.len(),
            Attribute::Texture => self.textures.len(),
        }
    }

    fn place(&self, shape: usize, rng: &mut Rng) -> Result<(i32, i32)> {
        self.place_polygon(self.polygon(shape)?, rng)
    }
}
