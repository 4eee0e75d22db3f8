//! Bit-vector objects: three pools of 20 binary units.

use std::collections::HashSet;

use super::attributes::{Attribute, Item};
use super::Universe;
use crate::error::{Error, Result};
use crate::numerics::Rng;

pub const POOL_BITS: usize = 20;
pub const INPUT_UNITS: usize = 3 * POOL_BITS;

/// A fully resolved bit-vector object.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitObject {
    pub shape_bits: u32,
    pub color_bits: u32,
    pub texture_bits: u32,
    pub label: usize,
}

impl BitObject {
    pub fn pool(&self, attr: Attribute) -> u32 {
        match attr {
            Attribute::Shape => self.shape_bits,
            Attribute::Color => self.color_bits,
            Attribute::Texture => self.texture_bits,
        }
    }

    /// 60 input units: shape pool, color pool, texture pool.
    pub fn encode(&self) -> Vec<f64> {
        let mut out = vec![0.0; INPUT_UNITS];
        for (p, bits) in [self.shape_bits, self.color_bits, self.texture_bits]
            .into_iter()
            .enumerate()
        {
            write_bits(bits, &mut out[p * POOL_BITS..][..POOL_BITS]);
        }
        out
    }
}

fn write_bits(bits: u32, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = f64::from((bits >> i) & 1);
    }
}

/// Pattern tables for the three attributes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitUniverse {
    pub patterns: [Vec<u32>; 3],
}

/// Draws `count` distinct 20-bit patterns that avoid every pattern in `taken`.
pub fn unique_patterns(count: usize, taken: &mut HashSet<u32>, rng: &mut Rng) -> Vec<u32> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = (rng.next_u64() & ((1u64 << POOL_BITS) - 1)) as u32;
        if taken.insert(p) {
            out.push(p);
        }
    }
    out
}

impl BitUniverse {
    /// Generates `train + holdout` patterns per attribute, all 3 x (train +
    /// holdout) mutually distinct.
    pub fn generate(train: [usize; 3], holdout: usize, rng: &mut Rng) -> Self {
        let mut taken = HashSet::new();
        let patterns = [0, 1, 2].map(|a| unique_patterns(train[a] + holdout, &mut taken, rng));
        Self { patterns }
    }

    pub fn object(&self, item: &Item, label: usize) -> BitObject {
        BitObject {
            shape_bits: self.patterns[0][item.shape()],
            color_bits: self.patterns[1][item.color()],
            texture_bits: self.patterns[2][item.texture()],
            label,
        }
    }
}

impl Universe for BitUniverse {
    fn input_shape(&self) -> Vec<usize> {
        vec![INPUT_UNITS]
    }

    fn encode_into(&self, item: &Item, out: &mut [f64]) -> Result<()> {
        if out.len() != INPUT_UNITS {
            return Err(Error::dim(format!(
                "bit object needs {INPUT_UNITS} slots, got {}",
                out.len()
            )));
        }
        for (p, attr) in Attribute::ALL.into_iter().enumerate() {
            let table = &self.patterns[p];
            let id = item.get(attr);
            let bits = *table.get(id).ok_or_else(|| {
                Error::Index(format!("{attr} id {id} outside 0..{}", table.len()))
            })?;
            write_bits(bits, &mut out[p * POOL_BITS..][..POOL_BITS]);
        }
        Ok(())
    }

    fn attribute_count(&self, attr: Attribute) -> usize {
        self.patterns[attr.index()].len()
    }

    fn place(&self, _shape: usize, _rng: &mut Rng) -> Result<(i32, i32)> {
        Ok((0, 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_layout() {
        let o = BitObject {
            shape_bits: 1,
            color_bits: 2,
            texture_bits: 1 << 19,
            label: 0,
        };
        let v = o.encode();
        assert_eq!(v.len(), 60);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[21], 1.0);
        assert_eq!(v[59], 1.0);
        assert_eq!(v.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn patterns_are_distinct_and_20_bit() {
        let mut rng = Rng::seed_from(1);
        let u = BitUniverse::generate([5, 5, 5], 30, &mut rng);
        let all: HashSet<u32> = u.patterns.iter().flatten().copied().collect();
        assert_eq!(all.len(), 105);
        assert!(all.iter().all(|&p| p < (1 << 20)));
    }
}
