use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the three object attributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Shape,
    Color,
    Texture,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Shape, Attribute::Color, Attribute::Texture];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Shape => "shape",
            Attribute::Color => "color",
            Attribute::Texture => "texture",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shape" => Ok(Attribute::Shape),
            "color" => Ok(Attribute::Color),
            "texture" => Ok(Attribute::Texture),
            other => Err(Error::config(format!("unknown attribute '{other}'"))),
        }
    }
}

/// A dataset or test object, described by attribute ids into a universe.
///
/// Ids below the training pool size of an attribute are training values and
/// double as class indices; ids at or above it belong to the holdout pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Item {
    pub attrs: [usize; 3],
    /// Pixel jitter applied when rendering; always zero for bit objects.
    pub offset: (i32, i32),
}

impl Item {
    pub fn new(shape: usize, color: usize, texture: usize) -> Self {
        Self {
            attrs: [shape, color, texture],
            offset: (0, 0),
        }
    }

    pub fn get(&self, attr: Attribute) -> usize {
        self.attrs[attr.index()]
    }

    pub fn shape(&self) -> usize {
        self.attrs[0]
    }

    pub fn color(&self) -> usize {
        self.attrs[1]
    }

    pub fn texture(&self) -> usize {
        self.attrs[2]
    }
}
