//! Versioned checkpoint files.
//!
//! Layout: a magic line, one JSON header line (spec, seed, best epoch,
//! parameter names/shapes/offsets), then every parameter value as
//! little-endian `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::Model;
use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::numerics::{Param, Tensor};

pub const MAGIC: &str = "SHAPEBIAS-CHECKPOINT v1";

/// A trained model together with how it was selected.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: Model,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_train_loss: f64,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    regularized: bool,
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    seed: u64,
    best_epoch: usize,
    best_train_loss: f64,
    params: Vec<Entry>,
}

fn bad(message: impl Into<String>) -> Error {
    Error::format("checkpoint", message)
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut offset = 0;
        let params = self
            .model
            .params
            .iter()
            .map(|p| {
                let e = Entry {
                    name: p.name.clone(),
                    shape: p.value.shape().to_vec(),
                    offset,
                    regularized: p.regularized,
                };
                offset += p.value.len();
                e
            })
            .collect();
        let header = Header {
            spec: self.model.spec.clone(),
            seed: self.seed,
            best_epoch: self.best_epoch,
            best_train_loss: self.best_train_loss,
            params,
        };
        let json = serde_json::to_string(&header).map_err(|e| bad(e.to_string()))?;
        let mut out = Vec::with_capacity(json.len() + 64 + offset * 8);
        out.extend_from_slice(MAGIC.as_bytes());
        out.push(b'\n');
        out.extend_from_slice(json.as_bytes());
        out.push(b'\n');
        for p in &self.model.params {
            for v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let magic_end = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing magic line"))?;
        if &bytes[..magic_end] != MAGIC.as_bytes() {
            return Err(bad("unrecognized magic string"));
        }
        let rest = &bytes[magic_end + 1..];
        let header_end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing header line"))?;
        let header: Header =
            serde_json::from_slice(&rest[..header_end]).map_err(|e| bad(e.to_string()))?;
        let payload = &rest[header_end + 1..];
        if !payload.len().is_multiple_of(8) {
            return Err(bad("payload is not a whole number of f64 values"));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut params = Vec::with_capacity(header.params.len());
        for e in header.params {
            let len: usize = e.shape.iter().product();
            let slice = values
                .get(e.offset..e.offset + len)
                .ok_or_else(|| bad(format!("parameter '{}' runs past the payload", e.name)))?;
            params.push(Param::new(
                e.name,
                Tensor::new(e.shape, slice.to_vec())?,
                e.regularized,
            ));
        }
        header.spec.validate()?;
        Ok(Self {
            model: Model {
                spec: header.spec,
                params,
            },
            seed: header.seed,
            best_epoch: header.best_epoch,
            best_train_loss: header.best_train_loss,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::stimuli::export::write_bytes(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
