//! Binary PPM/PGM images and the dataset manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::bits::BitUniverse;
use super::{StimulusSet, Universe};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const MANIFEST_HEADER: &str = "item_id,label,shape_id,color_id,texture_id,jitter_x,jitter_y";

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// P6 bytes of channels 0..3 of a `[C, H, W]` tensor.
pub fn encode_ppm(pixels: &Tensor) -> Result<Vec<u8>> {
    let s = pixels.shape();
    if s.len() != 3 || s[0] < 3 {
        return Err(Error::dim(format!("PPM needs [>=3, H, W], got {s:?}")));
    }
    let (h, w) = (s[1], s[2]);
    let plane = h * w;
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    let d = pixels.data();
    for i in 0..plane {
        for c in 0..3 {
            out.push(to_byte(d[c * plane + i]));
        }
    }
    Ok(out)
}

/// P5 bytes of a `[H, W]` grayscale plane.
pub fn encode_pgm(values: &[f64], width: usize, height: usize) -> Result<Vec<u8>> {
    if values.len() != width * height {
        return Err(Error::dim("PGM plane size mismatch"));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| to_byte(v)));
    Ok(out)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn header_tokens(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::format("netpbm", "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // exactly one whitespace byte separates header and raster
    Ok((tokens, i + 1))
}

/// Parses binary (P5) PGM bytes into `(width, height, pixels)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let (t, start) = header_tokens(bytes, 4)?;
    if t[0] != "P5" {
        return Err(Error::format("pgm", format!("magic {} is not P5", t[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::format("pgm", e.to_string()))
    };
    let (w, h, max) = (parse(&t[1])?, parse(&t[2])?, parse(&t[3])?);
    if max == 0 || max > 255 {
        return Err(Error::format("pgm", "only 8-bit PGM is supported"));
    }
    let raster = bytes
        .get(start..start + w * h)
        .ok_or_else(|| Error::format("pgm", "truncated raster"))?;
    let pixels = raster
        .iter()
        .map(|&p| ((usize::from(p) * 255) / max) as u8)
        .collect();
    Ok((w, h, pixels))
}

pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// Manifest CSV: one row per item.
pub fn manifest_csv<U: Universe>(set: &StimulusSet<U>) -> String {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for (i, it) in set.items.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            set.label(it),
            it.shape(),
            it.color(),
            it.texture(),
            it.offset.0,
            it.offset.1
        ));
    }
    out
}

/// Bit patterns of every attribute id, one row each, bit 0 first.
pub fn bit_patterns_csv(universe: &BitUniverse, train_counts: [usize; 3]) -> String {
    let mut out = String::from("attribute,id,pool,bits\n");
    for (a, name) in ["shape", "color", "texture"].iter().enumerate() {
        for (id, p) in universe.patterns[a].iter().enumerate() {
            let bits: String = (0..super::bits::POOL_BITS)
                .map(|b| if (p >> b) & 1 == 1 { '1' } else { '0' })
                .collect();
            let pool = if id < train_counts[a] {
                "train"
            } else {
                "holdout"
            };
            out.push_str(&format!("{name},{id},{pool},{bits}\n"));
        }
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

/// Appends formatted rows to a writer, mapping failures to `Error::Io`.
pub fn write_all(path: &Path, w: &mut impl Write, bytes: &[u8]) -> Result<()> {
    w.write_all(bytes).map_err(|e| Error::io(path, e))
}
