//! Random star-shaped polygons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

pub type Point = (f64, f64);

pub const MIN_ORDER: usize = 3;
pub const MAX_ORDER: usize = 10;
/// Outer vertex radius as a fraction of the image extent.
pub const RADIUS_FRACTION: f64 = 0.38;
/// Vertices lie at radius `R * (INNER + (1 - INNER) * u)`.
pub const INNER_RADIUS: f64 = 0.6;
/// Vertex sets whose polygon covers less than this fraction of `R^2` are
/// re-drawn (same order).
pub const MIN_AREA_FRACTION: f64 = 0.1;

/// Polygon in image coordinates (x right, y down), vertices sorted by angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonSpec {
    pub vertices: Vec<Point>,
    pub order: usize,
}

impl PolygonSpec {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::arg("a polygon needs at least 3 vertices"));
        }
        Ok(Self {
            order: vertices.len(),
            vertices,
        })
    }

    /// Signed shoelace area (positive for counter-clockwise in y-up terms).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (x0, y0) = self.vertices[i];
                let (x1, y1) = self.vertices[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        (sx / n, sy / n)
    }

    /// `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            ),
            |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
        )
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|&(x, y)| (x + dx, y + dy))
                .collect(),
            order: self.order,
        }
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| dist(self.vertices[i], self.vertices[(i + 1) % n]))
            .sum()
    }

    /// `count` points spaced uniformly by arc length along the boundary,
    /// starting at the first vertex.
    pub fn boundary_points(&self, count: usize) -> Vec<Point> {
        let n = self.vertices.len();
        let total = self.perimeter();
        let mut out = Vec::with_capacity(count);
        let mut edge = 0;
        let mut edge_start = 0.0;
        for i in 0..count {
            let s = total * i as f64 / count as f64;
            while edge < n - 1
                && s > edge_start + dist(self.vertices[edge], self.vertices[(edge + 1) % n])
            {
                edge_start += dist(self.vertices[edge], self.vertices[(edge + 1) % n]);
                edge += 1;
            }
            let a = self.vertices[edge];
            let b = self.vertices[(edge + 1) % n];
            let len = dist(a, b);
            let t = if len > 0.0 {
                ((s - edge_start) / len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
        out
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Samples a polygon centered in an `extent x extent` frame.
///
/// Order is uniform on 3..=10. Each vertex sits at a uniform angle and at
/// radius `R * (0.6 + 0.4 u)` with `R = 0.38 * extent`; vertices are sorted
/// by angle, which makes the polygon star-shaped about the center and hence
/// simple.
pub fn sample_polygon(rng: &mut Rng, extent: usize) -> Result<PolygonSpec> {
    if extent < 32 {
        return Err(Error::config(format!("image extent {extent} below 32")));
    }
    let order = MIN_ORDER + rng.below(MAX_ORDER - MIN_ORDER + 1);
    let radius = RADIUS_FRACTION * extent as f64;
    let center = extent as f64 / 2.0;
    loop {
        let mut polar: Vec<(f64, f64)> = (0..order)
            .map(|_| {
                let theta = rng.uniform() * std::f64::consts::TAU;
                let r = radius * (INNER_RADIUS + (1.0 - INNER_RADIUS) * rng.uniform());
                (theta, r)
            })
            .collect();
        polar.sort_by(|a, b| a.0.total_cmp(&b.0));
        let vertices = polar
            .iter()
            .map(|&(t, r)| (center + r * t.cos(), center + r * t.sin()))
            .collect();
        let poly = PolygonSpec { vertices, order };
        if poly.area() >= MIN_AREA_FRACTION * radius * radius {
            return Ok(poly);
        }
    }
}
