use crate::error::{Error, Result};
use crate::stimuli::polygon::Point;

fn directed_mean(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / a.len() as f64
}

/// Modified Hausdorff distance (Dubuisson and Jain): the larger of the two
/// directed mean nearest-neighbour distances.
pub fn modified_hausdorff(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg(
            "modified Hausdorff distance of an empty point set",
        ));
    }
    Ok(directed_mean(a, b).max(directed_mean(b, a)))
}
