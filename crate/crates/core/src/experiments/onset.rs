//! Bias-onset frontier and the two-phase (order 1 before order 2) check.

use serde::{Deserialize, Serialize};

use super::sweep::SweepGrid;
use crate::stimuli::TestOrder;

pub const DEFAULT_THRESHOLD: f64 = 0.7;
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Cells whose mean order-2 accuracy reaches `threshold` and that no other
/// such cell dominates with both N and K no larger.
pub fn detect_bias_onset(grid: &SweepGrid, threshold: f64) -> Vec<(usize, usize)> {
    let hits: Vec<(usize, usize)> = grid
        .cells
        .iter()
        .filter(|c| {
            c.order_mean(TestOrder::Second)
                .is_some_and(|m| m >= threshold)
        })
        .map(|c| (c.n, c.k))
        .collect();
    let mut frontier: Vec<(usize, usize)> = hits
        .iter()
        .copied()
        .filter(|&(n, k)| {
            !hits
                .iter()
                .any(|&(m, j)| m <= n && j <= k && (m, j) != (n, k))
        })
        .collect();
    frontier.sort_unstable();
    frontier
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseReport {
    pub margin: f64,
    pub checked: usize,
    /// Cells where the order-1 mean falls below the order-2 mean minus the margin.
    pub violations: Vec<(usize, usize)>,
}

impl TwoPhaseReport {
    pub fn conforming_fraction(&self) -> f64 {
        if self.checked == 0 {
            return 1.0;
        }
        (self.checked - self.violations.len()) as f64 / self.checked as f64
    }
}

pub fn two_phase_check(grid: &SweepGrid, margin: f64) -> TwoPhaseReport {
    let mut checked = 0;
    let mut violations = Vec::new();
    for c in &grid.cells {
        let (Some(a), Some(b)) = (
            c.order_mean(TestOrder::First),
            c.order_mean(TestOrder::Second),
        ) else {
            continue;
        };
        checked += 1;
        if a < b - margin {
            violations.push((c.n, c.k));
        }
    }
    TwoPhaseReport {
        margin,
        checked,
        violations,
    }
}
