//! First- and second-order generalization tests scored by cosine similarity
//! of hidden activations.

use serde::{Deserialize, Serialize};

use super::FeatureExtractor;
use crate::error::{Error, Result};
use crate::numerics::{cosine_similarity, Rng};
use crate::stimuli::{Attribute, GeneralizationTrial, Item, Universe};

const TRIALS_PER_BATCH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub chosen: Attribute,
    /// Cosine similarity to the shape, color and texture match. `NaN` marks
    /// a zero-norm activation.
    pub similarities: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// Fraction of trials choosing the shape, color and texture match.
    pub shares: [f64; 3],
    pub counts: [usize; 3],
    pub trial_count: usize,
    /// The attribute whose match counts as correct.
    pub target: Attribute,
}

impl TestReport {
    pub fn accuracy(&self) -> f64 {
        self.shares[self.target.index()]
    }

    pub fn from_outcomes(outcomes: &[TrialOutcome], target: Attribute) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::arg("no trials to score"));
        }
        let mut counts = [0usize; 3];
        for o in outcomes {
            counts[o.chosen.index()] += 1;
        }
        let n = outcomes.len() as f64;
        Ok(Self {
            shares: counts.map(|c| c as f64 / n),
            counts,
            trial_count: outcomes.len(),
            target,
        })
    }
}

/// Index of the most similar candidate.
///
/// Zero-norm candidates (`NaN`) rank below everything unless all three are
/// degenerate, in which case all three are eligible. Exact ties are broken
/// uniformly with `rng`.
pub fn choose(similarities: &[f64; 3], rng: &mut Rng) -> usize {
    let ranked = similarities.map(|s| if s.is_nan() { f64::NEG_INFINITY } else { s });
    let best = ranked.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..3).filter(|&i| ranked[i] == best).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.below(tied.len())]
    }
}

/// Scores every trial: the chosen match is the one whose activation is most
/// cosine-similar to the exemplar's.
pub fn run_generalization_test<U: Universe, F: FeatureExtractor + ?Sized>(
    extractor: &F,
    universe: &U,
    trials: &[GeneralizationTrial],
    target: Attribute,
    tie_seed: u64,
) -> Result<(TestReport, Vec<TrialOutcome>)> {
    if trials.is_empty() {
        return Err(Error::arg("generalization test needs at least one trial"));
    }
    let mut rng = Rng::stream(tie_seed, "ties", &[]);
    let mut outcomes = Vec::with_capacity(trials.len());
    for chunk in trials.chunks(TRIALS_PER_BATCH) {
        let items: Vec<&Item> = chunk
            .iter()
            .flat_map(|t| {
                [
                    &t.exemplar,
                    &t.shape_match,
                    &t.color_match,
                    &t.texture_match,
                ]
            })
            .collect();
        let feats = extractor.features(&universe.encode_batch(&items)?)?;
        for group in feats.chunks(4) {
            let mut sims = [0.0; 3];
            for (s, cand) in sims.iter_mut().zip(&group[1..]) {
                *s = cosine_similarity(&group[0], cand)?;
            }
            let chosen = Attribute::ALL[choose(&sims, &mut rng)];
            outcomes.push(TrialOutcome {
                chosen,
                similarities: sims,
            });
        }
    }
    Ok((TestReport::from_outcomes(&outcomes, target)?, outcomes))
}
