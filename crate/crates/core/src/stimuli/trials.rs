//! First- and second-order generalization trials.

use serde::{Deserialize, Serialize};

use super::attributes::{Attribute, Item};
use super::{StimulusSet, Universe};
use crate::error::{Error, Result};
use crate::numerics::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestOrder {
    First,
    Second,
}

impl TestOrder {
    pub fn number(self) -> u8 {
        match self {
            TestOrder::First => 1,
            TestOrder::Second => 2,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(TestOrder::First),
            2 => Ok(TestOrder::Second),
            other => Err(Error::config(format!(
                "test order must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// Exemplar plus one match per attribute. Each match shares exactly one
/// attribute with the exemplar; its other two attributes are novel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationTrial {
    pub exemplar: Item,
    pub shape_match: Item,
    pub color_match: Item,
    pub texture_match: Item,
    pub order: TestOrder,
}

impl GeneralizationTrial {
    pub fn candidate(&self, attr: Attribute) -> &Item {
        match attr {
            Attribute::Shape => &self.shape_match,
            Attribute::Color => &self.color_match,
            Attribute::Texture => &self.texture_match,
        }
    }

    pub fn candidates(&self) -> [&Item; 3] {
        [&self.shape_match, &self.color_match, &self.texture_match]
    }
}

/// Draws `count` distinct values from `pool`, none equal to `exclude`.
fn distinct_from(
    pool: std::ops::Range<usize>,
    count: usize,
    exclude: usize,
    rng: &mut Rng,
) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(count);
    while out.len() < count {
        let v = pool.start + rng.below(pool.len());
        if v != exclude && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Builds `count` trials of the given order.
///
/// Order 1: the exemplar copies a random training item's attributes (fresh
/// jitter). Order 2: every exemplar attribute comes from the holdout pools.
/// In both cases the non-shared attributes of each match are distinct
/// holdout values, so no match object was ever seen in training.
pub fn build_trials<U: Universe>(
    set: &StimulusSet<U>,
    order: TestOrder,
    count: usize,
    rng: &mut Rng,
) -> Result<Vec<GeneralizationTrial>> {
    let pools = Attribute::ALL.map(|a| set.holdout(a));
    let needed = match order {
        TestOrder::First => 2,
        TestOrder::Second => 3,
    };
    if let Some(a) = Attribute::ALL
        .into_iter()
        .find(|a| pools[a.index()].len() < needed)
    {
        return Err(Error::config(format!(
            "{a} holdout pool has {} values; order-{} trials need {needed}",
            pools[a.index()].len(),
            order.number()
        )));
    }
    if set.items.is_empty() {
        return Err(Error::config("empty stimulus set"));
    }
    let mut trials = Vec::with_capacity(count);
    for _ in 0..count {
        let ex_attrs = match order {
            TestOrder::First => set.items[rng.below(set.items.len())].attrs,
            TestOrder::Second => pools.clone().map(|p| p.start + rng.below(p.len())),
        };
        // two novel values per attribute, for the two matches that do not share it
        let novel: Vec<Vec<usize>> = (0..3)
            .map(|a| distinct_from(pools[a].clone(), 2, ex_attrs[a], rng))
            .collect();
        let mut make = |shared: usize| -> Result<Item> {
            let mut attrs = [0usize; 3];
            for a in 0..3 {
                attrs[a] = if a == shared {
                    ex_attrs[a]
                } else {
                    // the slot index keeps the two non-sharing matches apart
                    let slot = if (shared + 1) % 3 == a { 0 } else { 1 };
                    novel[a][slot]
                };
            }
            let offset = set.universe.place(attrs[0], rng)?;
            Ok(Item { attrs, offset })
        };
        let shape_match = make(0)?;
        let color_match = make(1)?;
        let texture_match = make(2)?;
        let offset = set.universe.place(ex_attrs[0], rng)?;
        trials.push(GeneralizationTrial {
            exemplar: Item {
                attrs: ex_attrs,
                offset,
            },
            shape_match,
            color_match,
            texture_match,
            order,
        });
    }
    Ok(trials)
}
