use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Which clients may be selected in a given round.
///
/// In alternating mode the clients are split into two fixed halves
/// (`[0, ⌊K/2⌋)` and the rest); round `r` draws from half `r mod 2`, after
/// excluding `⌊exclude_fraction · |half|⌋` of its members uniformly at random.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AvailabilityModel {
    #[default]
    AlwaysOn,
    AlternatingGroups {
        #[serde(default = "default_exclusion")]
        exclude_fraction: f64,
    },
}

fn default_exclusion() -> f64 {
    0.1
}

impl AvailabilityModel {
    pub fn alternating() -> Self {
        AvailabilityModel::AlternatingGroups {
            exclude_fraction: default_exclusion(),
        }
    }

    pub fn validate(&self, clients: usize) -> Result<()> {
        match *self {
            AvailabilityModel::AlwaysOn => Ok(()),
            AvailabilityModel::AlternatingGroups { exclude_fraction } => {
                if clients < 2 {
                    return Err(Error::invalid("alternating availability needs at least 2 clients"));
                }
                if !(0.0..1.0).contains(&exclude_fraction) {
                    return Err(Error::invalid("exclude_fraction must lie in [0, 1)"));
                }
                Ok(())
            }
        }
    }

    /// The group that round `round` draws from.
    pub fn group(&self, round: usize, clients: usize) -> Vec<usize> {
        match self {
            AvailabilityModel::AlwaysOn => (0..clients).collect(),
            AvailabilityModel::AlternatingGroups { .. } => {
                let half = clients / 2;
                if round % 2 == 0 {
                    (0..half).collect()
                } else {
                    (half..clients).collect()
                }
            }
        }
    }

    /// Available clients for `round`, sorted by id.
    pub fn pool(&self, round: usize, clients: usize, rng: &mut SimRng) -> Vec<usize> {
        let group = self.group(round, clients);
        match *self {
            AvailabilityModel::AlwaysOn => group,
            AvailabilityModel::AlternatingGroups { exclude_fraction } => {
                let excluded = (exclude_fraction * group.len() as f64).floor() as usize;
                if excluded == 0 {
                    return group;
                }
                let drop = index::sample(rng, group.len(), excluded).into_vec();
                group
                    .into_iter()
                    .enumerate()
                    .filter(|(i, _)| !drop.contains(i))
                    .map(|(_, k)| k)
                    .collect()
            }
        }
    }
}
