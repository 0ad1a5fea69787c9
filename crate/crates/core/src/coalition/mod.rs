//! Team-scoped coalitions, restricted supports and model-based worths.
//!
//! A coalition is a subset of a team's filtered roster stored as a 64-bit
//! mask. Every action contributes the coalition of its participants; removing
//! one member from an observed coalition yields the coalitions a restricted
//! Shapley value needs, observed or not.

mod distribution;
mod support;
mod worth;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

pub use distribution::{binomial, coalition_distribution, CoalitionDistribution, DistributionRow};
pub use support::{compatible_unobserved, player_support, RestrictedSupport, SupportMember};
pub use worth::{
    estimate_worth, synth_coalition_features, ObservedAggregation, Provenance, TeamStats, WorthEntry, WorthTable,
    SYNTHETIC_RECIPE,
};

#[derive(Debug, Error)]
pub enum CoalitionError {
    #[error("team `{team}` has {size} players; at most 64 fit in a coalition mask")]
    RosterTooLarge { team: String, size: usize },
    #[error("team `{0}` has no rostered players")]
    EmptyRoster(String),
    #[error("action {action_id}: participant `{player_id}` is not on the roster")]
    UnknownParticipant { action_id: String, player_id: String },
    #[error("player {0} appears in no observed coalition")]
    EmptySupport(usize),
    #[error("cardinality bound {k_max} outside 1..={n}")]
    BadCardinality { k_max: usize, n: usize },
    #[error("model error: {0}")]
    Model(#[from] crate::xga::ModelError),
}

pub type Result<T> = std::result::Result<T, CoalitionError>;

/// Subset of a roster; bit `i` set means roster index `i` is a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Coalition(pub u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_indices(idx: impl IntoIterator<Item = usize>) -> Self {
        Coalition(idx.into_iter().fold(0u64, |m, i| m | (1u64 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        Coalition(self.0 | (1u64 << i))
    }

    pub fn without(self, i: usize) -> Self {
        Coalition(self.0 & !(1u64 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Member indices in increasing order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        })
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A team's filtered players in a fixed (sorted by id) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    pub team_id: String,
    pub ids: Vec<String>,
    pub offensive_index: Vec<f64>,
}

impl Roster {
    pub fn from_dataset(ds: &Dataset, team_id: &str) -> Result<Self> {
        let mut players: Vec<_> = ds.players.iter().filter(|p| p.team_id == team_id).collect();
        if players.is_empty() {
            return Err(CoalitionError::EmptyRoster(team_id.to_string()));
        }
        if players.len() > 64 {
            return Err(CoalitionError::RosterTooLarge { team: team_id.to_string(), size: players.len() });
        }
        players.sort_by(|a, b| a.player_id.cmp(&b.player_id));
        Ok(Self {
            team_id: team_id.to_string(),
            ids: players.iter().map(|p| p.player_id.clone()).collect(),
            offensive_index: players.iter().map(|p| p.offensive_index).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|p| p == id)
    }

    pub fn coalition_of<'a>(&self, ids: impl IntoIterator<Item = &'a String>) -> Option<Coalition> {
        let lookup: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut mask = Coalition::EMPTY;
        for id in ids {
            mask = mask.with(*lookup.get(id.as_str())?);
        }
        Some(mask)
    }

    pub fn names(&self, c: Coalition) -> Vec<&str> {
        c.members().map(|i| self.ids[i].as_str()).collect()
    }
}

/// Distinct observed coalitions and the actions (indices into `Dataset::actions`) behind each.
pub type ObservedCoalitions = BTreeMap<Coalition, Vec<usize>>;

/// Groups a team's actions by participant set.
pub fn extract_coalitions(ds: &Dataset, team_id: &str) -> Result<(Roster, ObservedCoalitions)> {
    let roster = Roster::from_dataset(ds, team_id)?;
    let lookup: HashMap<&str, usize> = roster.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut observed = ObservedCoalitions::new();
    for (idx, a) in ds.team_actions(team_id) {
        let mut mask = Coalition::EMPTY;
        for id in &a.participants {
            let i = lookup.get(id.as_str()).ok_or_else(|| CoalitionError::UnknownParticipant {
                action_id: a.action_id.clone(),
                player_id: id.clone(),
            })?;
            mask = mask.with(*i);
        }
        observed.entry(mask).or_default().push(idx);
    }
    Ok((roster, observed))
}


#[cfg(test)]
mod tests {
    use super::test_support::abc;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distinct_coalitions_keep_multiplicity() {
        let ds = abc(&[&["A", "B"], &["A", "B"], &["A", "C"]]);
        let (roster, obs) = extract_coalitions(&ds, "t").unwrap();
        assert_eq!(roster.ids, vec!["A", "B", "C"]);
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[&Coalition::from_indices([0, 1])], vec![0, 1]);
        assert_eq!(obs[&Coalition::from_indices([0, 2])], vec![2]);
    }

    #[test]
    fn no_actions_no_coalitions() {
        let ds = abc(&[]);
        let (_, obs) = extract_coalitions(&ds, "t").unwrap();
        assert!(obs.is_empty());
        assert!(matches!(extract_coalitions(&ds, "zz"), Err(CoalitionError::EmptyRoster(_))));
    }

    #[test]
    fn display_lists_members() {
        assert_eq!(Coalition::from_indices([3, 0, 5]).to_string(), "{0,3,5}");
        assert_eq!(Coalition::EMPTY.to_string(), "{}");
    }

    proptest! {
        #[test]
        fn mask_ops_match_popcount(mask in any::<u64>(), i in 0usize..64) {
            let c = Coalition(mask);
            prop_assert_eq!(c.len(), c.members().count());
            prop_assert!(c.with(i).contains(i));
            prop_assert!(!c.without(i).contains(i));
            prop_assert_eq!(Coalition::from_indices(c.members()), c);
        }
    }
}
