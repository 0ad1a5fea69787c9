use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Coalition, CoalitionError, ObservedCoalitions, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportMember {
    pub coalition: Coalition,
    /// The coalition is itself the participant set of some action.
    pub observed: bool,
}

/// The coalitions a player's restricted value averages over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedSupport {
    pub player: usize,
    pub members: Vec<SupportMember>,
}

impl RestrictedSupport {
    pub fn coalitions(&self) -> impl Iterator<Item = Coalition> + '_ {
        self.members.iter().map(|m| m.coalition)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `C_i = { S \ {i} : S observed, i in S }`, deduplicated and in mask order.
pub fn player_support(observed: &ObservedCoalitions, i: usize) -> Result<RestrictedSupport> {
    let set: BTreeSet<Coalition> = observed.keys().filter(|s| s.contains(i)).map(|s| s.without(i)).collect();
    if set.is_empty() {
        return Err(CoalitionError::EmptySupport(i));
    }
    let members = set
        .into_iter()
        .map(|c| SupportMember { coalition: c, observed: observed.contains_key(&c) })
        .collect();
    Ok(RestrictedSupport { player: i, members })
}

/// Coalitions one removal away from an observed one that were never observed themselves (excluding the empty set).
pub fn compatible_unobserved(observed: &ObservedCoalitions) -> BTreeSet<Coalition> {
    let mut out = BTreeSet::new();
    for s in observed.keys() {
        for i in s.members() {
            let c = s.without(i);
            if !c.is_empty() && !observed.contains_key(&c) {
                out.insert(c);
            }
        }
    }
    out
}
