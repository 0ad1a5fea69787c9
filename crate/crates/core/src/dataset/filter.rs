use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, Result, Role, Situation};

pub const DEFAULT_MIN_ACTIONS: usize = 60;

/// One filter step with its before/after counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStep {
    pub step: String,
    /// `"actions"` or `"players"`.
    pub unit: String,
    pub before: usize,
    pub after: usize,
}

impl fmt::Display for FilterStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}\u{2192}{} {}", self.step, self.before, self.after, self.unit)
    }
}

fn log(ds: &mut Dataset, step: impl Into<String>, unit: &str, before: usize, after: usize) {
    ds.filter_log.push(FilterStep { step: step.into(), unit: unit.to_string(), before, after });
}

/// Removes `ids` from the roster and from every participant set, then drops
/// actions left without participants.
fn drop_players(ds: &mut Dataset, ids: &HashSet<String>, step: &str) {
    let players_before = ds.players.len();
    ds.players.retain(|p| !ids.contains(&p.player_id));
    log(ds, step, "players", players_before, ds.players.len());
    for a in &mut ds.actions {
        a.participants.retain(|id| !ids.contains(id));
    }
    let actions_before = ds.actions.len();
    ds.actions.retain(|a| !a.participants.is_empty());
    log(ds, format!("{step}/empty-coalition"), "actions", actions_before, ds.actions.len());
}

/// Applies the analysis filters in a fixed order:
///
/// 1. penalty actions are removed;
/// 2. goalkeepers leave the roster and every participant set;
/// 3. players with fewer than `min_actions` remaining participations are
///    removed the same way, repeated until no player falls below the bar.
///
/// Actions whose participant set becomes empty are dropped. `players_nb`,
/// `shooter_id` and the other recorded action features are left untouched:
/// they describe the observed action, not the analysed roster.
pub fn filter_dataset(ds: &Dataset, min_actions: usize) -> Result<Dataset> {
    let mut out = ds.clone();

    let before = out.actions.len();
    out.actions.retain(|a| a.situation != Situation::Penalty);
    let after = out.actions.len();
    log(&mut out, "penalty", "actions", before, after);

    let keepers: HashSet<String> =
        out.players.iter().filter(|p| p.role == Role::Goalkeeper).map(|p| p.player_id.clone()).collect();
    drop_players(&mut out, &keepers, "goalkeeper");

    let mut pass = 1;
    loop {
        let counts = out.participation_counts();
        let low: HashSet<String> = out
            .players
            .iter()
            .filter(|p| counts.get(&p.player_id).copied().unwrap_or(0) < min_actions)
            .map(|p| p.player_id.clone())
            .collect();
        if low.is_empty() {
            break;
        }
        drop_players(&mut out, &low, &format!("min_actions>={min_actions} (pass {pass})"));
        pass += 1;
    }

    if out.actions.is_empty() {
        return Err(DatasetError::EmptyResult);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Player, ShotAction, Venue};

    fn player(id: &str, role: Role) -> Player {
        Player {
            player_id: id.into(),
            team_id: "t".into(),
            name: id.into(),
            role,
            offensive_index: 70.0,
            minutes: 900.0,
            goals: 0,
        }
    }

    fn action(id: usize, who: &[&str], situation: Situation) -> ShotAction {
        ShotAction {
            action_id: format!("a{id}"),
            match_id: "m".into(),
            team_id: "t".into(),
            shooter_id: who[0].into(),
            participants: who.iter().map(|s| s.to_string()).collect(),
            outcome: false,
            x: 85.0,
            y: 50.0,
            shot_angle: 30.0,
            first_pass_x: 50.0,
            first_pass_y: 50.0,
            pass_nb: who.len() as u32 - 1,
            players_nb: who.len() as u32,
            avg_pass_distance: 20.0,
            pl_performance_index: 70.0,
            h_a: Venue::Home,
            situation,
            minute: 10.0,
        }
    }

    fn base() -> Dataset {
        let players = vec![player("a", Role::Forward), player("b", Role::Midfielder), player("k", Role::Goalkeeper)];
        let mut actions: Vec<_> = (0..9).map(|i| action(i, &["a", "b"], Situation::OpenPlay)).collect();
        actions.push(action(9, &["a"], Situation::Penalty));
        Dataset::new(players, actions, "test")
    }

    #[test]
    fn penalty_removed_and_logged() {
        let out = filter_dataset(&base(), 0).unwrap();
        assert_eq!(out.actions.len(), 9);
        assert_eq!(out.filter_log[0].to_string(), "penalty: 10\u{2192}9 actions");
    }

    #[test]
    fn goalkeeper_only_action_dropped() {
        let mut ds = base();
        ds.actions.push(action(10, &["k"], Situation::OpenPlay));
        ds.actions.push(action(11, &["k", "b"], Situation::OpenPlay));
        let out = filter_dataset(&ds, 0).unwrap();
        assert_eq!(out.actions.len(), 10);
        assert!(out.actions.iter().all(|a| !a.participants.contains("k")));
        assert!(out.players.iter().all(|p| p.role != Role::Goalkeeper));
        // the mixed action keeps its recorded size
        let kept = out.actions.iter().find(|a| a.action_id == "a11").unwrap();
        assert_eq!(kept.players_nb, 2);
        assert_eq!(kept.participants.len(), 1);
    }

    #[test]
    fn min_actions_cascades_to_fixed_point() {
        // c needs d's actions to stay above 3; d is dropped first
        let players = vec![player("c", Role::Forward), player("d", Role::Forward), player("e", Role::Forward)];
        let mut actions = vec![action(0, &["d", "c"], Situation::OpenPlay), action(1, &["d", "c"], Situation::OpenPlay)];
        actions.push(action(2, &["c"], Situation::OpenPlay));
        for i in 3..8 {
            actions.push(action(i, &["e"], Situation::OpenPlay));
        }
        let ds = Dataset::new(players, actions, "t");
        let out = filter_dataset(&ds, 3).unwrap();
        // pass 1 drops d (2 actions); c then has 3, stays
        assert_eq!(out.players.len(), 2);
        let out4 = filter_dataset(&ds, 4).unwrap();
        assert_eq!(out4.players.iter().map(|p| p.player_id.as_str()).collect::<Vec<_>>(), vec!["e"]);
        assert_eq!(out4.actions.len(), 5);
        assert!(out4.filter_log.iter().any(|s| s.step.contains("pass 1")));
    }

    #[test]
    fn idempotent_and_empty_result() {
        let once = filter_dataset(&base(), 5).unwrap();
        let twice = filter_dataset(&once, 5).unwrap();
        assert!(once.same_content(&twice));
        assert!(matches!(filter_dataset(&base(), 100), Err(DatasetError::EmptyResult)));
    }
}
