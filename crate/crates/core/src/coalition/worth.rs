use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Coalition, ObservedCoalitions, Result, Roster};
use crate::dataset::{Dataset, ShotAction, Situation, Venue};
use crate::xga::{FeatureMode, FittedModel, ModelError};

/// Human-readable description of how unobserved coalitions get a feature row.
pub const SYNTHETIC_RECIPE: &str = "players_nb = |S|; pass_nb = max(|S| - 1, 0); \
pl_performance_index = mean offensive index of members; x, y, shot_angle, first_pass_x, first_pass_y, \
avg_pass_distance, minute = team means over observed actions; situation = open_play; h_a = home";

/// Team-level means of the context features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamStats {
    pub team_id: String,
    pub actions: usize,
    pub x: f64,
    pub y: f64,
    pub shot_angle: f64,
    pub first_pass_x: f64,
    pub first_pass_y: f64,
    pub avg_pass_distance: f64,
    pub minute: f64,
}

impl TeamStats {
    /// Means over the team's actions; all zero when it has none.
    pub fn from_dataset(ds: &Dataset, team_id: &str) -> Self {
        let mut s = TeamStats {
            team_id: team_id.to_string(),
            actions: 0,
            x: 0.0,
            y: 0.0,
            shot_angle: 0.0,
            first_pass_x: 0.0,
            first_pass_y: 0.0,
            avg_pass_distance: 0.0,
            minute: 0.0,
        };
        for (_, a) in ds.team_actions(team_id) {
            s.actions += 1;
            s.x += a.x;
            s.y += a.y;
            s.shot_angle += a.shot_angle;
            s.first_pass_x += a.first_pass_x;
            s.first_pass_y += a.first_pass_y;
            s.avg_pass_distance += a.avg_pass_distance;
            s.minute += a.minute;
        }
        if s.actions > 0 {
            let n = s.actions as f64;
            for v in [
                &mut s.x,
                &mut s.y,
                &mut s.shot_angle,
                &mut s.first_pass_x,
                &mut s.first_pass_y,
                &mut s.avg_pass_distance,
                &mut s.minute,
            ] {
                *v /= n;
            }
        }
        s
    }
}

/// Builds the synthetic action standing in for a coalition that was never observed.
pub fn synth_coalition_features(c: Coalition, stats: &TeamStats, roster: &Roster) -> ShotAction {
    let size = c.len();
    let index = if size == 0 { 0.0 } else { c.members().map(|i| roster.offensive_index[i]).sum::<f64>() / size as f64 };
    let participants = c.members().map(|i| roster.ids[i].clone()).collect();
    ShotAction {
        action_id: format!("synthetic:{}:{:x}", roster.team_id, c.0),
        match_id: String::new(),
        team_id: roster.team_id.clone(),
        shooter_id: c.members().next().map(|i| roster.ids[i].clone()).unwrap_or_default(),
        participants,
        outcome: false,
        x: stats.x,
        y: stats.y,
        shot_angle: stats.shot_angle,
        first_pass_x: stats.first_pass_x,
        first_pass_y: stats.first_pass_y,
        pass_nb: size.saturating_sub(1) as u32,
        players_nb: size as u32,
        avg_pass_distance: stats.avg_pass_distance,
        pl_performance_index: index,
        h_a: Venue::Home,
        situation: Situation::OpenPlay,
        minute: stats.minute,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ObservedInSample,
    UnobservedOutOfSample,
    EmptyConvention,
}

/// How an observed coalition's action predictions combine into its worth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservedAggregation {
    #[default]
    Sum,
    Mean,
}

impl ObservedAggregation {
    pub fn combine(self, total: f64, count: usize) -> f64 {
        match self {
            ObservedAggregation::Sum => total,
            ObservedAggregation::Mean if count == 0 => 0.0,
            ObservedAggregation::Mean => total / count as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorthEntry {
    pub worth: f64,
    pub provenance: Provenance,
    pub action_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WorthTable {
    pub entries: BTreeMap<Coalition, WorthEntry>,
}

impl WorthTable {
    /// A table holding only the empty coalition at worth 0.
    pub fn new() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            Coalition::EMPTY,
            WorthEntry { worth: 0.0, provenance: Provenance::EmptyConvention, action_count: 0 },
        );
        Self { entries }
    }

    pub fn insert(&mut self, c: Coalition, entry: WorthEntry) {
        self.entries.insert(c, entry);
    }

    pub fn worth(&self, c: Coalition) -> Option<f64> {
        self.entries.get(&c).map(|e| e.worth)
    }

    pub fn get(&self, c: Coalition) -> Option<&WorthEntry> {
        self.entries.get(&c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.entries.values().filter(|e| e.provenance == p).count()
    }

    /// Multiplies every worth by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let entries = self.entries.iter().map(|(c, e)| (*c, WorthEntry { worth: e.worth * k, ..*e })).collect();
        Self { entries }
    }
}

/// Worth of every observed and compatible unobserved coalition under `model`.
///
/// Observed coalitions aggregate the in-sample predictions of their actions;
/// unobserved ones get a single prediction on their synthetic row.
#[allow(clippy::too_many_arguments)]
pub fn estimate_worth(
    ds: &Dataset,
    roster: &Roster,
    observed: &ObservedCoalitions,
    unobserved: &BTreeSet<Coalition>,
    model: &FittedModel,
    stats: &TeamStats,
    aggregation: ObservedAggregation,
) -> Result<WorthTable> {
    if model.spec.mode != FeatureMode::Xga {
        return Err(ModelError::SchemaMismatch("worth requires a model fitted in XGA mode".into()).into());
    }
    let mut table = WorthTable::new();
    for (c, actions) in observed {
        let total: f64 = actions.iter().map(|&a| model.predict_row(&model.spec.encode(&ds.actions[a]))).sum();
        table.insert(
            *c,
            WorthEntry {
                worth: aggregation.combine(total, actions.len()),
                provenance: Provenance::ObservedInSample,
                action_count: actions.len(),
            },
        );
    }
    for c in unobserved {
        let row = model.spec.encode(&synth_coalition_features(*c, stats, roster));
        table.insert(
            *c,
            WorthEntry { worth: model.predict_row(&row), provenance: Provenance::UnobservedOutOfSample, action_count: 0 },
        );
    }
    Ok(table)
}
