//! Action and player tables, their CSV contract, filters and a synthetic generator.

mod alias;
mod filter;
mod io;
mod synth;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alias::AliasTable;
pub use filter::{filter_dataset, FilterStep, DEFAULT_MIN_ACTIONS};
pub use io::{load_actions, load_dataset, load_players, write_actions, write_players, ACTION_COLUMNS, PLAYER_COLUMNS};
pub use synth::{generate_synthetic, GroundTruth, SynthConfig};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error at row {row}: {source}")]
    Csv {
        row: usize,
        #[source]
        source: csv::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: bad value `{value}` for `{field}`")]
    BadEnum { row: usize, field: &'static str, value: String },
    #[error("row {row}: bad role `{value}`")]
    BadRole { row: usize, value: String },
    #[error("row {row}: field `{field}` is not a valid number: `{value}`")]
    BadNumber { row: usize, field: &'static str, value: String },
    #[error("row {row}: field `{field}` = {value} out of range")]
    OutOfRange { row: usize, field: &'static str, value: f64 },
    #[error("action {action_id}: unknown player `{player_id}`")]
    UnknownPlayer { action_id: String, player_id: String },
    #[error("action {action_id}: players_nb does not match participant count")]
    UnknownCount { action_id: String },
    #[error("action {action_id}: shooter is not a participant")]
    ShooterNotParticipant { action_id: String },
    #[error("action {action_id}: participant `{player_id}` belongs to another team")]
    TeamMismatch { action_id: String, player_id: String },
    #[error("action {action_id}: empty participant set")]
    EmptyParticipants { action_id: String },
    #[error("duplicate action id `{0}`")]
    DuplicateActionId(String),
    #[error("duplicate player id `{0}`")]
    DuplicatePlayerId(String),
    #[error("no actions survive filtering")]
    EmptyResult,
    #[error("invalid synthetic configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Goalkeeper,
    Defender,
    Midfielder,
    Forward,
}

impl Role {
    pub fn code(self) -> &'static str {
        match self {
            Role::Goalkeeper => "GK",
            Role::Defender => "DEF",
            Role::Midfielder => "MID",
            Role::Forward => "FOR",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Venue {
    Home,
    Away,
}

impl Venue {
    pub fn code(self) -> &'static str {
        match self {
            Venue::Home => "h",
            Venue::Away => "a",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Situation {
    OpenPlay,
    FreeKick,
    Penalty,
    Other,
}

impl Situation {
    pub fn code(self) -> &'static str {
        match self {
            Situation::OpenPlay => "open_play",
            Situation::FreeKick => "free_kick",
            Situation::Penalty => "penalty",
            Situation::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub player_id: String,
    pub team_id: String,
    pub name: String,
    pub role: Role,
    /// Composite offensive performance index in `[0, 100]`.
    pub offensive_index: f64,
    /// Minutes played over the season.
    pub minutes: f64,
    pub goals: u32,
}

/// One shot-ending offensive sequence.
///
/// Coordinates are percentages of pitch length (`x`) and width (`y`),
/// attacking left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotAction {
    pub action_id: String,
    pub match_id: String,
    pub team_id: String,
    pub shooter_id: String,
    pub participants: BTreeSet<String>,
    pub outcome: bool,
    pub x: f64,
    pub y: f64,
    pub shot_angle: f64,
    pub first_pass_x: f64,
    pub first_pass_y: f64,
    pub pass_nb: u32,
    pub players_nb: u32,
    pub avg_pass_distance: f64,
    pub pl_performance_index: f64,
    pub h_a: Venue,
    pub situation: Situation,
    pub minute: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub players: Vec<Player>,
    pub actions: Vec<ShotAction>,
    pub provenance: String,
    pub filter_log: Vec<FilterStep>,
}

impl Dataset {
    pub fn new(players: Vec<Player>, actions: Vec<ShotAction>, provenance: impl Into<String>) -> Self {
        Self { players, actions, provenance: provenance.into(), filter_log: Vec::new() }
    }

    pub fn player(&self, id: &str) -> Option<&Player> {
        self.players.iter().find(|p| p.player_id == id)
    }

    pub fn player_index(&self) -> HashMap<&str, &Player> {
        self.players.iter().map(|p| (p.player_id.as_str(), p)).collect()
    }

    /// Team ids in first-appearance order over the player table.
    pub fn team_ids(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for p in &self.players {
            if seen.insert(p.team_id.as_str()) {
                out.push(p.team_id.clone());
            }
        }
        out
    }

    pub fn team_actions<'a>(&'a self, team_id: &'a str) -> impl Iterator<Item = (usize, &'a ShotAction)> + 'a {
        self.actions.iter().enumerate().filter(move |(_, a)| a.team_id == team_id)
    }

    /// Number of actions each player participates in.
    pub fn participation_counts(&self) -> HashMap<String, usize> {
        let mut counts: HashMap<String, usize> = self.players.iter().map(|p| (p.player_id.clone(), 0)).collect();
        for a in &self.actions {
            for id in &a.participants {
                *counts.entry(id.clone()).or_default() += 1;
            }
        }
        counts
    }

    /// Same players and actions, ignoring provenance and the filter log.
    pub fn same_content(&self, other: &Dataset) -> bool {
        self.players == other.players && self.actions == other.actions
    }

    /// Checks the cross-table invariants: unique ids and resolvable participants.
    ///
    /// The shooter is not checked here: filtering may drop the shooter from
    /// the roster while the action (and its shot attribution) survives.
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for p in &self.players {
            if !ids.insert(p.player_id.as_str()) {
                return Err(DatasetError::DuplicatePlayerId(p.player_id.clone()));
            }
        }
        let index = self.player_index();
        let mut action_ids = BTreeSet::new();
        for a in &self.actions {
            if !action_ids.insert(a.action_id.as_str()) {
                return Err(DatasetError::DuplicateActionId(a.action_id.clone()));
            }
            for id in &a.participants {
                if !index.contains_key(id.as_str()) {
                    return Err(DatasetError::UnknownPlayer {
                        action_id: a.action_id.clone(),
                        player_id: id.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}
