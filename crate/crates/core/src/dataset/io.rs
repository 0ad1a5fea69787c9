use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use super::{AliasTable, Dataset, DatasetError, Player, Result, ShotAction};

pub const ACTION_COLUMNS: [&str; 18] = [
    "action_id",
    "match_id",
    "team_id",
    "shooter_id",
    "participants",
    "outcome",
    "x",
    "y",
    "shot_angle",
    "first_pass_x",
    "first_pass_y",
    "pass_nb",
    "players_nb",
    "avg_pass_distance",
    "pl_performance_index",
    "h_a",
    "situation",
    "minute",
];

pub const PLAYER_COLUMNS: [&str; 7] = ["player_id", "team_id", "name", "role", "offensive_index", "minutes", "goals"];

fn open(path: &Path) -> Result<csv::Reader<File>> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

/// Header positions for the required columns. Extra columns are ignored.
fn column_map<const N: usize>(reader: &mut csv::Reader<File>, required: &[&str; N]) -> Result<[usize; N]> {
    let headers = reader.headers().map_err(|source| DatasetError::Csv { row: 1, source })?.clone();
    let mut out = [0usize; N];
    for (slot, name) in out.iter_mut().zip(required) {
        *slot = headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == *name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))?;
    }
    Ok(out)
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    line: usize,
}

impl Row<'_> {
    fn str(&self, idx: usize) -> &str {
        self.record.get(idx).unwrap_or("")
    }

    fn f64(&self, idx: usize, field: &'static str) -> Result<f64> {
        let raw = self.str(idx);
        let v: f64 = raw
            .parse()
            .map_err(|_| DatasetError::BadNumber { row: self.line, field, value: raw.to_string() })?;
        if !v.is_finite() {
            return Err(DatasetError::OutOfRange { row: self.line, field, value: v });
        }
        Ok(v)
    }

    fn f64_in(&self, idx: usize, field: &'static str, lo: f64, hi: f64) -> Result<f64> {
        let v = self.f64(idx, field)?;
        if v < lo || v > hi {
            return Err(DatasetError::OutOfRange { row: self.line, field, value: v });
        }
        Ok(v)
    }

    fn u32(&self, idx: usize, field: &'static str) -> Result<u32> {
        let raw = self.str(idx);
        raw.parse().map_err(|_| DatasetError::BadNumber { row: self.line, field, value: raw.to_string() })
    }
}

pub fn load_players(path: &Path, aliases: &AliasTable) -> Result<Vec<Player>> {
    let mut reader = open(path)?;
    let [c_id, c_team, c_name, c_role, c_index, c_minutes, c_goals] = column_map(&mut reader, &PLAYER_COLUMNS)?;
    let mut players = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|source| DatasetError::Csv { row: line, source })?;
        let row = Row { record: &record, line };
        let player_id = row.str(c_id).to_string();
        if !seen.insert(player_id.clone()) {
            return Err(DatasetError::DuplicatePlayerId(player_id));
        }
        let raw_role = row.str(c_role);
        let role = aliases
            .role(raw_role)
            .ok_or_else(|| DatasetError::BadRole { row: line, value: raw_role.to_string() })?;
        players.push(Player {
            player_id,
            team_id: row.str(c_team).to_string(),
            name: row.str(c_name).to_string(),
            role,
            offensive_index: row.f64_in(c_index, "offensive_index", 0.0, 100.0)?,
            minutes: row.f64_in(c_minutes, "minutes", 0.0, f64::INFINITY)?,
            goals: row.u32(c_goals, "goals")?,
        });
    }
    Ok(players)
}

pub fn load_actions(path: &Path, players: &[Player], aliases: &AliasTable) -> Result<Vec<ShotAction>> {
    let mut reader = open(path)?;
    let cols = column_map(&mut reader, &ACTION_COLUMNS)?;
    let teams: HashMap<&str, &str> = players.iter().map(|p| (p.player_id.as_str(), p.team_id.as_str())).collect();
    let mut seen = HashSet::new();
    let mut actions = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|source| DatasetError::Csv { row: line, source })?;
        let row = Row { record: &record, line };
        let action = parse_action(&row, &cols, aliases)?;
        if !seen.insert(action.action_id.clone()) {
            return Err(DatasetError::DuplicateActionId(action.action_id));
        }
        check_action(&action, &teams)?;
        actions.push(action);
    }
    Ok(actions)
}

fn parse_action(row: &Row<'_>, c: &[usize; 18], aliases: &AliasTable) -> Result<ShotAction> {
    let outcome = match row.str(c[5]) {
        "1" => true,
        "0" => false,
        other => return Err(DatasetError::BadEnum { row: row.line, field: "outcome", value: other.to_string() }),
    };
    let participants: BTreeSet<String> =
        row.str(c[4]).split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    let raw_ha = row.str(c[15]);
    let h_a = aliases
        .venue(raw_ha)
        .ok_or_else(|| DatasetError::BadEnum { row: row.line, field: "h_a", value: raw_ha.to_string() })?;
    let raw_sit = row.str(c[16]);
    let situation = aliases
        .situation(raw_sit)
        .ok_or_else(|| DatasetError::BadEnum { row: row.line, field: "situation", value: raw_sit.to_string() })?;
    Ok(ShotAction {
        action_id: row.str(c[0]).to_string(),
        match_id: row.str(c[1]).to_string(),
        team_id: row.str(c[2]).to_string(),
        shooter_id: row.str(c[3]).to_string(),
        participants,
        outcome,
        x: row.f64_in(c[6], "x", 0.0, 100.0)?,
        y: row.f64_in(c[7], "y", 0.0, 100.0)?,
        shot_angle: row.f64_in(c[8], "shot_angle", 0.0, f64::INFINITY)?,
        first_pass_x: row.f64_in(c[9], "first_pass_x", 0.0, 100.0)?,
        first_pass_y: row.f64_in(c[10], "first_pass_y", 0.0, 100.0)?,
        pass_nb: row.u32(c[11], "pass_nb")?,
        players_nb: row.u32(c[12], "players_nb")?,
        avg_pass_distance: row.f64_in(c[13], "avg_pass_distance", 0.0, f64::INFINITY)?,
        pl_performance_index: row.f64(c[14], "pl_performance_index")?,
        h_a,
        situation,
        minute: row.f64_in(c[17], "minute", 0.0, f64::INFINITY)?,
    })
}

fn check_action(a: &ShotAction, teams: &HashMap<&str, &str>) -> Result<()> {
    if a.participants.is_empty() {
        return Err(DatasetError::EmptyParticipants { action_id: a.action_id.clone() });
    }
    for id in &a.participants {
        match teams.get(id.as_str()) {
            None => {
                return Err(DatasetError::UnknownPlayer { action_id: a.action_id.clone(), player_id: id.clone() })
            }
            Some(team) if *team != a.team_id => {
                return Err(DatasetError::TeamMismatch { action_id: a.action_id.clone(), player_id: id.clone() })
            }
            Some(_) => {}
        }
    }
    if a.players_nb as usize != a.participants.len() {
        return Err(DatasetError::UnknownCount { action_id: a.action_id.clone() });
    }
    if !a.participants.contains(&a.shooter_id) {
        return Err(DatasetError::ShooterNotParticipant { action_id: a.action_id.clone() });
    }
    Ok(())
}

/// Loads players then actions and checks the cross-table invariants.
pub fn load_dataset(actions: &Path, players: &Path, aliases: &AliasTable) -> Result<Dataset> {
    let roster = load_players(players, aliases)?;
    let acts = load_actions(actions, &roster, aliases)?;
    let ds = Dataset::new(roster, acts, format!("{} + {}", actions.display(), players.display()));
    ds.validate()?;
    Ok(ds)
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    Ok(csv::Writer::from_writer(file))
}

fn io_err(path: &Path) -> impl Fn(csv::Error) -> DatasetError + '_ {
    move |e| DatasetError::Io { path: path.to_path_buf(), source: std::io::Error::other(e) }
}

pub fn write_players(path: &Path, players: &[Player]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(PLAYER_COLUMNS).map_err(io_err(path))?;
    for p in players {
        w.write_record([
            p.player_id.clone(),
            p.team_id.clone(),
            p.name.clone(),
            p.role.code().to_string(),
            p.offensive_index.to_string(),
            p.minutes.to_string(),
            p.goals.to_string(),
        ])
        .map_err(io_err(path))?;
    }
    w.flush().map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}

pub fn write_actions(path: &Path, actions: &[ShotAction]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(ACTION_COLUMNS).map_err(io_err(path))?;
    for a in actions {
        let participants: Vec<&str> = a.participants.iter().map(String::as_str).collect();
        w.write_record([
            a.action_id.clone(),
            a.match_id.clone(),
            a.team_id.clone(),
            a.shooter_id.clone(),
            participants.join(";"),
            u8::from(a.outcome).to_string(),
            a.x.to_string(),
            a.y.to_string(),
            a.shot_angle.to_string(),
            a.first_pass_x.to_string(),
            a.first_pass_y.to_string(),
            a.pass_nb.to_string(),
            a.players_nb.to_string(),
            a.avg_pass_distance.to_string(),
            a.pl_performance_index.to_string(),
            a.h_a.code().to_string(),
            a.situation.code().to_string(),
            a.minute.to_string(),
        ])
        .map_err(io_err(path))?;
    }
    w.flush().map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}
