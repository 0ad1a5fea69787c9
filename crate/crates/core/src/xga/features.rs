use serde::{Deserialize, Serialize};

use super::{ModelError, Result};
use crate::dataset::{ShotAction, Situation, Venue};

/// Which feature set a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureMode {
    /// Shot features only.
    Xg,
    /// Shot features plus build-up and context features.
    Xga,
}

pub const SHOT_FEATURES: [&str; 3] = ["x", "y", "shot_angle"];
pub const ACTION_NUMERIC_FEATURES: [&str; 6] =
    ["first_pass_x", "first_pass_y", "pass_nb", "players_nb", "avg_pass_distance", "pl_performance_index"];
pub const HOME_DUMMY: &str = "h_a=home";
/// Situation dummies; open play is the reference level.
pub const SITUATION_DUMMIES: [&str; 3] = ["situation=free_kick", "situation=penalty", "situation=other"];

/// Ordered column layout of a design matrix (intercept excluded).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub mode: FeatureMode,
    pub numeric_features: Vec<String>,
    /// Categorical name, reference level, and the ordered dummy columns.
    pub categorical_encodings: Vec<CategoricalEncoding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalEncoding {
    pub name: String,
    pub reference: String,
    pub dummies: Vec<String>,
}

impl FeatureSpec {
    pub fn new(mode: FeatureMode) -> Self {
        match mode {
            FeatureMode::Xg => Self {
                mode,
                numeric_features: SHOT_FEATURES.iter().map(|s| s.to_string()).collect(),
                categorical_encodings: Vec::new(),
            },
            FeatureMode::Xga => Self {
                mode,
                numeric_features: SHOT_FEATURES.iter().chain(ACTION_NUMERIC_FEATURES.iter()).map(|s| s.to_string()).collect(),
                categorical_encodings: vec![
                    CategoricalEncoding {
                        name: "h_a".into(),
                        reference: "a".into(),
                        dummies: vec![HOME_DUMMY.into()],
                    },
                    CategoricalEncoding {
                        name: "situation".into(),
                        reference: "open_play".into(),
                        dummies: SITUATION_DUMMIES.iter().map(|s| s.to_string()).collect(),
                    },
                ],
            },
        }
    }

    pub fn xg() -> Self {
        Self::new(FeatureMode::Xg)
    }

    pub fn xga() -> Self {
        Self::new(FeatureMode::Xga)
    }

    /// Column names in matrix order.
    pub fn columns(&self) -> Vec<String> {
        let mut cols = self.numeric_features.clone();
        for c in &self.categorical_encodings {
            cols.extend(c.dummies.iter().cloned());
        }
        cols
    }

    pub fn width(&self) -> usize {
        self.numeric_features.len() + self.categorical_encodings.iter().map(|c| c.dummies.len()).sum::<usize>()
    }

    /// Encodes one action as a feature row.
    pub fn encode(&self, a: &ShotAction) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.width());
        row.extend([a.x, a.y, a.shot_angle]);
        if self.mode == FeatureMode::Xga {
            row.extend([
                a.first_pass_x,
                a.first_pass_y,
                f64::from(a.pass_nb),
                f64::from(a.players_nb),
                a.avg_pass_distance,
                a.pl_performance_index,
                f64::from(u8::from(a.h_a == Venue::Home)),
                f64::from(u8::from(a.situation == Situation::FreeKick)),
                f64::from(u8::from(a.situation == Situation::Penalty)),
                f64::from(u8::from(a.situation == Situation::Other)),
            ]);
        }
        row
    }
}

/// Row-major `rows × cols` design matrix plus the outcome vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMatrix {
    pub spec: FeatureSpec,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub y: Vec<f64>,
    pub row_keys: Vec<String>,
}

impl ActionMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.cols + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, k)).collect()
    }

    pub fn prevalence(&self) -> f64 {
        if self.rows == 0 {
            return 0.0;
        }
        self.y.iter().sum::<f64>() / self.rows as f64
    }

    /// New matrix made of the given rows (repeats allowed), in order.
    pub fn select(&self, rows: &[usize]) -> ActionMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.cols);
        let mut y = Vec::with_capacity(rows.len());
        let mut row_keys = Vec::with_capacity(rows.len());
        for &r in rows {
            values.extend_from_slice(self.row(r));
            y.push(self.y[r]);
            row_keys.push(self.row_keys[r].clone());
        }
        ActionMatrix { spec: self.spec.clone(), rows: rows.len(), cols: self.cols, values, y, row_keys }
    }

    /// Builds a matrix from raw rows, checking finiteness.
    pub fn from_rows(spec: FeatureSpec, rows: Vec<Vec<f64>>, y: Vec<f64>, row_keys: Vec<String>) -> Result<Self> {
        let cols = spec.width();
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(ModelError::SchemaMismatch(format!("row {i} has {} columns, expected {cols}", row.len())));
            }
            if let Some(k) = row.iter().position(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite { row: row_keys.get(i).cloned().unwrap_or_default(), column: spec.columns()[k].clone() });
            }
            values.extend_from_slice(row);
        }
        Ok(ActionMatrix { spec, rows: rows.len(), cols, values, y, row_keys })
    }
}

/// Encodes actions into a design matrix under `spec`.
pub fn build_features<'a>(actions: impl IntoIterator<Item = &'a ShotAction>, spec: &FeatureSpec) -> Result<ActionMatrix> {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut keys = Vec::new();
    for a in actions {
        rows.push(spec.encode(a));
        y.push(if a.outcome { 1.0 } else { 0.0 });
        keys.push(a.action_id.clone());
    }
    ActionMatrix::from_rows(spec.clone(), rows, y, keys)
}
