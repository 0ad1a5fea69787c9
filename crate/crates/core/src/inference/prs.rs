use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{percentile_ci, InferenceError, ReplicationMatrix, Result};
use crate::dataset::Dataset;
use crate::xga::{FeatureMode, FittedModel};

/// Standard errors at or below this make the PRS undefined.
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrsRow {
    pub team_id: String,
    pub player_id: String,
    pub role: String,
    pub actions: usize,
    pub phi_hat: f64,
    pub phi_boot_mean: f64,
    pub se: f64,
    /// `phi_hat / se`; absent when the standard error is degenerate.
    pub prs: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub degenerate: bool,
    pub replications: usize,
}

/// Sample standard deviation (divisor `n - 1`).
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// One row per supported player, sorted by PRS descending; degenerate rows come last.
pub fn prs_table(
    ds: &Dataset,
    point: &[Option<f64>],
    matrix: &ReplicationMatrix,
    level: f64,
    epsilon: f64,
) -> Result<Vec<PrsRow>> {
    if point.len() != matrix.players.len() {
        return Err(InferenceError::Precondition(format!(
            "{} point estimates for {} players",
            point.len(),
            matrix.players.len()
        )));
    }
    let counts = ds.participation_counts();
    let mut rows = Vec::new();
    for (i, id) in matrix.players.iter().enumerate() {
        let Some(phi_hat) = point[i] else {
            continue;
        };
        let draws = matrix.column(i);
        if draws.len() < 2 {
            return Err(InferenceError::AllReplicationsMissing(id.clone()));
        }
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let se = sample_sd(&draws);
        let degenerate = se.is_nan() || se <= epsilon;
        let (ci_low, ci_high) = percentile_ci(&draws, level)?;
        rows.push(PrsRow {
            team_id: matrix.team_id.clone(),
            player_id: id.clone(),
            role: ds.player(id).map(|p| p.role.code().to_string()).unwrap_or_default(),
            actions: counts.get(id).copied().unwrap_or(0),
            phi_hat,
            phi_boot_mean: mean,
            se,
            prs: (!degenerate).then(|| phi_hat / se),
            ci_low,
            ci_high,
            degenerate,
            replications: draws.len(),
        });
    }
    rows.sort_by(|a, b| match (a.prs, b.prs) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.player_id.cmp(&b.player_id)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.player_id.cmp(&b.player_id),
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub team_id: String,
    pub player_id: String,
    pub goals: u32,
    pub minutes: f64,
    pub shots: usize,
    /// Summed goal probability of the player's own shots.
    pub xg: f64,
    pub g90: f64,
    pub xg90: f64,
    pub diff: f64,
    pub prs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub rows: Vec<EfficiencyRow>,
    /// Players left out because they have no minutes.
    pub excluded: Vec<String>,
}

/// Goals minus expected goals per 90 minutes, with PRS attached where available.
pub fn efficiency_metric(ds: &Dataset, xg_model: &FittedModel, prs: &[PrsRow]) -> Result<EfficiencyReport> {
    if xg_model.spec.mode != FeatureMode::Xg {
        return Err(InferenceError::Precondition("efficiency needs a model fitted in XG mode".into()));
    }
    let mut xg: HashMap<&str, (usize, f64)> = HashMap::new();
    for a in &ds.actions {
        let e = xg.entry(a.shooter_id.as_str()).or_default();
        e.0 += 1;
        e.1 += xg_model.predict_row(&xg_model.spec.encode(a));
    }
    let prs: HashMap<&str, Option<f64>> = prs.iter().map(|r| (r.player_id.as_str(), r.prs)).collect();
    let mut report = EfficiencyReport { rows: Vec::new(), excluded: Vec::new() };
    for p in &ds.players {
        if p.minutes.is_nan() || p.minutes <= 0.0 {
            log::warn!("player {} has no minutes; left out of the efficiency table", p.player_id);
            report.excluded.push(p.player_id.clone());
            continue;
        }
        let (shots, sum) = xg.get(p.player_id.as_str()).copied().unwrap_or((0, 0.0));
        let g90 = p.goals as f64 * 90.0 / p.minutes;
        let xg90 = sum * 90.0 / p.minutes;
        report.rows.push(EfficiencyRow {
            team_id: p.team_id.clone(),
            player_id: p.player_id.clone(),
            goals: p.goals,
            minutes: p.minutes,
            shots,
            xg: sum,
            g90,
            xg90,
            diff: g90 - xg90,
            prs: prs.get(p.player_id.as_str()).copied().flatten(),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    TopRight,
    TopLeft,
    BottomRight,
    BottomLeft,
}

impl Quadrant {
    pub fn code(self) -> &'static str {
        match self {
            Quadrant::TopRight => "top_right",
            Quadrant::TopLeft => "top_left",
            Quadrant::BottomRight => "bottom_right",
            Quadrant::BottomLeft => "bottom_left",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub team_id: String,
    pub player_id: String,
    pub prs: f64,
    pub g90: f64,
    pub xg90: f64,
    pub diff: f64,
    pub quadrant: Quadrant,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// PRS against finishing efficiency. Right of centre means PRS at or above the team median;
/// top means more goals than expected.
pub fn scatter_points(rows: &[EfficiencyRow]) -> Vec<ScatterPoint> {
    let mut by_team: HashMap<&str, Vec<f64>> = HashMap::new();
    for r in rows {
        if let Some(p) = r.prs {
            by_team.entry(r.team_id.as_str()).or_default().push(p);
        }
    }
    let medians: HashMap<&str, f64> = by_team.into_iter().map(|(t, v)| (t, median(v))).collect();
    rows.iter()
        .filter_map(|r| {
            let prs = r.prs?;
            let right = prs >= medians[r.team_id.as_str()];
            let top = r.diff > 0.0;
            let quadrant = match (top, right) {
                (true, true) => Quadrant::TopRight,
                (true, false) => Quadrant::TopLeft,
                (false, true) => Quadrant::BottomRight,
                (false, false) => Quadrant::BottomLeft,
            };
            Some(ScatterPoint {
                team_id: r.team_id.clone(),
                player_id: r.player_id.clone(),
                prs,
                g90: r.g90,
                xg90: r.xg90,
                diff: r.diff,
                quadrant,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalition::test_support::{abc, player};
    use crate::dataset::generate_synthetic;
    use crate::dataset::SynthConfig;
    use crate::xga::{build_features, fit_cloglog, FeatureSpec, GlmConfig};
    use proptest::prelude::*;

    fn matrix(cols: &[&[f64]]) -> ReplicationMatrix {
        let b = cols[0].len();
        ReplicationMatrix {
            team_id: "t".into(),
            players: ["A", "B", "C"][..cols.len()].iter().map(|s| s.to_string()).collect(),
            values: (0..b).map(|r| cols.iter().map(|c| Some(c[r])).collect()).collect(),
            missing: vec![false; b],
        }
    }

    #[test]
    fn three_replications() {
        let ds = abc(&[&["A"]]);
        let rows = prs_table(&ds, &[Some(3.0)], &matrix(&[&[1.0, 2.0, 3.0]]), 0.9, DEFAULT_EPSILON).unwrap();
        assert_eq!(rows[0].phi_boot_mean, 2.0);
        assert_eq!(rows[0].se, 1.0);
        assert_eq!(rows[0].prs, Some(3.0));
        assert_eq!(rows[0].actions, 1);
    }

    #[test]
    fn ratio_and_ordering() {
        let ds = abc(&[&["A", "B"]]);
        let m = matrix(&[&[0.0, 3.0], &[1.0, 1.0], &[0.0, 1.0]]);
        // se of {0, 3} is 3/sqrt(2)
        let rows = prs_table(&ds, &[Some(3.0), Some(1.0), Some(5.0)], &m, 0.9, DEFAULT_EPSILON).unwrap();
        let ids: Vec<_> = rows.iter().map(|r| r.player_id.as_str()).collect();
        assert_eq!(ids, vec!["C", "A", "B"]);
        assert!((rows[1].prs.unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(rows[2].degenerate && rows[2].prs.is_none());
        assert_eq!(rows[2].se, 0.0);
    }

    #[test]
    fn phi_over_se() {
        let se = sample_sd(&[0.0, 1.5 * 2.0f64.sqrt()]);
        assert!((se - 1.5).abs() < 1e-15);
        let ds = abc(&[&["A"]]);
        let rows = prs_table(&ds, &[Some(3.0)], &matrix(&[&[0.0, 1.5 * 2.0f64.sqrt()]]), 0.9, DEFAULT_EPSILON).unwrap();
        assert!((rows[0].prs.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_players_are_skipped_and_missing_rows_ignored() {
        let ds = abc(&[&["A"]]);
        let mut m = matrix(&[&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]]);
        m.values[1] = vec![None, None];
        m.missing[1] = true;
        let rows = prs_table(&ds, &[Some(1.0), None], &m, 0.9, DEFAULT_EPSILON).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].replications, 2);
        m.values[0] = vec![None, None];
        assert!(matches!(
            prs_table(&ds, &[Some(1.0), None], &m, 0.9, DEFAULT_EPSILON),
            Err(InferenceError::AllReplicationsMissing(_))
        ));
    }

    fn textbook_sd(v: &[f64]) -> f64 {
        // two-pass with Welford update as an independent route
        let (mut mean, mut m2) = (0.0, 0.0);
        for (k, x) in v.iter().enumerate() {
            let d = x - mean;
            mean += d / (k + 1) as f64;
            m2 += d * (x - mean);
        }
        (m2 / (v.len() - 1) as f64).sqrt()
    }

    proptest! {
        #[test]
        fn sd_agrees_with_welford(v in prop::collection::vec(-100.0f64..100.0, 2..300)) {
            prop_assert!((sample_sd(&v) - textbook_sd(&v)).abs() < 1e-12);
        }
    }

    fn xg_model(ds: &Dataset) -> FittedModel {
        fit_cloglog(&build_features(&ds.actions, &FeatureSpec::xg()).unwrap(), &GlmConfig::default()).unwrap()
    }

    #[test]
    fn per_ninety_arithmetic() {
        let (mut ds, _) = generate_synthetic(&SynthConfig { actions_per_team: 200, ..SynthConfig::default() }).unwrap();
        let model = xg_model(&ds);
        ds.players[3].goals = 9;
        ds.players[3].minutes = 900.0;
        let shooterless = ds.players.iter().position(|p| !ds.actions.iter().any(|a| a.shooter_id == p.player_id));
        let report = efficiency_metric(&ds, &model, &[]).unwrap();
        let r = report.rows.iter().find(|r| r.player_id == ds.players[3].player_id).unwrap();
        assert!((r.g90 - 0.9).abs() < 1e-12);
        assert!((r.xg90 - r.xg / 10.0).abs() < 1e-12);
        assert!((r.diff - (0.9 - r.xg90)).abs() < 1e-12);
        if let Some(k) = shooterless {
            let r = report.rows.iter().find(|r| r.player_id == ds.players[k].player_id).unwrap();
            assert_eq!((r.xg90, r.diff), (0.0, r.g90));
        }
        // every shot belongs to exactly one rostered shooter
        let total: f64 = report.rows.iter().map(|r| r.xg90 * r.minutes / 90.0).sum();
        let direct: f64 = ds.actions.iter().map(|a| model.predict_row(&model.spec.encode(a))).sum();
        assert!((total - direct).abs() < 1e-9);
    }

    #[test]
    fn zero_minutes_excluded() {
        let mut ds = abc(&[&["A", "B"], &["C"]]);
        ds.players[1].minutes = 0.0;
        ds.players.push(player("D", 70.0));
        let mut data = ds.clone();
        for (i, a) in data.actions.iter_mut().enumerate() {
            a.outcome = i == 0;
        }
        let model = fit_cloglog(
            &build_features(&[data.actions.clone(), data.actions.clone()].concat(), &FeatureSpec::xg()).unwrap(),
            &GlmConfig { ridge: 1.0, ..GlmConfig::default() },
        )
        .unwrap();
        let report = efficiency_metric(&ds, &model, &[]).unwrap();
        assert_eq!(report.excluded, vec!["B".to_string()]);
        assert_eq!(report.rows.len(), 3);
    }

    #[test]
    fn quadrants_use_team_median() {
        let row = |id: &str, prs: f64, diff: f64| EfficiencyRow {
            team_id: "t".into(),
            player_id: id.into(),
            goals: 0,
            minutes: 90.0,
            shots: 0,
            xg: 0.0,
            g90: 0.0,
            xg90: 0.0,
            diff,
            prs: Some(prs),
        };
        let rows = vec![row("a", 1.0, 0.2), row("b", 2.0, -0.1), row("c", 3.0, 0.0), row("d", 4.0, 0.5)];
        let q: Vec<_> = scatter_points(&rows).into_iter().map(|p| p.quadrant).collect();
        assert_eq!(q, vec![Quadrant::TopLeft, Quadrant::BottomLeft, Quadrant::BottomRight, Quadrant::TopRight]);
    }
}
