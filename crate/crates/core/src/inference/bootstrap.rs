use std::borrow::Cow;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{InferenceError, Result};
use crate::coalition::{
    compatible_unobserved, estimate_worth, extract_coalitions, player_support, synth_coalition_features, Coalition,
    CoalitionError, ObservedAggregation, ObservedCoalitions, Roster, TeamStats, WorthTable,
};
use crate::dataset::Dataset;
use crate::exec::Execution;
use crate::rng;
use crate::shapley::RestrictedPlan;
use crate::xga::{build_features, ActionMatrix, FeatureMode, FeatureSpec, FittedModel};

/// Worth given to an observed coalition none of whose actions were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsentWorth {
    /// Empty sum.
    #[default]
    Zero,
    /// One prediction on the coalition's synthetic row, as for unobserved coalitions.
    Predict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub base_seed: u64,
    pub refit_model: bool,
    /// Extra draws allowed per replication when a draw is single-class or the refit fails.
    pub retry_limit: usize,
    pub absent_worth: AbsentWorth,
    /// Percentile interval level.
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replications: 1000, base_seed: 0, refit_model: true, retry_limit: 5, absent_worth: AbsentWorth::Zero, level: 0.9 }
    }
}

/// Everything about one team's game that stays fixed across replications.
#[derive(Debug, Clone)]
pub struct TeamGame {
    pub roster: Roster,
    pub observed: ObservedCoalitions,
    pub unobserved: Vec<Coalition>,
    pub plan: RestrictedPlan,
    pub stats: TeamStats,
    pub aggregation: ObservedAggregation,
    /// Multiplier applied to every worth; 1 outside of invariance checks.
    pub worth_scale: f64,
    /// Observed coalitions first, then unobserved ones.
    slots: Vec<Coalition>,
    slot_of: HashMap<Coalition, usize>,
    synthetic: Vec<Vec<f64>>,
}

impl TeamGame {
    /// Coalitions, supports and synthetic rows for `team_id`, with `n` defaulting to the roster size.
    pub fn build(
        ds: &Dataset,
        team_id: &str,
        spec: &FeatureSpec,
        n_override: Option<usize>,
        aggregation: ObservedAggregation,
    ) -> Result<Self> {
        if spec.mode != FeatureMode::Xga {
            return Err(InferenceError::Precondition("worth requires the XGA feature set".into()));
        }
        let (roster, observed) = extract_coalitions(ds, team_id)?;
        if observed.is_empty() {
            return Err(InferenceError::Precondition(format!("team `{team_id}` has no actions")));
        }
        let supports: Vec<_> = (0..roster.len())
            .map(|i| match player_support(&observed, i) {
                Ok(s) => Ok(Some(s)),
                Err(CoalitionError::EmptySupport(_)) => {
                    log::info!("{}: player {} has no support and is reported as missing", team_id, roster.ids[i]);
                    Ok(None)
                }
                Err(e) => Err(e),
            })
            .collect::<std::result::Result<_, _>>()?;
        let n = n_override.unwrap_or(roster.len());
        let plan = RestrictedPlan::new(n, &supports)?;
        let unobserved: Vec<Coalition> = compatible_unobserved(&observed).into_iter().collect();
        let stats = TeamStats::from_dataset(ds, team_id);
        let slots: Vec<Coalition> = observed.keys().copied().chain(unobserved.iter().copied()).collect();
        let slot_of = slots.iter().enumerate().map(|(k, c)| (*c, k)).collect();
        let synthetic = slots.iter().map(|&c| spec.encode(&synth_coalition_features(c, &stats, &roster))).collect();
        Ok(Self { roster, observed, unobserved, plan, stats, aggregation, worth_scale: 1.0, slots, slot_of, synthetic })
    }

    pub fn with_worth_scale(mut self, k: f64) -> Self {
        self.worth_scale = k;
        self
    }

    pub fn n(&self) -> usize {
        self.plan.n
    }

    /// Worth table and restricted values on the original data.
    pub fn point_estimate(&self, ds: &Dataset, model: &FittedModel) -> Result<(WorthTable, Vec<Option<f64>>)> {
        let unobserved = self.unobserved.iter().copied().collect();
        let table = estimate_worth(ds, &self.roster, &self.observed, &unobserved, model, &self.stats, self.aggregation)?
            .scaled(self.worth_scale);
        let phi = self.plan.evaluate(|c| table.worth(c))?;
        Ok((table, phi))
    }

    /// Restricted values for slot-ordered worths.
    fn evaluate(&self, worths: &[f64]) -> Result<Vec<Option<f64>>> {
        Ok(self.plan.evaluate(|c| if c.is_empty() { Some(0.0) } else { self.slot_of.get(&c).map(|&k| worths[k]) })?)
    }

    fn replication_worths(&self, model: &FittedModel, full: &ActionMatrix, counts: &[u32], absent: AbsentWorth) -> Vec<f64> {
        let mut worths = Vec::with_capacity(self.slots.len());
        for (c, actions) in &self.observed {
            let mut total = 0.0;
            let mut drawn = 0usize;
            for &a in actions {
                if counts[a] > 0 {
                    total += counts[a] as f64 * model.predict_row(full.row(a));
                    drawn += counts[a] as usize;
                }
            }
            let w = if drawn == 0 {
                match absent {
                    AbsentWorth::Zero => 0.0,
                    AbsentWorth::Predict => model.predict_row(&self.synthetic[self.slot_of[c]]),
                }
            } else {
                self.aggregation.combine(total, drawn)
            };
            worths.push(w * self.worth_scale);
        }
        for k in self.observed.len()..self.slots.len() {
            worths.push(model.predict_row(&self.synthetic[k]) * self.worth_scale);
        }
        worths
    }
}

/// Bootstrap draws of every player's restricted value; `values[b][i]` is `None` when
/// the player has no support or replication `b` is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMatrix {
    pub team_id: String,
    pub players: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub missing: Vec<bool>,
}

impl ReplicationMatrix {
    /// Usable draws for player `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.iter().filter_map(|row| row[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapMeta {
    pub replications: usize,
    pub base_seed: u64,
    pub refit_model: bool,
    /// Replications that exhausted their retries.
    pub missing: usize,
    pub retries: usize,
    /// Share of distinct actions in each draw.
    pub distinct_fraction: Vec<f64>,
}

impl BootstrapMeta {
    pub fn mean_distinct_fraction(&self) -> f64 {
        if self.distinct_fraction.is_empty() {
            return 0.0;
        }
        self.distinct_fraction.iter().sum::<f64>() / self.distinct_fraction.len() as f64
    }
}

struct Replication {
    phi: Option<Vec<Vec<Option<f64>>>>,
    distinct: f64,
    retries: usize,
}

/// Resamples league-wide actions, optionally refits the model and re-evaluates every team's
/// restricted values on its fixed supports.
///
/// Replication `b` draws from its own stream keyed by `(base_seed, b)`, so the result does not
/// depend on the execution schedule.
pub fn bootstrap_phi(
    ds: &Dataset,
    games: &[TeamGame],
    model: &FittedModel,
    cfg: &BootstrapConfig,
    exec: Execution,
) -> Result<(Vec<ReplicationMatrix>, BootstrapMeta)> {
    if cfg.replications < 2 {
        return Err(InferenceError::Precondition("bootstrap needs at least two replications".into()));
    }
    if model.spec.mode != FeatureMode::Xga {
        return Err(InferenceError::Precondition("worth requires a model fitted in XGA mode".into()));
    }
    let full = build_features(&ds.actions, &model.spec)?;
    let h = full.rows;
    if h == 0 {
        return Err(InferenceError::Precondition("no actions to resample".into()));
    }

    let run = |b: usize| -> Result<Replication> {
        let mut stream = rng::stream(cfg.base_seed, b as u64);
        let replication_seed = rng::sub_seed(cfg.base_seed, b as u64);
        for attempt in 0..=cfg.retry_limit {
            let idx = rng::bootstrap_indices(&mut stream, h);
            let fitted = if cfg.refit_model {
                let draw = full.select(&idx);
                let prev = draw.prevalence();
                if prev <= 0.0 || prev >= 1.0 {
                    log::debug!("replication {b}: single-class draw");
                    continue;
                }
                match model.train_meta.learner.fit(&draw, Some(rng::sub_seed(replication_seed, attempt as u64))) {
                    Ok(m) => Cow::Owned(m),
                    Err(e) => {
                        log::debug!("replication {b}: refit failed: {e}");
                        continue;
                    }
                }
            } else {
                Cow::Borrowed(model)
            };
            let mut counts = vec![0u32; h];
            for &a in &idx {
                counts[a] += 1;
            }
            let distinct = counts.iter().filter(|&&c| c > 0).count() as f64 / h as f64;
            let phi = games
                .iter()
                .map(|g| g.evaluate(&g.replication_worths(&fitted, &full, &counts, cfg.absent_worth)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Replication { phi: Some(phi), distinct, retries: attempt });
        }
        log::warn!("replication {b} missing after {} attempts", cfg.retry_limit + 1);
        Ok(Replication { phi: None, distinct: f64::NAN, retries: cfg.retry_limit + 1 })
    };
    let reps: Vec<Replication> = exec.map_indexed(cfg.replications, run).into_iter().collect::<Result<_>>()?;

    let mut matrices: Vec<ReplicationMatrix> = games
        .iter()
        .map(|g| ReplicationMatrix {
            team_id: g.roster.team_id.clone(),
            players: g.roster.ids.clone(),
            values: Vec::with_capacity(cfg.replications),
            missing: Vec::with_capacity(cfg.replications),
        })
        .collect();
    let mut meta = BootstrapMeta {
        replications: cfg.replications,
        base_seed: cfg.base_seed,
        refit_model: cfg.refit_model,
        missing: 0,
        retries: 0,
        distinct_fraction: Vec::new(),
    };
    for rep in reps {
        meta.retries += rep.retries;
        match rep.phi {
            Some(phi) => {
                meta.distinct_fraction.push(rep.distinct);
                for (m, row) in matrices.iter_mut().zip(phi) {
                    m.values.push(row);
                    m.missing.push(false);
                }
            }
            None => {
                meta.missing += 1;
                for m in matrices.iter_mut() {
                    m.values.push(vec![None; m.players.len()]);
                    m.missing.push(true);
                }
            }
        }
    }
    Ok((matrices, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{filter_dataset, generate_synthetic, SynthConfig};
    use crate::xga::{fit_cloglog, GlmConfig};

    fn fixture(actions: usize) -> (Dataset, Vec<TeamGame>, FittedModel) {
        let (ds, _) = generate_synthetic(&SynthConfig { actions_per_team: actions, ..SynthConfig::default() }).unwrap();
        let ds = filter_dataset(&ds, 10).unwrap();
        let spec = FeatureSpec::xga();
        let model = fit_cloglog(&build_features(&ds.actions, &spec).unwrap(), &GlmConfig::default()).unwrap();
        let games = ds
            .team_ids()
            .iter()
            .map(|t| TeamGame::build(&ds, t, &spec, None, ObservedAggregation::Sum).unwrap())
            .collect();
        (ds, games, model)
    }

    #[test]
    fn schedule_independent_and_repeatable() {
        let (ds, games, model) = fixture(250);
        let cfg = BootstrapConfig { replications: 12, base_seed: 99, ..BootstrapConfig::default() };
        let (a, _) = bootstrap_phi(&ds, &games, &model, &cfg, Execution::Sequential).unwrap();
        let (b, _) = bootstrap_phi(&ds, &games, &model, &cfg, Execution::Parallel).unwrap();
        let (c, _) = bootstrap_phi(&ds, &games, &model, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn prefix_of_longer_run_matches() {
        let (ds, games, model) = fixture(200);
        let short = BootstrapConfig { replications: 5, base_seed: 3, refit_model: false, ..BootstrapConfig::default() };
        let long = BootstrapConfig { replications: 9, ..short.clone() };
        let (a, _) = bootstrap_phi(&ds, &games, &model, &short, Execution::Parallel).unwrap();
        let (b, _) = bootstrap_phi(&ds, &games, &model, &long, Execution::Parallel).unwrap();
        assert_eq!(a[0].values[..], b[0].values[..5]);
    }

    #[test]
    fn distinct_share_follows_sampling_law() {
        let (ds, games, model) = fixture(600);
        let cfg = BootstrapConfig { replications: 200, base_seed: 1, refit_model: false, ..BootstrapConfig::default() };
        let (_, meta) = bootstrap_phi(&ds, &games, &model, &cfg, Execution::Parallel).unwrap();
        let f = meta.mean_distinct_fraction();
        assert!((f - 0.632).abs() < 0.02, "{f}");
        assert_eq!(meta.missing, 0);
    }

    #[test]
    fn point_estimate_matches_full_draw_worths() {
        let (ds, games, model) = fixture(200);
        let full = build_features(&ds.actions, &model.spec).unwrap();
        let counts = vec![1u32; full.rows];
        for g in &games {
            let (_, phi) = g.point_estimate(&ds, &model).unwrap();
            let again = g.evaluate(&g.replication_worths(&model, &full, &counts, AbsentWorth::Zero)).unwrap();
            for (x, y) in phi.iter().zip(&again) {
                match (x, y) {
                    (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12),
                    (None, None) => {}
                    _ => panic!("presence differs"),
                }
            }
        }
    }

    #[test]
    fn guards() {
        let (ds, games, model) = fixture(150);
        let cfg = BootstrapConfig { replications: 1, ..BootstrapConfig::default() };
        assert!(bootstrap_phi(&ds, &games, &model, &cfg, Execution::Sequential).is_err());
        assert!(TeamGame::build(&ds, "t0", &FeatureSpec::xg(), None, ObservedAggregation::Sum).is_err());
    }
}
