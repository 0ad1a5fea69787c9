use serde::{Deserialize, Serialize};

use super::{evaluate_metrics, predict_proba, ActionMatrix, LearnerConfig, MetricReport, ModelError, Result};
use crate::exec::Execution;
use crate::rng;

/// One value per metric, in [`MetricReport::NAMES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    pub precision: f64,
    pub mcc: f64,
    pub auc: f64,
    pub brier: f64,
}

impl MetricSummary {
    fn from_values(v: [f64; 7]) -> Self {
        Self { sensitivity: v[0], specificity: v[1], f1: v[2], precision: v[3], mcc: v[4], auc: v[5], brier: v[6] }
    }

    pub fn values(&self) -> [f64; 7] {
        [self.sensitivity, self.specificity, self.f1, self.precision, self.mcc, self.auc, self.brier]
    }
}

/// Out-of-bag bootstrap evaluation of one learner on one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobReport {
    pub learner: String,
    pub columns: Vec<String>,
    pub reports: Vec<MetricReport>,
    pub mean: MetricSummary,
    /// Bootstrap standard error (sample standard deviation across replications).
    pub se: MetricSummary,
    pub mean_oob_fraction: f64,
    /// Draws rejected because the in-bag or out-of-bag sample lacked a class.
    pub redraws: usize,
}

const MAX_REDRAWS: usize = 50;

struct Replication {
    report: MetricReport,
    oob_fraction: f64,
    redraws: usize,
}

fn replicate(m: &ActionMatrix, learner: &LearnerConfig, seed: u64, b: usize) -> Result<Replication> {
    let mut stream = rng::stream(seed, b as u64);
    for redraws in 0..MAX_REDRAWS {
        let idx = rng::bootstrap_indices(&mut stream, m.rows);
        let mut in_bag = vec![false; m.rows];
        idx.iter().for_each(|&i| in_bag[i] = true);
        let oob: Vec<usize> = (0..m.rows).filter(|&i| !in_bag[i]).collect();
        let train = m.select(&idx);
        let test = m.select(&oob);
        let tau = train.prevalence();
        if tau <= 0.0 || tau >= 1.0 || oob.is_empty() {
            log::debug!("replication {b}: unusable draw, redrawing");
            continue;
        }
        let model = learner
            .fit(&train, Some(rng::sub_seed(seed, b as u64)))
            .map_err(|e| ModelError::Replication { replication: b, source: Box::new(e) })?;
        let p = predict_proba(&model, &test)?;
        let report = evaluate_metrics(&test.y, &p, tau)?;
        return Ok(Replication { report, oob_fraction: oob.len() as f64 / m.rows as f64, redraws });
    }
    Err(ModelError::RetriesExhausted(b))
}

/// Trains on `replications` bootstrap draws and scores each model on its
/// out-of-bag rows at the in-bag prevalence threshold.
pub fn oob_bootstrap_eval(
    m: &ActionMatrix,
    learner: &LearnerConfig,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<OobReport> {
    if replications < 2 {
        return Err(ModelError::Precondition("need at least two replications".into()));
    }
    let runs: Vec<Replication> =
        exec.map_indexed(replications, |b| replicate(m, learner, seed, b)).into_iter().collect::<Result<_>>()?;
    let b = runs.len() as f64;
    let mut mean = [0.0; 7];
    for r in &runs {
        for (acc, v) in mean.iter_mut().zip(r.report.values()) {
            *acc += v / b;
        }
    }
    let mut var = [0.0; 7];
    for r in &runs {
        for ((acc, v), mu) in var.iter_mut().zip(r.report.values()).zip(mean) {
            *acc += (v - mu).powi(2) / (b - 1.0);
        }
    }
    Ok(OobReport {
        learner: learner.name().to_string(),
        columns: m.spec.columns(),
        mean: MetricSummary::from_values(mean),
        se: MetricSummary::from_values(var.map(f64::sqrt)),
        mean_oob_fraction: runs.iter().map(|r| r.oob_fraction).sum::<f64>() / b,
        redraws: runs.iter().map(|r| r.redraws).sum(),
        reports: runs.into_iter().map(|r| r.report).collect(),
    })
}
