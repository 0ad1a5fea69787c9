use serde::{Deserialize, Serialize};

use super::gbt::normalized_gain;
use super::{ActionMatrix, FittedModel, ModelError, ModelParams, Result};
use crate::exec::Execution;
use crate::inference::percentile_ci;
use crate::rng;

/// Per-feature importance with bootstrap percentile bounds.
///
/// Trees report normalised total gain; the GLM reports raw slopes, with
/// slopes scaled by the column standard deviation alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub measure: String,
    pub columns: Vec<String>,
    pub estimate: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub standardized: Option<Vec<f64>>,
    pub standardized_low: Option<Vec<f64>>,
    pub standardized_high: Option<Vec<f64>>,
    pub level: f64,
    pub replications: usize,
}

const MAX_REDRAWS: usize = 50;
pub const MIN_REPLICATIONS: usize = 100;

fn column_sd(m: &ActionMatrix) -> Vec<f64> {
    (0..m.cols)
        .map(|k| {
            let col = m.column(k);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() as f64 - 1.0)).sqrt()
        })
        .collect()
}

fn importance_vector(model: &FittedModel) -> Vec<f64> {
    match &model.params {
        ModelParams::Glm { coefficients, .. } => coefficients[1..].to_vec(),
        ModelParams::Trees { .. } => normalized_gain(model),
    }
}

/// Refits a model with rows resampled with replacement.
///
/// Draws lacking one of the two classes are redrawn from the same stream.
pub(crate) fn refit_on_resample(model: &FittedModel, m: &ActionMatrix, seed: u64, b: usize) -> Result<(FittedModel, Vec<usize>)> {
    let mut stream = rng::stream(seed, b as u64);
    for _ in 0..MAX_REDRAWS {
        let idx = rng::bootstrap_indices(&mut stream, m.rows);
        let draw = m.select(&idx);
        let prev = draw.prevalence();
        if prev <= 0.0 || prev >= 1.0 {
            log::debug!("replication {b}: single-class draw, redrawing");
            continue;
        }
        let fitted = model
            .train_meta
            .learner
            .fit(&draw, Some(rng::sub_seed(seed, b as u64)))
            .map_err(|e| ModelError::Replication { replication: b, source: Box::new(e) })?;
        return Ok((fitted, idx));
    }
    Err(ModelError::RetriesExhausted(b))
}

/// Bootstrap intervals (`level`, e.g. 0.90) for the model's feature importances.
pub fn feature_importance(
    model: &FittedModel,
    m: &ActionMatrix,
    replications: usize,
    level: f64,
    seed: u64,
    exec: Execution,
) -> Result<FeatureImportance> {
    model.check_schema(m)?;
    if replications < MIN_REPLICATIONS {
        return Err(ModelError::Precondition(format!("need at least {MIN_REPLICATIONS} replications")));
    }
    let sd = column_sd(m);
    let runs = exec.map_indexed(replications, |b| refit_on_resample(model, m, seed, b).map(|(f, _)| importance_vector(&f)));
    let draws: Vec<Vec<f64>> = runs.into_iter().collect::<Result<_>>()?;

    let k = m.cols;
    let bounds = |scale: &dyn Fn(usize) -> f64| -> (Vec<f64>, Vec<f64>) {
        (0..k)
            .map(|j| {
                let col: Vec<f64> = draws.iter().map(|d| d[j] * scale(j)).collect();
                percentile_ci(&col, level).expect("at least two finite replications")
            })
            .unzip()
    };
    let estimate = importance_vector(model);
    let (low, high) = bounds(&|_| 1.0);
    let is_glm = matches!(model.params, ModelParams::Glm { .. });
    let (standardized, standardized_low, standardized_high) = if is_glm {
        let (lo, hi) = bounds(&|j| sd[j]);
        (Some(estimate.iter().zip(&sd).map(|(b, s)| b * s).collect()), Some(lo), Some(hi))
    } else {
        (None, None, None)
    };
    Ok(FeatureImportance {
        measure: if is_glm { "coefficient".into() } else { "normalized_gain".into() },
        columns: m.spec.columns(),
        estimate,
        low,
        high,
        standardized,
        standardized_low,
        standardized_high,
        level,
        replications,
    })
}
