//! Goal-probability models over action features.
//!
//! Two learners share one [`FittedModel`] type: a complementary log-log
//! binary regression fitted by Fisher scoring, and a small gradient-boosted
//! tree ensemble with logistic loss. Both can be fitted on the shot-only
//! (xG) or the full action (xGA) feature set.

mod features;
mod gbt;
mod glm;
mod importance;
mod metrics;
mod oob;
mod vif;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{
    build_features, ActionMatrix, CategoricalEncoding, FeatureMode, FeatureSpec, ACTION_NUMERIC_FEATURES, HOME_DUMMY,
    SHOT_FEATURES, SITUATION_DUMMIES,
};
pub use gbt::{fit_gbt, normalized_gain, GbtParams, Tree, TreeNode};
pub use glm::{fit_cloglog, GlmConfig};
pub use importance::{feature_importance, FeatureImportance};
pub use metrics::{auc, evaluate_metrics, MetricReport};
pub use oob::{oob_bootstrap_eval, MetricSummary, OobReport};
pub use vif::{compute_vif, compute_vif_skipping_constant, VifReport};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("non-finite value in row `{row}`, column `{column}`")]
    NonFinite { row: String, column: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("separation detected: |{feature}| coefficient reached {value}")]
    SeparationDetected { feature: String, value: f64 },
    #[error("hessian is singular even after jitter")]
    SingularHessian,
    #[error("column `{0}` is constant")]
    ConstantColumn(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("replication {replication}: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: Box<ModelError>,
    },
    #[error("replication {0}: no usable bootstrap draw within the retry limit")]
    RetriesExhausted(usize),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Smallest/largest probability a model will emit.
pub const PROB_FLOOR: f64 = 1e-15;

/// `1 - exp(-exp(eta))`, the inverse complementary log-log link.
pub fn inverse_cloglog(eta: f64) -> f64 {
    -(-eta.exp()).exp_m1()
}

/// `log(-log(1 - mu))`.
pub fn cloglog(mu: f64) -> f64 {
    (-(-mu).ln_1p()).ln()
}

pub fn logistic(score: f64) -> f64 {
    1.0 / (1.0 + (-score).exp())
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    ClogLogGlm,
    BoostedTrees,
}

/// How to fit a learner; stored with the model so replications can refit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerConfig {
    Cloglog(GlmConfig),
    Gbt(GbtParams),
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::Cloglog(GlmConfig::default())
    }
}

impl LearnerConfig {
    /// Fits on `m`; `seed` overrides the tree learner's seed and is ignored by the GLM.
    pub fn fit(&self, m: &ActionMatrix, seed: Option<u64>) -> Result<FittedModel> {
        match self {
            LearnerConfig::Cloglog(cfg) => fit_cloglog(m, cfg),
            LearnerConfig::Gbt(p) => {
                let mut p = p.clone();
                if let Some(s) = seed {
                    p.seed = s;
                }
                fit_gbt(m, &p)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerConfig::Cloglog(_) => "cloglog",
            LearnerConfig::Gbt(_) => "gbt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Glm {
        /// Intercept first, then one slope per column.
        coefficients: Vec<f64>,
        /// Standard errors from the inverse expected information.
        std_errors: Vec<f64>,
    },
    Trees {
        base_score: f64,
        trees: Vec<Tree>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub learner: LearnerConfig,
    pub seed: Option<u64>,
    pub iterations: usize,
    pub converged: bool,
    pub rows: usize,
    pub prevalence: f64,
    /// Diagonal jitter that had to be added to factor the Hessian (0 if none).
    pub jitter: f64,
    /// Feature whose coefficient hit the separation bound, if any.
    pub separation: Option<String>,
    /// Leaves grown in each boosting round; fewer than `2^max_depth` means the tree truncated.
    pub leaves_per_round: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub kind: ModelKind,
    pub spec: FeatureSpec,
    pub params: ModelParams,
    /// Classification threshold; the training prevalence unless overridden.
    pub threshold: f64,
    pub train_meta: TrainMeta,
}

impl FittedModel {
    /// Linear predictor (GLM) or summed raw score (trees) for one row.
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Glm { coefficients, .. } => {
                coefficients[0] + coefficients[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
            }
            ModelParams::Trees { base_score, trees } => base_score + trees.iter().map(|t| t.predict(row)).sum::<f64>(),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let s = self.raw_score(row);
        clamp_prob(match self.kind {
            ModelKind::ClogLogGlm => inverse_cloglog(s),
            ModelKind::BoostedTrees => logistic(s),
        })
    }

    pub fn check_schema(&self, m: &ActionMatrix) -> Result<()> {
        if m.spec.columns() != self.spec.columns() {
            return Err(ModelError::SchemaMismatch(format!(
                "model expects {:?}, matrix has {:?}",
                self.spec.columns(),
                m.spec.columns()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Goal probabilities for every row of `m`.
pub fn predict_proba(model: &FittedModel, m: &ActionMatrix) -> Result<Vec<f64>> {
    model.check_schema(m)?;
    Ok((0..m.rows).map(|i| model.predict_row(m.row(i))).collect())
}

/// Labels `p >= tau` as positive.
pub fn classify(p: &[f64], tau: f64) -> Vec<bool> {
    p.iter().map(|&v| v >= tau).collect()
}
