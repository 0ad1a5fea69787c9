//! Complementary log-log binary regression.
//!
//! Fitted by Fisher scoring on the (optionally ridge-penalised) Bernoulli
//! log-likelihood. With `t = exp(eta)` and `mu = 1 - exp(-t)`:
//!
//! ```text
//! score_i  = (y_i - mu_i) * t_i / mu_i
//! weight_i = t_i^2 * exp(-t_i) / mu_i
//! ```
//!
//! Both forms stay finite for extreme `eta`, unlike the textbook
//! `dmu/deta / (mu (1 - mu))` ratios.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{cloglog, ActionMatrix, FittedModel, LearnerConfig, ModelError, ModelKind, ModelParams, Result, TrainMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlmConfig {
    /// L2 penalty on the slopes (the intercept is never penalised).
    pub ridge: f64,
    pub max_iter: usize,
    /// Convergence when the largest absolute coefficient change drops below this.
    pub tol: f64,
    /// Coefficients beyond this magnitude are treated as separation.
    pub separation_bound: f64,
    /// Initial diagonal jitter when the information matrix cannot be factored.
    pub jitter: f64,
    /// Fail with `SeparationDetected` instead of stopping at the bound and flagging it.
    pub strict_separation: bool,
}

impl Default for GlmConfig {
    fn default() -> Self {
        Self { ridge: 0.0, max_iter: 100, tol: 1e-8, separation_bound: 30.0, jitter: 1e-8, strict_separation: false }
    }
}

struct Design<'a> {
    m: &'a ActionMatrix,
    p: usize,
}

impl Design<'_> {
    fn eta(&self, beta: &[f64], i: usize) -> f64 {
        beta[0] + beta[1..].iter().zip(self.m.row(i)).map(|(b, x)| b * x).sum::<f64>()
    }

    /// Row `i` with a leading 1 for the intercept.
    fn x(&self, i: usize, j: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            self.m.get(i, j - 1)
        }
    }

    fn penalised_loglik(&self, beta: &[f64], ridge: f64) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.m.rows {
            let t = self.eta(beta, i).exp();
            ll += if self.m.y[i] > 0.5 { (-(-t).exp_m1()).ln().max(-745.0) } else { -t };
        }
        ll - 0.5 * ridge * beta[1..].iter().map(|b| b * b).sum::<f64>()
    }

    /// Gradient and expected information at `beta`, penalty included.
    fn score_and_information(&self, beta: &[f64], ridge: f64) -> (DVector<f64>, DMatrix<f64>) {
        let p = self.p;
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for i in 0..self.m.rows {
            let t = self.eta(beta, i).exp();
            let mu = (-(-t).exp_m1()).max(f64::MIN_POSITIVE);
            let s = (self.m.y[i] - mu) * t / mu;
            let w = t * t * (-t).exp() / mu;
            for a in 0..p {
                let xa = self.x(i, a);
                grad[a] += s * xa;
                let wx = w * xa;
                for b in 0..=a {
                    info[(a, b)] += wx * self.x(i, b);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[(b, a)] = info[(a, b)];
            }
        }
        for j in 1..p {
            grad[j] -= ridge * beta[j];
            info[(j, j)] += ridge;
        }
        (grad, info)
    }
}

/// Factors `info`, adding growing diagonal jitter if needed. Returns the
/// factor and the jitter used.
fn factor(info: &DMatrix<f64>, base_jitter: f64) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    if let Some(c) = info.clone().cholesky() {
        return Ok((c, 0.0));
    }
    let mut jitter = base_jitter.max(f64::EPSILON);
    for _ in 0..12 {
        let mut m = info.clone();
        for j in 0..m.nrows() {
            m[(j, j)] += jitter;
        }
        if let Some(c) = m.cholesky() {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(ModelError::SingularHessian)
}

/// Fits `P(goal) = 1 - exp(-exp(b0 + b·x))` by Fisher scoring.
///
/// Deterministic. Stops when the largest coefficient change is below
/// `cfg.tol` or after `cfg.max_iter` iterations (`converged = false`).
/// If a coefficient exceeds `cfg.separation_bound` the fit stops there and
/// the offending feature is recorded in `train_meta.separation`, or
/// `SeparationDetected` is returned when `strict_separation` is set.
pub fn fit_cloglog(m: &ActionMatrix, cfg: &GlmConfig) -> Result<FittedModel> {
    if m.rows <= m.cols {
        return Err(ModelError::Precondition(format!("need more rows ({}) than columns ({})", m.rows, m.cols)));
    }
    let prevalence = m.prevalence();
    if prevalence <= 0.0 || prevalence >= 1.0 {
        return Err(ModelError::Precondition("outcome must contain both classes".into()));
    }
    let design = Design { m, p: m.cols + 1 };
    let names = m.spec.columns();
    let mut beta = vec![0.0; design.p];
    beta[0] = cloglog(prevalence);

    let mut ll = design.penalised_loglik(&beta, cfg.ridge);
    let mut converged = false;
    let mut iterations = 0;
    let mut max_jitter = 0.0f64;
    let mut separation = None;
    while iterations < cfg.max_iter {
        iterations += 1;
        let (grad, info) = design.score_and_information(&beta, cfg.ridge);
        let (chol, jitter) = factor(&info, cfg.jitter)?;
        max_jitter = max_jitter.max(jitter);
        let step = chol.solve(&grad);

        // step-halving keeps the penalised likelihood non-decreasing
        let mut scale = 1.0;
        let mut candidate: Vec<f64>;
        loop {
            candidate = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let cand_ll = design.penalised_loglik(&candidate, cfg.ridge);
            if cand_ll >= ll - 1e-12 * ll.abs().max(1.0) || scale < 1e-10 {
                ll = cand_ll;
                break;
            }
            scale *= 0.5;
        }
        let change = beta.iter().zip(&candidate).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = candidate;

        if let Some(j) = beta.iter().position(|b| b.abs() > cfg.separation_bound) {
            let feature = if j == 0 { "(intercept)".to_string() } else { names[j - 1].clone() };
            if cfg.strict_separation {
                return Err(ModelError::SeparationDetected { feature, value: beta[j] });
            }
            log::warn!("cloglog fit: coefficient for {feature} reached {:.3}; stopping at the bound", beta[j]);
            separation = Some(feature);
            break;
        }
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    let (_, info) = design.score_and_information(&beta, cfg.ridge);
    let (chol, jitter) = factor(&info, cfg.jitter)?;
    max_jitter = max_jitter.max(jitter);
    let cov = chol.inverse();
    let std_errors = (0..design.p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();

    Ok(FittedModel {
        kind: ModelKind::ClogLogGlm,
        spec: m.spec.clone(),
        params: ModelParams::Glm { coefficients: beta, std_errors },
        threshold: prevalence,
        train_meta: TrainMeta {
            learner: LearnerConfig::Cloglog(cfg.clone()),
            seed: None,
            iterations,
            converged,
            rows: m.rows,
            prevalence,
            jitter: max_jitter,
            separation,
            leaves_per_round: Vec::new(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xga::{inverse_cloglog, FeatureSpec};

    fn coefficients(model: &FittedModel) -> &[f64] {
        match &model.params {
            ModelParams::Glm { coefficients, .. } => coefficients,
            _ => unreachable!(),
        }
    }

    /// XG-shaped matrix whose three columns are all zero, so only the intercept matters.
    fn zero_design(y: Vec<f64>) -> ActionMatrix {
        let n = y.len();
        let keys = (0..n).map(|i| i.to_string()).collect();
        ActionMatrix::from_rows(FeatureSpec::xg(), vec![vec![0.0; 3]; n], y, keys).unwrap()
    }

    #[test]
    fn intercept_only_at_prevalence_one_minus_inv_e() {
        // 6321 / 10000 is within 1e-5 of 1 - 1/e; the MLE intercept is cloglog(0.6321)
        let y: Vec<f64> = (0..10_000).map(|i| if i < 6321 { 1.0 } else { 0.0 }).collect();
        let model = fit_cloglog(&zero_design(y), &GlmConfig { jitter: 1e-8, ..GlmConfig::default() }).unwrap();
        let b0 = coefficients(&model)[0];
        assert!((b0 - cloglog(0.6321)).abs() < 1e-9, "{b0}");
        assert!(b0.abs() < 1e-4);
        assert!(model.train_meta.jitter > 0.0, "zero columns force jitter");
        assert!(model.train_meta.converged);
    }

    #[test]
    fn intercept_only_at_ten_percent() {
        let y: Vec<f64> = (0..1000).map(|i| if i % 10 == 0 { 1.0 } else { 0.0 }).collect();
        let model = fit_cloglog(&zero_design(y), &GlmConfig::default()).unwrap();
        let b0 = coefficients(&model)[0];
        assert!((b0 - -2.250_367).abs() < 1e-5, "{b0}");
        assert!((inverse_cloglog(b0) - 0.1).abs() < 1e-10);
    }

    #[test]
    fn score_is_zero_at_optimum() {
        let (ds, _) = crate::dataset::generate_synthetic(&crate::dataset::SynthConfig::default()).unwrap();
        let m = crate::xga::build_features(&ds.actions, &FeatureSpec::xg()).unwrap();
        let model = fit_cloglog(&m, &GlmConfig::default()).unwrap();
        let beta = coefficients(&model);
        // finite-difference check of the log-likelihood gradient
        let design = Design { m: &m, p: 4 };
        for j in 0..4 {
            let h = 1e-6;
            let mut up = beta.to_vec();
            up[j] += h;
            let mut dn = beta.to_vec();
            dn[j] -= h;
            let g = (design.penalised_loglik(&up, 0.0) - design.penalised_loglik(&dn, 0.0)) / (2.0 * h);
            assert!(g.abs() < 1e-3, "coef {j}: gradient {g}");
        }
    }

    #[test]
    fn separation_is_flagged_or_rejected() {
        // column 0 perfectly separates the classes
        let n = 200;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![if i < 20 { 1.0 } else { 0.0 }, (i % 7) as f64, (i % 3) as f64]).collect();
        let y: Vec<f64> = (0..n).map(|i| if i < 20 { 1.0 } else { 0.0 }).collect();
        let keys = (0..n).map(|i| i.to_string()).collect();
        let m = ActionMatrix::from_rows(FeatureSpec::xg(), rows, y, keys).unwrap();
        let model = fit_cloglog(&m, &GlmConfig::default()).unwrap();
        assert!(model.train_meta.separation.is_some());
        assert!(!model.train_meta.converged);
        let strict = GlmConfig { strict_separation: true, ..GlmConfig::default() };
        assert!(matches!(fit_cloglog(&m, &strict), Err(ModelError::SeparationDetected { .. })));
    }

    #[test]
    fn preconditions() {
        let m = zero_design(vec![0.0; 50]);
        assert!(matches!(fit_cloglog(&m, &GlmConfig::default()), Err(ModelError::Precondition(_))));
        let m = zero_design(vec![1.0, 0.0, 1.0]);
        assert!(matches!(fit_cloglog(&m, &GlmConfig::default()), Err(ModelError::Precondition(_))));
    }

    #[test]
    fn ridge_shrinks_slopes() {
        let (ds, _) = crate::dataset::generate_synthetic(&crate::dataset::SynthConfig::default()).unwrap();
        let m = crate::xga::build_features(&ds.actions, &FeatureSpec::xg()).unwrap();
        let free = fit_cloglog(&m, &GlmConfig::default()).unwrap();
        let tight = fit_cloglog(&m, &GlmConfig { ridge: 1e4, ..GlmConfig::default() }).unwrap();
        let norm = |mdl: &FittedModel| coefficients(mdl)[1..].iter().map(|b| b * b).sum::<f64>();
        assert!(norm(&tight) < norm(&free));
    }
}
