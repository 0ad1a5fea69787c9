use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

/// Classification metrics at a threshold plus threshold-free AUC and Brier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    pub precision: f64,
    pub mcc: f64,
    pub auc: f64,
    pub brier: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    /// A confusion-ratio denominator was zero and the metric was set to 0.
    pub degenerate_confusion: bool,
    /// Only one class present, so AUC is undefined and reported as 0.5.
    pub degenerate_auc: bool,
}

impl MetricReport {
    pub const NAMES: [&'static str; 7] = ["sensitivity", "specificity", "f1", "precision", "mcc", "auc", "brier"];

    pub fn values(&self) -> [f64; 7] {
        [self.sensitivity, self.specificity, self.f1, self.precision, self.mcc, self.auc, self.brier]
    }
}

fn ratio(num: f64, den: f64, degenerate: &mut bool) -> f64 {
    if den == 0.0 {
        *degenerate = true;
        0.0
    } else {
        num / den
    }
}

/// Mann-Whitney AUC with half credit for ties. Returns `(auc, degenerate)`.
pub fn auc(y: &[f64], p: &[f64]) -> (f64, bool) {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let n_pos = y.iter().filter(|&&v| v > 0.5).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return (0.5, true);
    }
    // midranks over tie groups
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && p[idx[j + 1]] == p[idx[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if y[k] > 0.5 {
                rank_sum += midrank;
            }
        }
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    ((rank_sum - np * (np + 1.0) / 2.0) / (np * nn), false)
}

/// Scores probabilities `p` against binary `y_true` at threshold `tau` (`p >= tau` is positive).
pub fn evaluate_metrics(y_true: &[f64], p: &[f64], tau: f64) -> Result<MetricReport> {
    if y_true.len() != p.len() {
        return Err(ModelError::LengthMismatch(y_true.len(), p.len()));
    }
    if y_true.is_empty() {
        return Err(ModelError::Precondition("empty evaluation set".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    let mut brier = 0.0;
    for (&y, &q) in y_true.iter().zip(p) {
        let actual = y > 0.5;
        match (q >= tau, actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
        brier += (y - q) * (y - q);
    }
    brier /= p.len() as f64;
    let (tpf, fpf, tnf, fnf) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
    let mut degenerate = false;
    let sensitivity = ratio(tpf, tpf + fnf, &mut degenerate);
    let specificity = ratio(tnf, tnf + fpf, &mut degenerate);
    let precision = ratio(tpf, tpf + fpf, &mut degenerate);
    let f1 = ratio(2.0 * precision * sensitivity, precision + sensitivity, &mut degenerate);
    let mcc_den = ((tpf + fpf) * (tpf + fnf) * (tnf + fpf) * (tnf + fnf)).sqrt();
    let mcc = ratio(tpf * tnf - fpf * fnf, mcc_den, &mut degenerate).clamp(-1.0, 1.0);
    let (auc, degenerate_auc) = auc(y_true, p);
    Ok(MetricReport {
        sensitivity,
        specificity,
        f1,
        precision,
        mcc,
        auc,
        brier,
        tp,
        fp,
        tn,
        fn_,
        degenerate_confusion: degenerate,
        degenerate_auc,
    })
}
