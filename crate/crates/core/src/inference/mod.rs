//! Bootstrap uncertainty for restricted Shapley values and the PRS statistic.

mod bootstrap;
mod prs;

use thiserror::Error;

pub use bootstrap::{bootstrap_phi, AbsentWorth, BootstrapConfig, BootstrapMeta, ReplicationMatrix, TeamGame};
pub use prs::{
    efficiency_metric, prs_table, sample_sd, scatter_points, EfficiencyReport, EfficiencyRow, PrsRow, Quadrant,
    ScatterPoint, DEFAULT_EPSILON,
};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("{0}")]
    Precondition(String),
    #[error("player `{0}` has fewer than two usable replications")]
    AllReplicationsMissing(String),
    #[error(transparent)]
    Coalition(#[from] crate::coalition::CoalitionError),
    #[error(transparent)]
    Shapley(#[from] crate::shapley::ShapleyError),
    #[error(transparent)]
    Model(#[from] crate::xga::ModelError),
}

pub type Result<T> = std::result::Result<T, InferenceError>;

/// Linear interpolation between order statistics at position `p (n - 1)`.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Central percentile interval holding `level` of the values.
pub fn percentile_ci(values: &[f64], level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(InferenceError::Precondition(format!("interval level {level} outside (0, 1)")));
    }
    if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
        return Err(InferenceError::Precondition("percentile interval needs at least two finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_to_thousand() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        let (lo, hi) = percentile_ci(&v, 0.90).unwrap();
        assert!((lo - 50.95).abs() < 1e-9, "{lo}");
        assert!((hi - 950.05).abs() < 1e-9, "{hi}");
    }

    #[test]
    fn constant_and_bad_inputs() {
        assert_eq!(percentile_ci(&[4.0; 7], 0.5).unwrap(), (4.0, 4.0));
        assert!(percentile_ci(&[1.0, 2.0], 0.0).is_err());
        assert!(percentile_ci(&[1.0, 2.0], 1.0).is_err());
        assert!(percentile_ci(&[1.0], 0.9).is_err());
        assert!(percentile_ci(&[1.0, f64::NAN], 0.9).is_err());
    }

    proptest! {
        #[test]
        fn interval_is_ordered_and_inside_range(v in prop::collection::vec(-1e6f64..1e6, 2..200), level in 0.01f64..0.99) {
            let (lo, hi) = percentile_ci(&v, level).unwrap();
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(min <= lo && lo <= hi && hi <= max);
        }
    }
}
