use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ActionMatrix, ModelError, Result};

/// Variance inflation factors, one per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifReport {
    pub columns: Vec<String>,
    /// `+inf` where the column is an exact linear combination of the others.
    pub values: Vec<f64>,
    pub collinear: Vec<bool>,
}

/// `1 - R^2` below this counts as exact collinearity.
const COLLINEAR_TOL: f64 = 1e-10;

/// `VIF_k = 1 / (1 - R^2_k)` from regressing column `k` on the others plus an intercept.
pub fn compute_vif(m: &ActionMatrix) -> Result<VifReport> {
    let names = m.spec.columns();
    let centred = centred(m);
    if let Some(k) = (0..m.cols).find(|&k| centred.column(k).norm_squared() == 0.0) {
        return Err(ModelError::ConstantColumn(names[k].clone()));
    }
    vif_of(centred, names)
}

/// Like [`compute_vif`] but leaves constant columns out; returns their names alongside the report.
pub fn compute_vif_skipping_constant(m: &ActionMatrix) -> Result<(VifReport, Vec<String>)> {
    let names = m.spec.columns();
    let mut centred = centred(m);
    let (keep, dropped): (Vec<usize>, Vec<usize>) = (0..m.cols).partition(|&k| centred.column(k).norm_squared() > 0.0);
    for &k in dropped.iter().rev() {
        centred = centred.remove_column(k);
    }
    let report = vif_of(centred, keep.iter().map(|&k| names[k].clone()).collect())?;
    Ok((report, dropped.into_iter().map(|k| names[k].clone()).collect()))
}

// centring every column absorbs the intercept
fn centred(m: &ActionMatrix) -> DMatrix<f64> {
    let mut c = DMatrix::from_fn(m.rows, m.cols, |i, k| m.get(i, k));
    for k in 0..m.cols {
        let mean = c.column(k).mean();
        c.column_mut(k).add_scalar_mut(-mean);
    }
    c
}

fn vif_of(centred: DMatrix<f64>, names: Vec<String>) -> Result<VifReport> {
    let cols = centred.ncols();
    if cols < 2 {
        return Err(ModelError::Precondition("VIF needs at least two columns".into()));
    }
    let mut values = Vec::with_capacity(cols);
    let mut collinear = Vec::with_capacity(cols);
    for k in 0..cols {
        let target: DVector<f64> = centred.column(k).into_owned();
        let others = centred.clone().remove_column(k);
        let svd = others.clone().svd(true, true);
        let coef = svd.solve(&target, 1e-12).map_err(|e| ModelError::Precondition(e.to_string()))?;
        let resid = &target - &others * coef;
        let unexplained = resid.norm_squared() / target.norm_squared();
        if unexplained < COLLINEAR_TOL {
            values.push(f64::INFINITY);
            collinear.push(true);
        } else {
            values.push((1.0 / unexplained).max(1.0));
            collinear.push(false);
        }
    }
    Ok(VifReport { columns: names, values, collinear })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xga::FeatureSpec;

    fn matrix(rows: Vec<Vec<f64>>) -> ActionMatrix {
        let n = rows.len();
        ActionMatrix::from_rows(FeatureSpec::xg(), rows, vec![0.0; n], (0..n).map(|i| i.to_string()).collect()).unwrap()
    }

    #[test]
    fn orthogonal_columns_have_unit_vif() {
        // three mutually orthogonal mean-zero columns (Hadamard rows)
        let rows = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, 1.0],
            vec![-1.0, 1.0, 1.0],
            vec![-1.0, -1.0, 1.0],
            vec![1.0, 1.0, -1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, -1.0],
        ];
        let r = compute_vif(&matrix(rows)).unwrap();
        for v in r.values {
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn duplicated_column_is_collinear() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| {
            let a = (i as f64 * 0.37).sin();
            vec![a, a, (i as f64).sqrt()]
        }).collect();
        let r = compute_vif(&matrix(rows)).unwrap();
        assert!(r.collinear[0] && r.collinear[1]);
        assert!(r.values[0].is_infinite());
        assert!(!r.collinear[2]);
    }

    #[test]
    fn constant_column_rejected() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0, (i * i) as f64]).collect();
        assert!(matches!(compute_vif(&matrix(rows.clone())), Err(ModelError::ConstantColumn(ref c)) if c == "y"));
        let (r, dropped) = compute_vif_skipping_constant(&matrix(rows)).unwrap();
        assert_eq!(dropped, vec!["y".to_string()]);
        assert_eq!(r.columns, vec!["x".to_string(), "shot_angle".to_string()]);
    }
}
