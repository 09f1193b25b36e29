//! Downstream least squares and the MSE metric.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub coefficients: DVector<f64>,
    pub intercept: f64,
}

impl RegressionModel {
    pub fn predict(&self, z: &DMatrix<f64>) -> Result<DVector<f64>> {
        if z.ncols() != self.coefficients.len() {
            return Err(SdrError::DimensionMismatch {
                what: "regression design width",
                expected: self.coefficients.len(),
                found: z.ncols(),
            });
        }
        Ok((z * &self.coefficients).add_scalar(self.intercept))
    }
}

/// Least squares with intercept. The slope is the minimum-norm solution on
/// the column-centered design, so rank-deficient designs are handled
/// deterministically.
pub fn ols_fit(z: &DMatrix<f64>, y: &DVector<f64>) -> Result<RegressionModel> {
    if z.nrows() != y.len() {
        return Err(SdrError::DimensionMismatch {
            what: "ols response length",
            expected: z.nrows(),
            found: y.len(),
        });
    }
    if z.nrows() == 0 {
        return Err(SdrError::contract("ols needs at least one row"));
    }
    if z.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(SdrError::NonFinite("ols input"));
    }
    let means: DVector<f64> = DVector::from_iterator(z.ncols(), z.column_iter().map(|c| c.mean()));
    let y_mean = y.mean();
    let mut zc = z.clone();
    for (j, m) in means.iter().enumerate() {
        zc.column_mut(j).add_scalar_mut(-m);
    }
    let yc = y.add_scalar(-y_mean);
    let coefficients = if z.ncols() == 0 {
        DVector::zeros(0)
    } else {
        let svd = zc.svd(true, true);
        let smax = svd.singular_values.max();
        let eps = smax * f64::EPSILON * z.nrows().max(z.ncols()) as f64;
        svd.solve(&yc, eps).map_err(|e| SdrError::Internal(e.to_string()))?
    };
    let intercept = y_mean - means.dot(&coefficients);
    Ok(RegressionModel {
        coefficients,
        intercept,
    })
}

/// Mean squared error with `1/N` normalization.
pub fn mse(predictions: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(SdrError::DimensionMismatch {
            what: "mse lengths",
            expected: truth.len(),
            found: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(SdrError::contract("mse of empty vectors"));
    }
    Ok((predictions - truth).norm_squared() / truth.len() as f64)
}
