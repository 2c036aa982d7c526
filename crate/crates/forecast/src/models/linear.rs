//! Ridge and lasso on standardized columns.
//!
//! Both minimize `(1/2n)·||y - b0 - X b||² + penalty(b)` over standardized
//! features, with ridge using `(α/2)·||b||²` and lasso `α·||b||₁`. Columns
//! with zero variance carry a zero coefficient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Regressor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Penalty {
    Ridge(f64),
    Lasso(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    /// Slopes on the original feature scale.
    pub coefficients: Vec<f64>,
    /// Slopes on the standardized scale, where the penalty applies.
    pub standardized_coefficients: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
}

impl LinearModel {
    /// Sum of absolute standardized slopes.
    pub fn penalized_l1_norm(&self) -> f64 {
        self.standardized_coefficients.iter().map(|b| b.abs()).sum()
    }
}

impl Regressor for LinearModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>()
    }
}

const LASSO_MAX_SWEEPS: usize = 100_000;

pub(crate) fn fit_linear(x: &[Vec<f64>], y: &[f64], penalty: Penalty) -> LinearModel {
    let n = y.len();
    let p = x.first().map_or(0, Vec::len);
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;

    let mut means = vec![0.0; p];
    let mut scales = vec![1.0; p];
    let mut active = Vec::new();
    for j in 0..p {
        let mean = x.iter().map(|r| r[j]).sum::<f64>() / nf;
        let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / nf;
        means[j] = mean;
        let sd = var.sqrt();
        if sd > 1e-12 * mean.abs().max(1.0) {
            scales[j] = sd;
            active.push(j);
        }
    }

    // Standardized design restricted to active columns, column-major.
    let z = DMatrix::from_fn(n, active.len(), |i, k| {
        let j = active[k];
        (x[i][j] - means[j]) / scales[j]
    });
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let beta_active = match penalty {
        Penalty::Ridge(alpha) => solve_ridge(&z, &yc, alpha),
        Penalty::Lasso(alpha) => coordinate_descent(&z, &yc, alpha),
    };

    let mut standardized = vec![0.0; p];
    for (k, &j) in active.iter().enumerate() {
        standardized[j] = beta_active[k];
    }
    let coefficients: Vec<f64> = (0..p).map(|j| standardized[j] / scales[j]).collect();
    let intercept = y_mean - coefficients.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();

    LinearModel {
        intercept,
        coefficients,
        standardized_coefficients: standardized,
        feature_means: means,
        feature_scales: scales,
    }
}

fn solve_ridge(z: &DMatrix<f64>, yc: &DVector<f64>, alpha: f64) -> DVector<f64> {
    let n = z.nrows() as f64;
    let k = z.ncols();
    if k == 0 {
        return DVector::zeros(0);
    }
    let gram = z.transpose() * z / n + DMatrix::identity(k, k) * alpha;
    let rhs = z.transpose() * yc / n;
    if let Some(chol) = gram.clone().cholesky() {
        let sol = chol.solve(&rhs);
        if sol.iter().all(|v| v.is_finite()) {
            return sol;
        }
    }
    // Rank-deficient with no penalty: minimum-norm least squares.
    z.clone()
        .svd(true, true)
        .solve(yc, 1e-10)
        .unwrap_or_else(|_| DVector::zeros(k))
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn coordinate_descent(z: &DMatrix<f64>, yc: &DVector<f64>, alpha: f64) -> DVector<f64> {
    let n = z.nrows() as f64;
    let k = z.ncols();
    let mut beta: DVector<f64> = DVector::zeros(k);
    let mut resid = yc.clone();
    let y_scale = (yc.norm_squared() / n).sqrt().max(1e-300);
    let tol = 1e-12 * y_scale;

    for _ in 0..LASSO_MAX_SWEEPS {
        let mut max_delta: f64 = 0.0;
        for j in 0..k {
            let col = z.column(j);
            let norm = col.norm_squared() / n;
            let old = beta[j];
            let rho = col.dot(&resid) / n + norm * old;
            let new = soft_threshold(rho, alpha) / norm;
            let delta = new - old;
            if delta != 0.0 {
                resid.axpy(-delta, &col, 1.0);
                beta[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta <= tol {
            break;
        }
    }
    beta
}
