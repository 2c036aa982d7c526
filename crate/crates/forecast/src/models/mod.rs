//! Model families, hyperparameter grids, and cross-validated fitting.
//!
//! New families plug in by implementing [`Regressor`] and adding a
//! [`Hyperparams`] variant; ensembling and bootstrap work on predictions
//! only and do not care which family produced them.

mod linear;
mod tree;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use linear::LinearModel;
pub use tree::{BoostedTrees, RegressionTree, TreeNode};

use crate::{blocked_cv_split, CvConfig, FeatureMatrix, FeatureRows, ForecastError};
use linear::{fit_linear, Penalty};
use tree::{fit_boosting, fit_forest, TreeParams};

/// Anything that maps one feature row to a raw (unclipped) prediction.
pub trait Regressor {
    fn predict_row(&self, row: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ridge,
    Lasso,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    HistoricalMean,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ridge => "ridge",
            ModelKind::Lasso => "lasso",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::HistoricalMean => "historical_mean",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Hyperparams {
    Ridge {
        alpha: f64,
    },
    Lasso {
        alpha: f64,
    },
    DecisionTree {
        max_depth: usize,
        min_samples_leaf: usize,
    },
    RandomForest {
        n_trees: usize,
        max_depth: usize,
        min_samples_leaf: usize,
        /// Fraction of columns tried at each split.
        max_features: f64,
    },
    GradientBoosting {
        n_estimators: usize,
        learning_rate: f64,
        max_depth: usize,
        min_samples_leaf: usize,
        subsample: f64,
    },
    HistoricalMean,
}

impl Hyperparams {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparams::Ridge { .. } => ModelKind::Ridge,
            Hyperparams::Lasso { .. } => ModelKind::Lasso,
            Hyperparams::DecisionTree { .. } => ModelKind::DecisionTree,
            Hyperparams::RandomForest { .. } => ModelKind::RandomForest,
            Hyperparams::GradientBoosting { .. } => ModelKind::GradientBoosting,
            Hyperparams::HistoricalMean => ModelKind::HistoricalMean,
        }
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        let bad = |msg: String| Err(ForecastError::InvalidHyperparameter(msg));
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        match *self {
            Hyperparams::Ridge { alpha } | Hyperparams::Lasso { alpha } => {
                if !(alpha.is_finite() && alpha >= 0.0) {
                    return bad(format!("alpha must be finite and >= 0, got {alpha}"));
                }
            }
            Hyperparams::DecisionTree {
                max_depth,
                min_samples_leaf,
            } => check_tree(max_depth, min_samples_leaf)?,
            Hyperparams::RandomForest {
                n_trees,
                max_depth,
                min_samples_leaf,
                max_features,
            } => {
                check_tree(max_depth, min_samples_leaf)?;
                if n_trees == 0 {
                    return bad("n_trees must be >= 1".into());
                }
                if !unit(max_features) {
                    return bad(format!("max_features must be in (0, 1], got {max_features}"));
                }
            }
            Hyperparams::GradientBoosting {
                n_estimators,
                learning_rate,
                max_depth,
                min_samples_leaf,
                subsample,
            } => {
                check_tree(max_depth, min_samples_leaf)?;
                if n_estimators == 0 {
                    return bad("n_estimators must be >= 1".into());
                }
                if !unit(learning_rate) {
                    return bad(format!("learning_rate must be in (0, 1], got {learning_rate}"));
                }
                if !unit(subsample) {
                    return bad(format!("subsample must be in (0, 1], got {subsample}"));
                }
            }
            Hyperparams::HistoricalMean => {}
        }
        Ok(())
    }
}

fn check_tree(max_depth: usize, min_samples_leaf: usize) -> Result<(), ForecastError> {
    if max_depth == 0 {
        return Err(ForecastError::InvalidHyperparameter("max_depth must be >= 1".into()));
    }
    if min_samples_leaf == 0 {
        return Err(ForecastError::InvalidHyperparameter(
            "min_samples_leaf must be >= 1".into(),
        ));
    }
    Ok(())
}

/// A named model family with its search grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    pub grid: Vec<Hyperparams>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, kind: ModelKind, grid: Vec<Hyperparams>) -> Self {
        ModelSpec {
            name: name.into(),
            kind,
            grid,
        }
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.grid.is_empty() {
            return Err(ForecastError::EmptyGrid);
        }
        for (index, hp) in self.grid.iter().enumerate() {
            if hp.kind() != self.kind {
                return Err(ForecastError::GridKindMismatch {
                    index,
                    kind: self.kind.name().to_string(),
                });
            }
            hp.validate()?;
        }
        Ok(())
    }

    /// The five families with their default grids.
    pub fn default_registry() -> Vec<ModelSpec> {
        let ridge = [0.0, 0.01, 0.1, 1.0, 10.0]
            .map(|alpha| Hyperparams::Ridge { alpha })
            .to_vec();
        let lasso = [0.1, 1.0, 5.0, 20.0]
            .map(|alpha| Hyperparams::Lasso { alpha })
            .to_vec();
        let mut tree = Vec::new();
        for max_depth in [2, 3, 4, 6] {
            for min_samples_leaf in [2, 5] {
                tree.push(Hyperparams::DecisionTree {
                    max_depth,
                    min_samples_leaf,
                });
            }
        }
        let mut forest = Vec::new();
        for max_depth in [4, 8] {
            for max_features in [0.5, 1.0] {
                forest.push(Hyperparams::RandomForest {
                    n_trees: 100,
                    max_depth,
                    min_samples_leaf: 2,
                    max_features,
                });
            }
        }
        let mut boosting = Vec::new();
        for n_estimators in [50, 150] {
            for learning_rate in [0.05, 0.1] {
                for max_depth in [2, 3] {
                    boosting.push(Hyperparams::GradientBoosting {
                        n_estimators,
                        learning_rate,
                        max_depth,
                        min_samples_leaf: 2,
                        subsample: 0.8,
                    });
                }
            }
        }
        vec![
            ModelSpec::new("ridge", ModelKind::Ridge, ridge),
            ModelSpec::new("lasso", ModelKind::Lasso, lasso),
            ModelSpec::new("decision_tree", ModelKind::DecisionTree, tree),
            ModelSpec::new("random_forest", ModelKind::RandomForest, forest),
            ModelSpec::new("gradient_boosting", ModelKind::GradientBoosting, boosting),
        ]
    }
}

/// Fitted parameters of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedModel {
    Linear(LinearModel),
    Tree(RegressionTree),
    Forest { trees: Vec<RegressionTree> },
    Boosting(BoostedTrees),
    Constant { value: f64 },
}

impl Regressor for FittedModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            FittedModel::Linear(m) => m.predict_row(row),
            FittedModel::Tree(t) => t.predict_row(row),
            FittedModel::Forest { trees } => {
                trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64
            }
            FittedModel::Boosting(b) => b.predict_row(row),
            FittedModel::Constant { value } => *value,
        }
    }
}

impl FittedModel {
    fn fit(hp: &Hyperparams, x: &[Vec<f64>], y: &[f64], seed: u64) -> FittedModel {
        let p = x.first().map_or(0, Vec::len);
        match *hp {
            Hyperparams::Ridge { alpha } => FittedModel::Linear(fit_linear(x, y, Penalty::Ridge(alpha))),
            Hyperparams::Lasso { alpha } => FittedModel::Linear(fit_linear(x, y, Penalty::Lasso(alpha))),
            Hyperparams::DecisionTree {
                max_depth,
                min_samples_leaf,
            } => FittedModel::Tree(RegressionTree::fit(
                x,
                y,
                (0..y.len()).collect(),
                TreeParams {
                    max_depth,
                    min_samples_leaf,
                    max_features: None,
                },
                None,
            )),
            Hyperparams::RandomForest {
                n_trees,
                max_depth,
                min_samples_leaf,
                max_features,
            } => {
                let k = ((max_features * p as f64).ceil() as usize).clamp(1, p.max(1));
                let params = TreeParams {
                    max_depth,
                    min_samples_leaf,
                    max_features: Some(k),
                };
                FittedModel::Forest {
                    trees: fit_forest(x, y, n_trees, params, seed),
                }
            }
            Hyperparams::GradientBoosting {
                n_estimators,
                learning_rate,
                max_depth,
                min_samples_leaf,
                subsample,
            } => {
                let params = TreeParams {
                    max_depth,
                    min_samples_leaf,
                    max_features: None,
                };
                FittedModel::Boosting(fit_boosting(
                    x,
                    y,
                    n_estimators,
                    learning_rate,
                    subsample,
                    params,
                    seed,
                ))
            }
            Hyperparams::HistoricalMean => FittedModel::Constant {
                value: y.iter().sum::<f64>() / y.len() as f64,
            },
        }
    }
}

/// A fitted model together with how it was chosen and how it scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub name: String,
    pub kind: ModelKind,
    pub hyperparams: Hyperparams,
    pub fitted: FittedModel,
    pub feature_names: Vec<String>,
    /// Mean validation MSE of the chosen grid point; `None` if not cross-validated.
    pub cv_mse: Option<f64>,
    /// Mean validation MSE of every grid point, in grid order.
    pub cv_scores: Vec<f64>,
    pub test_rmse: Option<f64>,
    pub test_mae: Option<f64>,
    pub seed: u64,
    /// First and last row date of the fitting data.
    pub training_range: (NaiveDate, NaiveDate),
    /// `y - prediction` on the fitting data, for bootstrap intervals.
    pub residuals: Vec<f64>,
}

impl TrainedModel {
    /// Attaches held-out metrics.
    pub fn with_test_metrics(mut self, metrics: crate::Metrics) -> Self {
        self.test_rmse = Some(metrics.rmse);
        self.test_mae = Some(metrics.mae);
        self
    }
}

fn check_matrix(matrix: &FeatureMatrix) -> Result<(), ForecastError> {
    let n = matrix.n_rows();
    if n == 0 {
        return Err(ForecastError::DegenerateMatrix("zero rows".into()));
    }
    if matrix.y.len() != n || matrix.dates.len() != n {
        return Err(ForecastError::LengthMismatch {
            left: n,
            right: matrix.y.len().min(matrix.dates.len()),
        });
    }
    let p = matrix.n_features();
    for row in &matrix.x {
        if row.len() != p {
            return Err(ForecastError::SchemaMismatch {
                expected: p,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ForecastError::DegenerateMatrix("non-finite feature value".into()));
        }
    }
    if matrix.y.iter().any(|v| !v.is_finite()) {
        return Err(ForecastError::DegenerateMatrix("non-finite target value".into()));
    }
    Ok(())
}

fn mse(fitted: &FittedModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, t)| (fitted.predict_row(row) - t).powi(2))
        .sum::<f64>()
        / y.len() as f64
}

fn finish(
    name: &str,
    hp: Hyperparams,
    matrix: &FeatureMatrix,
    seed: u64,
    cv_mse: Option<f64>,
    cv_scores: Vec<f64>,
) -> TrainedModel {
    let fitted = FittedModel::fit(&hp, &matrix.x, &matrix.y, seed);
    let residuals = matrix
        .x
        .iter()
        .zip(&matrix.y)
        .map(|(row, t)| t - fitted.predict_row(row).max(0.0))
        .collect();
    TrainedModel {
        name: name.to_string(),
        kind: hp.kind(),
        hyperparams: hp,
        fitted,
        feature_names: matrix.feature_names.clone(),
        cv_mse,
        cv_scores,
        test_rmse: None,
        test_mae: None,
        seed,
        training_range: (matrix.dates[0], *matrix.dates.last().expect("non-empty")),
        residuals,
    }
}

/// Grid search by blocked cross-validation, then refit on every row.
///
/// The chosen grid point minimizes mean validation MSE; ties go to the
/// earliest grid entry.
pub fn fit_model(
    spec: &ModelSpec,
    matrix: &FeatureMatrix,
    cv: &CvConfig,
    seed: u64,
) -> Result<TrainedModel, ForecastError> {
    spec.validate()?;
    check_matrix(matrix)?;
    let folds = blocked_cv_split(matrix.n_rows(), cv.folds)?;

    let scores: Vec<f64> = spec
        .grid
        .par_iter()
        .map(|hp| {
            let total: f64 = folds
                .iter()
                .map(|fold| {
                    let train = &matrix.x[fold.train.clone()];
                    let fitted = FittedModel::fit(hp, train, &matrix.y[fold.train.clone()], seed);
                    mse(
                        &fitted,
                        &matrix.x[fold.validation.clone()],
                        &matrix.y[fold.validation.clone()],
                    )
                })
                .sum();
            total / folds.len() as f64
        })
        .collect();

    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(finish(
        &spec.name,
        spec.grid[best].clone(),
        matrix,
        seed,
        Some(scores[best]),
        scores,
    ))
}

/// Refits a model's chosen hyperparameters on new data, keeping its seed.
pub fn refit(model: &TrainedModel, matrix: &FeatureMatrix) -> Result<TrainedModel, ForecastError> {
    check_matrix(matrix)?;
    if matrix.feature_names != model.feature_names {
        return Err(schema_error(&model.feature_names, &matrix.feature_names));
    }
    Ok(finish(
        &model.name,
        model.hyperparams.clone(),
        matrix,
        model.seed,
        model.cv_mse,
        model.cv_scores.clone(),
    ))
}

/// Constant predictor equal to the mean training target.
pub fn baseline_historical_mean(train: &FeatureMatrix) -> Result<TrainedModel, ForecastError> {
    check_matrix(train)?;
    Ok(finish(
        "historical_mean",
        Hyperparams::HistoricalMean,
        train,
        0,
        None,
        Vec::new(),
    ))
}

fn schema_error(expected: &[String], got: &[String]) -> ForecastError {
    if expected.len() != got.len() {
        return ForecastError::SchemaMismatch {
            expected: expected.len(),
            got: got.len(),
        };
    }
    let i = expected.iter().zip(got).position(|(a, b)| a != b).unwrap_or(0);
    ForecastError::InvalidSpec(format!(
        "feature column {i} is `{}`, model expects `{}`",
        got[i], expected[i]
    ))
}

/// Predictions for each row, clipped below at zero.
pub fn predict(model: &TrainedModel, rows: &FeatureRows) -> Result<Vec<f64>, ForecastError> {
    if rows.feature_names != model.feature_names {
        return Err(schema_error(&model.feature_names, &rows.feature_names));
    }
    rows.x
        .iter()
        .map(|row| {
            if row.len() != model.feature_names.len() {
                return Err(ForecastError::SchemaMismatch {
                    expected: model.feature_names.len(),
                    got: row.len(),
                });
            }
            let v = model.fitted.predict_row(row);
            if v.is_finite() {
                Ok(v.max(0.0))
            } else {
                Err(ForecastError::DegenerateMatrix(format!("non-finite prediction {v}")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_data(n: usize) -> FeatureMatrix {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let y = (0..n).map(|i| 2.0 * i as f64).collect();
        FeatureMatrix::from_xy(x, y)
    }

    #[test]
    fn ridge_zero_penalty_extrapolates_line() {
        let m = linear_data(40);
        let spec = ModelSpec::new("ridge", ModelKind::Ridge, vec![Hyperparams::Ridge { alpha: 0.0 }]);
        let model = fit_model(&spec, &m, &CvConfig::default(), 0).unwrap();
        let rows = FeatureRows {
            dates: vec![m.dates[0]],
            feature_names: m.feature_names.clone(),
            x: vec![vec![10.0]],
            horizon: 0,
        };
        let p = predict(&model, &rows).unwrap();
        assert!((p[0] - 20.0).abs() < 1e-6);
    }

    #[test]
    fn negative_raw_prediction_clipped() {
        let m = FeatureMatrix::from_xy(vec![vec![]; 3], vec![-5.0; 3]);
        let model = baseline_historical_mean(&m).unwrap();
        assert_eq!(model.fitted, FittedModel::Constant { value: -5.0 });
        assert_eq!(predict(&model, &m.rows()).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn baseline_is_training_mean() {
        let m = FeatureMatrix::from_xy(vec![vec![1.0]; 3], vec![10.0, 20.0, 30.0]);
        let model = baseline_historical_mean(&m).unwrap();
        assert_eq!(predict(&model, &m.rows()).unwrap(), vec![20.0; 3]);
        let single = FeatureMatrix::from_xy(vec![vec![1.0]], vec![7.5]);
        assert_eq!(predict(&baseline_historical_mean(&single).unwrap(), &single.rows()).unwrap(), vec![7.5]);
    }

    #[test]
    fn cv_ties_pick_first_grid_entry() {
        // Constant target: every lasso penalty fits it exactly.
        let m = FeatureMatrix::from_xy((0..30).map(|i| vec![i as f64]).collect(), vec![4.0; 30]);
        let grid = [3.0, 2.0, 1.0].map(|alpha| Hyperparams::Lasso { alpha }).to_vec();
        let model = fit_model(&ModelSpec::new("lasso", ModelKind::Lasso, grid), &m, &CvConfig::default(), 0).unwrap();
        assert_eq!(model.hyperparams, Hyperparams::Lasso { alpha: 3.0 });
        assert_eq!(model.cv_scores.len(), 3);
    }

    #[test]
    fn cv_prefers_better_grid_point() {
        let m = linear_data(60);
        let grid = [1000.0, 0.0].map(|alpha| Hyperparams::Ridge { alpha }).to_vec();
        let model = fit_model(&ModelSpec::new("ridge", ModelKind::Ridge, grid), &m, &CvConfig::default(), 0).unwrap();
        assert_eq!(model.hyperparams, Hyperparams::Ridge { alpha: 0.0 });
        assert!(model.cv_mse.unwrap() < 1e-12);
    }

    #[test]
    fn invalid_specs_rejected() {
        let m = linear_data(40);
        let cv = CvConfig::default();
        let empty = ModelSpec::new("t", ModelKind::DecisionTree, vec![]);
        assert_eq!(fit_model(&empty, &m, &cv, 0).unwrap_err(), ForecastError::EmptyGrid);
        let depth0 = ModelSpec::new(
            "t",
            ModelKind::DecisionTree,
            vec![Hyperparams::DecisionTree { max_depth: 0, min_samples_leaf: 1 }],
        );
        assert!(matches!(fit_model(&depth0, &m, &cv, 0), Err(ForecastError::InvalidHyperparameter(_))));
        let mixed = ModelSpec::new("r", ModelKind::Ridge, vec![Hyperparams::Lasso { alpha: 1.0 }]);
        assert!(matches!(fit_model(&mixed, &m, &cv, 0), Err(ForecastError::GridKindMismatch { index: 0, .. })));
        let zero = FeatureMatrix::from_xy(vec![], vec![]);
        let ridge = ModelSpec::new("r", ModelKind::Ridge, vec![Hyperparams::Ridge { alpha: 0.0 }]);
        assert!(matches!(fit_model(&ridge, &zero, &cv, 0), Err(ForecastError::DegenerateMatrix(_))));
    }

    #[test]
    fn schema_mismatch_rejected() {
        let m = linear_data(40);
        let model = baseline_historical_mean(&m).unwrap();
        let mut rows = m.rows();
        rows.feature_names = vec!["a".into(), "b".into()];
        rows.x = vec![vec![1.0, 2.0]];
        assert_eq!(
            predict(&model, &rows).unwrap_err(),
            ForecastError::SchemaMismatch { expected: 1, got: 2 }
        );
    }

    #[test]
    fn default_registry_is_valid() {
        let registry = ModelSpec::default_registry();
        assert_eq!(registry.len(), 5);
        for spec in &registry {
            spec.validate().unwrap();
        }
    }

    #[test]
    fn hyperparams_round_trip_json() {
        let hp = Hyperparams::GradientBoosting {
            n_estimators: 5,
            learning_rate: 0.1,
            max_depth: 2,
            min_samples_leaf: 1,
            subsample: 0.5,
        };
        let s = serde_json::to_string(&hp).unwrap();
        assert!(s.contains("\"kind\":\"gradient_boosting\""));
        assert_eq!(serde_json::from_str::<Hyperparams>(&s).unwrap(), hp);
    }
}
