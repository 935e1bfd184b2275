//! Forecasting learners under one fit/predict contract: OLS, penalized
//! linear regressions, PCR/PLS, regression trees, random forests, gradient
//! boosting (plain and second-order regularized), and five MLP wirings.
//!
//! Everything is deterministic given `(ModelSpec, Dataset)`; any randomness
//! is derived from the seed carried inside the spec.

mod boost;
mod factor;
mod linear;
mod mlp;
mod tree;

pub use boost::{fit_gbrt, fit_xgb, BoostModel};
pub use factor::{fit_group_pcs, fit_pcr, fit_pls, pca, GroupPcTransform, Pca, PcrModel, PlsModel};
pub use linear::{fit_elastic_net, fit_lasso, fit_ols, fit_ridge, LinearFit};
pub use mlp::{fit_mlp, init_mlp, MlpArch, MlpModel, MlpNet, MlpSpec, TrainReport};
pub use tree::{fit_forest, fit_tree, ForestModel, RegressionTree, TreeParams};

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum LearnError {
    #[error("dimension mismatch: {0}")]
    Dims(String),
    #[error("empty dataset")]
    Empty,
    #[error("non-finite value in dataset")]
    NonFinite,
    #[error("rank-deficient design matrix")]
    RankDeficient,
    #[error("coordinate descent did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("component count {k} out of range: effective rank is {rank}")]
    ComponentsOutOfRange { k: usize, rank: usize },
    #[error("invalid hyperparameter: {0}")]
    BadHyper(String),
    #[error("feature groups: {0}")]
    Groups(String),
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
}

/// Group label marking bond-yield features; everything else is macro.
pub const YIELD_GROUP: &str = "yields";

/// Dated feature matrix with a group label per column.
#[derive(Debug, Clone)]
pub struct FeaturePanel {
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
    pub groups: Vec<String>,
}

impl FeaturePanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        names: Vec<String>,
        values: DMatrix<f64>,
        groups: Vec<String>,
    ) -> Result<Self, LearnError> {
        if dates.len() != values.nrows() {
            return Err(LearnError::Dims(format!(
                "{} dates but {} rows",
                dates.len(),
                values.nrows()
            )));
        }
        if names.len() != values.ncols() || groups.len() != values.ncols() {
            return Err(LearnError::Dims(format!(
                "{} columns but {} names / {} groups",
                values.ncols(),
                names.len(),
                groups.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite);
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(LearnError::Dims("dates must be strictly increasing".into()));
            }
        }
        Ok(Self { dates, names, values, groups })
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }
}

/// Supervised rows: features (time on rows), target, and per-column group
/// labels driving the grouped architectures.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub dates: Vec<NaiveDate>,
    pub feature_names: Vec<String>,
    pub groups: Vec<String>,
    /// Which columns have been standardized by preprocessing.
    pub standardized: Vec<bool>,
}

impl Dataset {
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        dates: Vec<NaiveDate>,
        feature_names: Vec<String>,
        groups: Vec<String>,
    ) -> Result<Self, LearnError> {
        if x.nrows() == 0 {
            return Err(LearnError::Empty);
        }
        if x.nrows() != y.len() || x.nrows() != dates.len() {
            return Err(LearnError::Dims(format!(
                "{} rows vs {} targets vs {} dates",
                x.nrows(),
                y.len(),
                dates.len()
            )));
        }
        if feature_names.len() != x.ncols() || groups.len() != x.ncols() {
            return Err(LearnError::Dims(format!(
                "{} columns but {} names / {} groups",
                x.ncols(),
                feature_names.len(),
                groups.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite);
        }
        let standardized = vec![false; x.ncols()];
        Ok(Self { x, y, dates, feature_names, groups, standardized })
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }

    /// Row-range view as an owned dataset (rolling windows clone anyway to
    /// standardize in place).
    pub fn window(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            x: self.x.rows(start, end - start).into_owned(),
            y: DVector::from_iterator(end - start, (start..end).map(|r| self.y[r])),
            dates: self.dates[start..end].to_vec(),
            feature_names: self.feature_names.clone(),
            groups: self.groups.clone(),
            standardized: self.standardized.clone(),
        }
    }

    pub fn yield_columns(&self) -> Vec<usize> {
        (0..self.cols()).filter(|&j| self.groups[j] == YIELD_GROUP).collect()
    }

    pub fn macro_columns(&self) -> Vec<usize> {
        (0..self.cols()).filter(|&j| self.groups[j] != YIELD_GROUP).collect()
    }
}

/// Column means and scales estimated from a training window only.
#[derive(Debug, Clone)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fit means and sample standard deviations per column; zero-variance
    /// columns get unit scale so transforms stay finite.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let means: Vec<f64> = (0..x.ncols()).map(|j| x.column(j).sum() / n).collect();
        let scales: Vec<f64> = (0..x.ncols())
            .map(|j| {
                let m = means[j];
                let ss: f64 = x.column(j).iter().map(|v| (v - m) * (v - m)).sum();
                let sd = if x.nrows() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, scales }
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                out[(i, j)] = (out[(i, j)] - self.means[j]) / self.scales[j];
            }
        }
        out
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| (v - self.means[j]) / self.scales[j])
            .collect()
    }

    /// Standardize a dataset in place and mark its columns.
    pub fn apply(&self, ds: &mut Dataset) {
        ds.x = self.transform(&ds.x);
        ds.standardized = vec![true; ds.cols()];
    }
}

/// Model kind plus hyperparameters; seeds live inside the variants that are
/// stochastic.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Ols,
    Ridge { lambda: f64 },
    Lasso { lambda: f64 },
    ElasticNet { lambda: f64, mu: f64 },
    Pcr { components: usize },
    Pls { components: usize },
    Tree { max_depth: usize, min_leaf: usize },
    Forest { trees: usize, max_depth: usize, min_leaf: usize, feature_frac: f64, seed: u64 },
    Gbrt { rounds: usize, learning_rate: f64, max_depth: usize },
    Xgb { rounds: usize, learning_rate: f64, max_depth: usize, reg_lambda: f64, gamma: f64 },
    Mlp(MlpSpec),
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Ols => "ols".into(),
            ModelSpec::Ridge { .. } => "ridge".into(),
            ModelSpec::Lasso { .. } => "lasso".into(),
            ModelSpec::ElasticNet { .. } => "elastic_net".into(),
            ModelSpec::Pcr { components } => format!("pcr{components}"),
            ModelSpec::Pls { components } => format!("pls{components}"),
            ModelSpec::Tree { .. } => "tree".into(),
            ModelSpec::Forest { .. } => "forest".into(),
            ModelSpec::Gbrt { .. } => "gbrt".into(),
            ModelSpec::Xgb { .. } => "xgb".into(),
            ModelSpec::Mlp(spec) => format!("mlp_{}", spec.arch.name()),
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |msg: String| Err(LearnError::BadHyper(msg));
        match *self {
            ModelSpec::Ols => Ok(()),
            ModelSpec::Ridge { lambda } | ModelSpec::Lasso { lambda } => {
                if lambda < 0.0 || !lambda.is_finite() {
                    return bad(format!("lambda must be >= 0, got {lambda}"));
                }
                Ok(())
            }
            ModelSpec::ElasticNet { lambda, mu } => {
                if lambda < 0.0 || !lambda.is_finite() {
                    return bad(format!("lambda must be >= 0, got {lambda}"));
                }
                if !(0.0..=1.0).contains(&mu) {
                    return bad(format!("mu must be in [0, 1], got {mu}"));
                }
                Ok(())
            }
            ModelSpec::Pcr { components } | ModelSpec::Pls { components } => {
                if components == 0 {
                    return bad("components must be >= 1".into());
                }
                Ok(())
            }
            ModelSpec::Tree { min_leaf, .. } => {
                if min_leaf == 0 {
                    return bad("min_leaf must be >= 1".into());
                }
                Ok(())
            }
            ModelSpec::Forest { trees, min_leaf, feature_frac, .. } => {
                if trees == 0 {
                    return bad("forest needs at least one tree".into());
                }
                if min_leaf == 0 {
                    return bad("min_leaf must be >= 1".into());
                }
                if !(feature_frac > 0.0 && feature_frac <= 1.0) {
                    return bad(format!("feature_frac must be in (0, 1], got {feature_frac}"));
                }
                Ok(())
            }
            ModelSpec::Gbrt { learning_rate, .. } => {
                if !(learning_rate > 0.0 && learning_rate <= 1.0) {
                    return bad(format!("learning rate must be in (0, 1], got {learning_rate}"));
                }
                Ok(())
            }
            ModelSpec::Xgb { learning_rate, reg_lambda, gamma, .. } => {
                if !(learning_rate > 0.0 && learning_rate <= 1.0) {
                    return bad(format!("learning rate must be in (0, 1], got {learning_rate}"));
                }
                if reg_lambda < 0.0 || gamma < 0.0 {
                    return bad("reg_lambda and gamma must be >= 0".into());
                }
                Ok(())
            }
            ModelSpec::Mlp(ref spec) => spec.validate(),
        }
    }
}

/// Fitted model with a uniform `feature row -> scalar` contract.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Linear(LinearFit),
    Pcr(PcrModel),
    Pls(PlsModel),
    Tree(tree::TreeModel),
    Forest(ForestModel),
    Boost(BoostModel),
    Mlp(MlpModel),
}

impl FittedModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            FittedModel::Linear(m) => m.predict(row),
            FittedModel::Pcr(m) => m.predict(row),
            FittedModel::Pls(m) => m.predict(row),
            FittedModel::Tree(m) => m.predict(row),
            FittedModel::Forest(m) => m.predict(row),
            FittedModel::Boost(m) => m.predict(row),
            FittedModel::Mlp(m) => m.predict(row),
        }
    }

    /// Training diagnostics, present for iteratively trained models.
    pub fn train_report(&self) -> Option<&TrainReport> {
        match self {
            FittedModel::Mlp(m) => Some(m.report()),
            _ => None,
        }
    }
}

/// Fit any model spec against a dataset.
pub fn fit_model(ds: &Dataset, spec: &ModelSpec) -> Result<FittedModel, LearnError> {
    spec.validate()?;
    if ds.rows() == 0 {
        return Err(LearnError::Empty);
    }
    Ok(match *spec {
        ModelSpec::Ols => FittedModel::Linear(fit_ols(&ds.x, &ds.y)?),
        ModelSpec::Ridge { lambda } => FittedModel::Linear(fit_ridge(&ds.x, &ds.y, lambda)?),
        ModelSpec::Lasso { lambda } => FittedModel::Linear(fit_lasso(&ds.x, &ds.y, lambda)?),
        ModelSpec::ElasticNet { lambda, mu } => {
            FittedModel::Linear(fit_elastic_net(&ds.x, &ds.y, lambda, mu)?)
        }
        ModelSpec::Pcr { components } => FittedModel::Pcr(fit_pcr(&ds.x, &ds.y, components)?),
        ModelSpec::Pls { components } => FittedModel::Pls(fit_pls(&ds.x, &ds.y, components)?),
        ModelSpec::Tree { max_depth, min_leaf } => {
            FittedModel::Tree(fit_tree(&ds.x, &ds.y, max_depth, min_leaf)?)
        }
        ModelSpec::Forest { trees, max_depth, min_leaf, feature_frac, seed } => {
            FittedModel::Forest(fit_forest(
                &ds.x,
                &ds.y,
                trees,
                max_depth,
                min_leaf,
                feature_frac,
                seed,
            )?)
        }
        ModelSpec::Gbrt { rounds, learning_rate, max_depth } => {
            FittedModel::Boost(fit_gbrt(&ds.x, &ds.y, rounds, learning_rate, max_depth)?)
        }
        ModelSpec::Xgb { rounds, learning_rate, max_depth, reg_lambda, gamma } => {
            FittedModel::Boost(fit_xgb(
                &ds.x,
                &ds.y,
                rounds,
                learning_rate,
                max_depth,
                reg_lambda,
                gamma,
            )?)
        }
        ModelSpec::Mlp(ref mlp_spec) => FittedModel::Mlp(fit_mlp(ds, mlp_spec)?),
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_round_trip_on_training_window() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 10.0, 2.0, 20.0, 3.0, 15.0, 4.0, 5.0]);
        let s = Standardizer::fit(&x);
        let z = s.transform(&x);
        for j in 0..2 {
            let mean: f64 = z.column(j).sum() / 4.0;
            let var: f64 = z.column(j).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardizer_handles_constant_column() {
        let x = DMatrix::from_row_slice(3, 1, &[5.0, 5.0, 5.0]);
        let s = Standardizer::fit(&x);
        let z = s.transform(&x);
        assert!(z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dataset_validates_shapes() {
        let x = DMatrix::zeros(3, 2);
        let y = DVector::zeros(2);
        assert!(Dataset::new(
            x,
            y,
            testutil::dates(3),
            vec!["a".into(), "b".into()],
            vec![YIELD_GROUP.into(), YIELD_GROUP.into()]
        )
        .is_err());
    }

    #[test]
    fn determinism_bit_identical_predictions() {
        let n = 40;
        let mut rng = crate::seed::stream(5, "learn-determinism");
        let x = DMatrix::from_fn(n, 3, |_, _| crate::seed::normal(&mut rng));
        let y: Vec<f64> = (0..n)
            .map(|i| x[(i, 0)] - 0.5 * x[(i, 2)] + 0.1 * crate::seed::normal(&mut rng))
            .collect();
        let ds = testutil::dataset_from(x, y);
        let specs = [
            ModelSpec::Ols,
            ModelSpec::Ridge { lambda: 1.0 },
            ModelSpec::Lasso { lambda: 0.5 },
            ModelSpec::Pcr { components: 2 },
            ModelSpec::Pls { components: 2 },
            ModelSpec::Tree { max_depth: 3, min_leaf: 2 },
            ModelSpec::Forest {
                trees: 7,
                max_depth: 3,
                min_leaf: 2,
                feature_frac: 0.7,
                seed: 99,
            },
            ModelSpec::Gbrt { rounds: 10, learning_rate: 0.3, max_depth: 2 },
            ModelSpec::Xgb {
                rounds: 10,
                learning_rate: 0.3,
                max_depth: 2,
                reg_lambda: 1.0,
                gamma: 0.1,
            },
            ModelSpec::Mlp(MlpSpec {
                epochs: 40,
                ..MlpSpec::plain(MlpArch::YieldOnly, vec![4], 11)
            }),
        ];
        let probe = vec![0.3, -0.2, 0.9];
        for spec in specs {
            let a = fit_model(&ds, &spec).unwrap().predict(&probe);
            let b = fit_model(&ds, &spec).unwrap().predict(&probe);
            assert_eq!(a.to_bits(), b.to_bits(), "{}", spec.name());
        }
    }
}
