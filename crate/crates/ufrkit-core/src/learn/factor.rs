//! Principal-component and partial-least-squares machinery. PCA operates on
//! column-standardized data; loadings are sign-fixed so the entry with the
//! largest magnitude is positive. PLS is NIPALS with X- and y-deflation.

use nalgebra::{DMatrix, DVector};

use super::linear::fit_ols;
use super::{LearnError, Standardizer};

const RANK_EPS_FACTOR: f64 = 1e-10;

/// Fitted PCA: standardization stats plus the retained loadings.
#[derive(Debug, Clone)]
pub struct Pca {
    pub standardizer: Standardizer,
    /// p x k loading matrix, one component per column.
    pub loadings: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Fraction of variance carried by each retained component.
    pub explained: Vec<f64>,
}

fn fix_sign(col: &mut nalgebra::DVectorViewMut<f64>) {
    let mut idx = 0;
    let mut best = 0.0f64;
    for (i, v) in col.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            idx = i;
        }
    }
    if col[idx] < 0.0 {
        for v in col.iter_mut() {
            *v = -*v;
        }
    }
}

/// PCA on column-standardized `x`, keeping `k` components.
pub fn pca(x: &DMatrix<f64>, k: usize) -> Result<Pca, LearnError> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(LearnError::Empty);
    }
    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);
    let svd = z.clone().svd(false, true);
    let smax = svd.singular_values.max();
    let rank = if smax > 0.0 {
        svd.singular_values.iter().filter(|&&s| s > RANK_EPS_FACTOR * smax).count()
    } else {
        0
    };
    if k == 0 || k > rank {
        return Err(LearnError::ComponentsOutOfRange { k, rank });
    }
    let vt = svd.v_t.expect("requested");
    let mut loadings = DMatrix::zeros(x.ncols(), k);
    for c in 0..k {
        for j in 0..x.ncols() {
            loadings[(j, c)] = vt[(c, j)];
        }
        fix_sign(&mut loadings.column_mut(c));
    }
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let explained =
        (0..k).map(|c| svd.singular_values[c] * svd.singular_values[c] / total).collect();
    Ok(Pca {
        standardizer,
        loadings,
        singular_values: svd.singular_values.as_slice()[..k].to_vec(),
        explained,
    })
}

impl Pca {
    /// Component scores for rows of `x` (standardized internally).
    pub fn scores(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.standardizer.transform(x) * &self.loadings
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let z = self.standardizer.transform_row(row);
        (0..self.loadings.ncols())
            .map(|c| z.iter().zip(self.loadings.column(c).iter()).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Principal-component regression: OLS of the target on the first `k` scores.
#[derive(Debug, Clone)]
pub struct PcrModel {
    pca: Pca,
    intercept: f64,
    coefs: Vec<f64>,
}

pub fn fit_pcr(x: &DMatrix<f64>, y: &DVector<f64>, k: usize) -> Result<PcrModel, LearnError> {
    if x.nrows() != y.len() {
        return Err(LearnError::Dims(format!("{} rows vs {} targets", x.nrows(), y.len())));
    }
    let pca_fit = pca(x, k)?;
    let scores = pca_fit.scores(x);
    let ols = fit_ols(&scores, y)?;
    Ok(PcrModel { pca: pca_fit, intercept: ols.intercept, coefs: ols.coefs })
}

impl PcrModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let scores = self.pca.transform_row(row);
        self.intercept + self.coefs.iter().zip(&scores).map(|(c, s)| c * s).sum::<f64>()
    }
}

/// NIPALS partial least squares with deflation of both X and y.
#[derive(Debug, Clone)]
pub struct PlsModel {
    standardizer: Standardizer,
    /// Regression vector in standardized-X space.
    beta: Vec<f64>,
    intercept: f64,
}

pub fn fit_pls(x: &DMatrix<f64>, y: &DVector<f64>, k: usize) -> Result<PlsModel, LearnError> {
    if x.nrows() != y.len() {
        return Err(LearnError::Dims(format!("{} rows vs {} targets", x.nrows(), y.len())));
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(LearnError::Empty);
    }
    let standardizer = Standardizer::fit(x);
    let z0 = standardizer.transform(x);
    let y_mean = y.sum() / y.len() as f64;

    // Effective rank bounds the number of extractable components.
    let svd = z0.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let rank = if smax > 0.0 {
        svd.singular_values.iter().filter(|&&s| s > RANK_EPS_FACTOR * smax).count()
    } else {
        0
    };
    if k == 0 || k > rank {
        return Err(LearnError::ComponentsOutOfRange { k, rank });
    }

    let p = x.ncols();
    let mut z = z0;
    let mut yd = y.map(|v| v - y_mean);
    let mut w_mat = DMatrix::zeros(p, k);
    let mut p_mat = DMatrix::zeros(p, k);
    let mut q_vec = DVector::zeros(k);
    let mut extracted = 0;
    for a in 0..k {
        let mut w = z.transpose() * &yd;
        let wn = w.norm();
        if wn < 1e-12 {
            break; // target residual orthogonal to X: nothing left to extract
        }
        w /= wn;
        let t = &z * &w;
        let tt = t.dot(&t);
        if tt < 1e-24 {
            break;
        }
        let p_a = z.transpose() * &t / tt;
        let q_a = yd.dot(&t) / tt;
        z -= &t * p_a.transpose();
        yd -= &t * q_a;
        w_mat.column_mut(a).copy_from(&w);
        p_mat.column_mut(a).copy_from(&p_a);
        q_vec[a] = q_a;
        extracted = a + 1;
    }
    let w_mat = w_mat.columns(0, extracted).into_owned();
    let p_mat = p_mat.columns(0, extracted).into_owned();
    let q_vec = DVector::from_iterator(extracted, (0..extracted).map(|a| q_vec[a]));

    // beta = W (P^T W)^{-1} q in standardized space.
    let ptw = p_mat.transpose() * &w_mat;
    let inv = ptw.try_inverse().ok_or(LearnError::RankDeficient)?;
    let beta = w_mat * inv * q_vec;
    Ok(PlsModel { standardizer, beta: beta.as_slice().to_vec(), intercept: y_mean })
}

impl PlsModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(row);
        self.intercept + self.beta.iter().zip(&z).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Per-group first principal components: one standardized score per group,
/// refit inside each training window by the rolling harness.
#[derive(Debug, Clone)]
pub struct GroupPcTransform {
    pub group_names: Vec<String>,
    cols: Vec<Vec<usize>>,
    standardizers: Vec<Standardizer>,
    loadings: Vec<Vec<f64>>,
    score_scales: Vec<f64>,
}

/// First PC per group label in first-appearance order.
pub fn fit_group_pcs(x: &DMatrix<f64>, groups: &[String]) -> Result<GroupPcTransform, LearnError> {
    if groups.len() != x.ncols() {
        return Err(LearnError::Dims(format!(
            "{} group labels for {} columns",
            groups.len(),
            x.ncols()
        )));
    }
    if x.ncols() == 0 {
        return Err(LearnError::Groups("no feature columns".into()));
    }
    let mut group_names: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<usize>> = Vec::new();
    for (j, g) in groups.iter().enumerate() {
        match group_names.iter().position(|n| n == g) {
            Some(i) => cols[i].push(j),
            None => {
                group_names.push(g.clone());
                cols.push(vec![j]);
            }
        }
    }

    let n = x.nrows();
    let mut standardizers = Vec::with_capacity(cols.len());
    let mut loadings = Vec::with_capacity(cols.len());
    let mut score_scales = Vec::with_capacity(cols.len());
    for group_cols in &cols {
        let block = DMatrix::from_fn(n, group_cols.len(), |i, c| x[(i, group_cols[c])]);
        let standardizer = Standardizer::fit(&block);
        let z = standardizer.transform(&block);
        let svd = z.clone().svd(false, true);
        let vt = svd.v_t.expect("requested");
        let mut loading: Vec<f64> = (0..group_cols.len()).map(|j| vt[(0, j)]).collect();
        // Sign rule: the largest-magnitude loading is positive.
        let (mut idx, mut best) = (0usize, 0.0f64);
        for (i, v) in loading.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                idx = i;
            }
        }
        if loading[idx] < 0.0 {
            for v in &mut loading {
                *v = -*v;
            }
        }
        let s1 = svd.singular_values[0];
        let score_sd = if n > 1 { s1 / ((n as f64 - 1.0).sqrt()) } else { 0.0 };
        score_scales.push(if score_sd > 0.0 { score_sd } else { 1.0 });
        standardizers.push(standardizer);
        loadings.push(loading);
    }
    Ok(GroupPcTransform { group_names, cols, standardizers, loadings, score_scales })
}

impl GroupPcTransform {
    pub fn n_groups(&self) -> usize {
        self.group_names.len()
    }

    /// One standardized score per group for a feature row.
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        (0..self.cols.len())
            .map(|g| {
                let vals: Vec<f64> = self.cols[g].iter().map(|&j| row[j]).collect();
                let z = self.standardizers[g].transform_row(&vals);
                let raw: f64 = z.iter().zip(&self.loadings[g]).map(|(a, b)| a * b).sum();
                raw / self.score_scales[g]
            })
            .collect()
    }

    pub fn scores(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), self.n_groups(), |i, g| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            self.transform_row(&row)[g]
        })
    }
}
