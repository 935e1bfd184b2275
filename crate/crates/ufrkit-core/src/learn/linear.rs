//! Least squares and penalized variants. The penalized objective is
//! `0.5 ||y - b0 - X b||^2 + lambda (mu ||b||_1 + (1 - mu)/2 ||b||_2^2)`,
//! so `mu = 1` is the lasso, `mu = 0` the ridge; the intercept is never
//! penalized (both X and y are centered before solving).

use nalgebra::{DMatrix, DVector};

use super::LearnError;

const CD_TOL: f64 = 1e-9;
const CD_MAX_SWEEPS: usize = 10_000;
const RANK_EPS: f64 = 1e-10;

/// Intercept plus slope vector.
#[derive(Debug, Clone)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefs: Vec<f64>,
}

impl LinearFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefs.iter().zip(row).map(|(c, x)| c * x).sum::<f64>()
    }
}

fn center(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>, Vec<f64>, f64) {
    let n = x.nrows() as f64;
    let x_means: Vec<f64> = (0..x.ncols()).map(|j| x.column(j).sum() / n).collect();
    let y_mean = y.sum() / n;
    let mut xc = x.clone();
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            xc[(i, j)] -= x_means[j];
        }
    }
    let yc = y.map(|v| v - y_mean);
    (xc, yc, x_means, y_mean)
}

fn check_dims(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(), LearnError> {
    if x.nrows() == 0 {
        return Err(LearnError::Empty);
    }
    if x.nrows() != y.len() {
        return Err(LearnError::Dims(format!("{} rows vs {} targets", x.nrows(), y.len())));
    }
    Ok(())
}

/// Ordinary least squares with an intercept; the design (including the
/// intercept column) must have full column rank.
pub fn fit_ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearFit, LearnError> {
    check_dims(x, y)?;
    let n = x.nrows();
    let p = x.ncols();
    let mut design = DMatrix::zeros(n, p + 1);
    design.column_mut(0).fill(1.0);
    design.view_mut((0, 1), (n, p)).copy_from(x);

    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > RANK_EPS * smax).count();
    if rank < p + 1 {
        return Err(LearnError::RankDeficient);
    }
    let coefs = svd.solve(y, RANK_EPS * smax).map_err(|_| LearnError::RankDeficient)?;
    Ok(LinearFit { intercept: coefs[0], coefs: coefs.as_slice()[1..].to_vec() })
}

/// Ridge regression in closed form on centered data.
pub fn fit_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<LinearFit, LearnError> {
    check_dims(x, y)?;
    let (xc, yc, x_means, y_mean) = center(x, y);
    let p = x.ncols();
    let mut gram = xc.transpose() * &xc;
    for j in 0..p {
        gram[(j, j)] += lambda;
    }
    let rhs = xc.transpose() * &yc;
    let coefs =
        gram.cholesky().map(|ch| ch.solve(&rhs)).ok_or(LearnError::RankDeficient)?;
    let intercept = y_mean - coefs.iter().zip(&x_means).map(|(c, m)| c * m).sum::<f64>();
    Ok(LinearFit { intercept, coefs: coefs.as_slice().to_vec() })
}

fn soft_threshold(rho: f64, threshold: f64) -> f64 {
    if rho > threshold {
        rho - threshold
    } else if rho < -threshold {
        rho + threshold
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for the elastic-net objective.
pub fn fit_elastic_net(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    mu: f64,
) -> Result<LinearFit, LearnError> {
    check_dims(x, y)?;
    let (xc, yc, x_means, y_mean) = center(x, y);
    let p = x.ncols();
    let col_sq: Vec<f64> = (0..p).map(|j| xc.column(j).dot(&xc.column(j))).collect();
    let l1 = lambda * mu;
    let l2 = lambda * (1.0 - mu);

    let mut beta = vec![0.0; p];
    let mut resid = yc.clone();
    let mut converged = false;
    for _sweep in 0..CD_MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let old = beta[j];
            let rho = xc.column(j).dot(&resid) + col_sq[j] * old;
            let new = soft_threshold(rho, l1) / (col_sq[j] + l2);
            let delta = new - old;
            if delta != 0.0 {
                resid -= xc.column(j) * delta;
                beta[j] = new;
            }
            max_delta = max_delta.max(delta.abs());
        }
        if max_delta < CD_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LearnError::NoConvergence { sweeps: CD_MAX_SWEEPS });
    }
    let intercept = y_mean - beta.iter().zip(&x_means).map(|(c, m)| c * m).sum::<f64>();
    Ok(LinearFit { intercept, coefs: beta })
}

pub fn fit_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<LinearFit, LearnError> {
    fit_elastic_net(x, y, lambda, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn toy(n: usize, p: usize, seed_val: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = seed::stream(seed_val, "linear-toy");
        let x = DMatrix::from_fn(n, p, |_, _| seed::normal(&mut rng));
        let y = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                1.5 + 2.0 * x[(i, 0)] - x[(i, p - 1)] + 0.05 * seed::normal(&mut rng)
            }),
        );
        (x, y)
    }

    #[test]
    fn ols_exact_linear_target_has_zero_residuals() {
        let (x, _) = toy(30, 3, 1);
        let y = DVector::from_iterator(30, (0..30).map(|i| 2.0 + x[(i, 0)] - 3.0 * x[(i, 2)]));
        let fit = fit_ols(&x, &y).unwrap();
        for i in 0..30 {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            assert!((fit.predict(&row) - y[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn ols_intercept_only_is_mean() {
        // A constant-column-only design reduces to the target mean; fed as a
        // zero-column matrix plus the built-in intercept.
        let x = DMatrix::zeros(5, 0);
        let y = DVector::from_row_slice(&[1.0, 2.0, 3.0, 4.0, 10.0]);
        let fit = fit_ols(&x, &y).unwrap();
        assert!((fit.intercept - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ols_rejects_rank_deficiency() {
        let mut x = DMatrix::zeros(10, 2);
        for i in 0..10 {
            x[(i, 0)] = i as f64;
            x[(i, 1)] = 2.0 * i as f64;
        }
        let y = DVector::from_fn(10, |i, _| i as f64);
        assert!(matches!(fit_ols(&x, &y), Err(LearnError::RankDeficient)));
    }

    #[test]
    fn ols_three_by_two_normal_equations_oracle() {
        // Independent oracle: solve the normal equations of the augmented
        // design by hand (3 rows, intercept + 1 feature).
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let y = DVector::from_row_slice(&[1.0, 3.0, 4.0]);
        // Normal equations: [[3, 3], [3, 5]] [b0, b1]^T = [8, 11]
        // => b1 = (3*11 - 3*8) / (3*5 - 3*3) = 9/6 = 1.5, b0 = (8 - 3*1.5)/3.
        let fit = fit_ols(&x, &y).unwrap();
        assert!((fit.coefs[0] - 1.5).abs() < 1e-12);
        assert!((fit.intercept - (8.0 - 3.0 * 1.5) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_zero_lambda_equals_ols() {
        let (x, y) = toy(40, 4, 2);
        let ols = fit_ols(&x, &y).unwrap();
        let ridge = fit_ridge(&x, &y, 0.0).unwrap();
        assert!((ols.intercept - ridge.intercept).abs() < 1e-8);
        for (a, b) in ols.coefs.iter().zip(&ridge.coefs) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn ridge_huge_lambda_shrinks_to_mean() {
        let (x, y) = toy(40, 4, 3);
        let fit = fit_ridge(&x, &y, 1e12).unwrap();
        for c in &fit.coefs {
            assert!(c.abs() < 1e-8);
        }
        assert!((fit.intercept - y.sum() / 40.0).abs() < 1e-6);
    }

    #[test]
    fn ridge_norm_shrinks_monotonically() {
        let (x, y) = toy(50, 5, 4);
        let mut last = f64::INFINITY;
        for lambda in [0.0, 0.1, 1.0, 10.0, 100.0, 1e4] {
            let fit = fit_ridge(&x, &y, lambda).unwrap();
            let norm: f64 = fit.coefs.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!(norm <= last + 1e-12, "lambda {lambda}: {norm} > {last}");
            last = norm;
        }
    }

    #[test]
    fn lasso_univariate_matches_soft_threshold_closed_form() {
        // Standardized single regressor: beta = S(x'y, lambda) / x'x exactly.
        let n = 25;
        let mut rng = seed::stream(7, "lasso-closed-form");
        let raw: Vec<f64> = (0..n).map(|_| seed::normal(&mut rng)).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        let sd =
            (raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let xs: Vec<f64> = raw.iter().map(|v| (v - mean) / sd).collect();
        let x = DMatrix::from_column_slice(n, 1, &xs);
        let y = DVector::from_iterator(n, xs.iter().map(|v| 0.8 * v));
        // y is centered up to fp noise because x is standardized.
        for lambda in [0.0, 1.0, 5.0, 50.0] {
            let fit = fit_lasso(&x, &y, lambda).unwrap();
            let xty: f64 = xs.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            let xtx: f64 = xs.iter().map(|v| v * v).sum();
            let oracle = soft_threshold(xty, lambda) / xtx;
            assert!(
                (fit.coefs[0] - oracle).abs() < 1e-8,
                "lambda {lambda}: {} vs {oracle}",
                fit.coefs[0]
            );
        }
    }

    #[test]
    fn elastic_net_interpolates_penalties() {
        let (x, y) = toy(40, 4, 5);
        // mu = 0 must agree with closed-form ridge at the same lambda.
        let en = fit_elastic_net(&x, &y, 3.0, 0.0).unwrap();
        let ridge = fit_ridge(&x, &y, 3.0).unwrap();
        for (a, b) in en.coefs.iter().zip(&ridge.coefs) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        // Large l1 weight zeroes everything.
        let sparse = fit_elastic_net(&x, &y, 1e6, 1.0).unwrap();
        assert!(sparse.coefs.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn intercept_is_never_penalized() {
        // Shifting y by a constant shifts only the intercept.
        let (x, y) = toy(40, 3, 6);
        let shifted = y.map(|v| v + 100.0);
        for lambda in [1.0, 50.0] {
            let a = fit_lasso(&x, &y, lambda).unwrap();
            let b = fit_lasso(&x, &shifted, lambda).unwrap();
            for (ca, cb) in a.coefs.iter().zip(&b.coefs) {
                assert!((ca - cb).abs() < 1e-9);
            }
            assert!((b.intercept - a.intercept - 100.0).abs() < 1e-9);
        }
    }
}
