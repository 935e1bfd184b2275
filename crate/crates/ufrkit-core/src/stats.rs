//! Descriptive statistics, ADF and Phillips-Perron unit-root tests, and
//! Pearson correlation with significance flags.
//!
//! Critical values are hard-coded for the constant, no-trend case
//! (-3.43 / -2.86 / -2.57 at 1/5/10%); when the test regression carries no
//! constant the band is not classified.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Clone, Error)]
pub enum StatsError {
    #[error("series too short: need at least {need}, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("degenerate regressors: {0}")]
    Degenerate(String),
    #[error("panel needs at least {need} rows, got {got}")]
    PanelTooShort { need: usize, got: usize },
}

/// Four-moment summary with the sample (n-1) standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

pub fn describe(series: &[f64]) -> Result<SeriesStats, StatsError> {
    if series.len() < 2 {
        return Err(StatsError::TooShort { need: 2, got: series.len() });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(SeriesStats {
        min: series.iter().copied().fold(f64::INFINITY, f64::min),
        max: series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        std: var.sqrt(),
    })
}

/// Significance classification against the constant-case critical values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignificanceBand {
    OnePercent,
    FivePercent,
    TenPercent,
    None,
}

impl SignificanceBand {
    pub fn label(&self) -> &'static str {
        match self {
            SignificanceBand::OnePercent => "1%",
            SignificanceBand::FivePercent => "5%",
            SignificanceBand::TenPercent => "10%",
            SignificanceBand::None => "none",
        }
    }
}

const CRIT_1: f64 = -3.43;
const CRIT_5: f64 = -2.86;
const CRIT_10: f64 = -2.57;

fn classify(stat: f64) -> SignificanceBand {
    if stat < CRIT_1 {
        SignificanceBand::OnePercent
    } else if stat < CRIT_5 {
        SignificanceBand::FivePercent
    } else if stat < CRIT_10 {
        SignificanceBand::TenPercent
    } else {
        SignificanceBand::None
    }
}

/// Unit-root test configuration.
#[derive(Debug, Clone, Copy)]
pub struct UnitRootSpec {
    /// Include a constant in the test regression.
    pub constant: bool,
    /// Fixed lag count; `None` selects `floor(12 (T/100)^{1/4})` trimmed by AIC.
    pub max_lags: Option<usize>,
}

impl Default for UnitRootSpec {
    fn default() -> Self {
        Self { constant: true, max_lags: None }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UnitRootResult {
    pub statistic: f64,
    pub lags: usize,
    pub band: SignificanceBand,
}

struct Ols {
    coefs: DVector<f64>,
    resid: DVector<f64>,
    se: DVector<f64>,
    ssr: f64,
    nobs: usize,
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Ols, StatsError> {
    let n = x.nrows();
    let k = x.ncols();
    if n <= k {
        return Err(StatsError::Degenerate(format!("{n} observations for {k} regressors")));
    }
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| StatsError::Degenerate("normal equations not positive definite".into()))?;
    let coefs = chol.solve(&xty);
    let resid = y - x * &coefs;
    let ssr = resid.dot(&resid);
    let sigma2 = ssr / (n - k) as f64;
    let xtx_inv = chol.inverse();
    let se = DVector::from_iterator(k, (0..k).map(|j| (sigma2 * xtx_inv[(j, j)]).sqrt()));
    Ok(Ols { coefs, resid, se, ssr, nobs: n })
}

/// Dickey-Fuller regression with `lags` lagged differences, trimmed at
/// `trim` (rows of the difference series dropped from the front). Column 0
/// is the lagged level; the constant, when present, is last.
fn df_regression(
    series: &[f64],
    lags: usize,
    trim: usize,
    constant: bool,
) -> Result<Ols, StatsError> {
    let n = series.len();
    let dx: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let rows = dx.len() - trim;
    let k = 1 + lags + usize::from(constant);
    if rows <= k {
        return Err(StatsError::Degenerate("not enough observations after trimming".into()));
    }
    let mut x = DMatrix::zeros(rows, k);
    let mut y = DVector::zeros(rows);
    for r in 0..rows {
        let t = trim + r; // index into dx; dx[t] = series[t+1] - series[t]
        y[r] = dx[t];
        x[(r, 0)] = series[t];
        for l in 1..=lags {
            x[(r, l)] = dx[t - l];
        }
        if constant {
            x[(r, k - 1)] = 1.0;
        }
    }
    let _ = n;
    ols(&x, &y)
}

/// Schwert-style default lag ceiling `floor(12 (T/100)^{1/4})`.
fn default_max_lags(t: usize) -> usize {
    (12.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Augmented Dickey-Fuller test; the statistic is the t-ratio on the lagged
/// level. Lag order is AIC-selected up to the Schwert ceiling on a common
/// sample, then the chosen order is refit on all available observations.
pub fn adf_test(series: &[f64], spec: &UnitRootSpec) -> Result<UnitRootResult, StatsError> {
    if series.len() <= 20 {
        return Err(StatsError::TooShort { need: 21, got: series.len() });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let max_lags = spec
        .max_lags
        .unwrap_or_else(|| default_max_lags(series.len()))
        .min(series.len() / 2 - 2);

    // AIC over a fixed sample trimmed at the ceiling, smallest lag wins
    // ties; collinear candidates (exactly deterministic inputs) are skipped.
    let mut best: Option<(usize, f64)> = None;
    for lags in 0..=max_lags {
        let fit = match df_regression(series, lags, max_lags, spec.constant) {
            Ok(f) => f,
            Err(StatsError::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        };
        let nobs = fit.nobs as f64;
        let aic = nobs * (fit.ssr / nobs).ln() + 2.0 * (fit.coefs.len() as f64);
        if best.map_or(true, |(_, b)| aic < b) {
            best = Some((lags, aic));
        }
    }
    let lags = best
        .ok_or_else(|| StatsError::Degenerate("every lag candidate was collinear".into()))?
        .0;
    let fit = df_regression(series, lags, lags, spec.constant)?;
    // A perfectly deterministic series fits exactly; the t-ratio is then
    // uninformative and reported as zero rather than 0/0.
    let statistic = if fit.se[0] > 0.0 { fit.coefs[0] / fit.se[0] } else { 0.0 };
    let band = if spec.constant { classify(statistic) } else { SignificanceBand::None };
    Ok(UnitRootResult { statistic, lags, band })
}

/// Phillips-Perron Z-tau test with Bartlett-kernel long-run variance at
/// bandwidth `floor(4 (T/100)^{2/9})`.
pub fn pp_test(series: &[f64], spec: &UnitRootSpec) -> Result<UnitRootResult, StatsError> {
    if series.len() <= 20 {
        return Err(StatsError::TooShort { need: 21, got: series.len() });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let fit = df_regression(series, 0, 0, spec.constant)?;
    let u = &fit.resid;
    let n = fit.nobs;
    let nf = n as f64;

    let gamma0 = u.dot(u) / nf;
    let bandwidth = (4.0 * (nf / 100.0).powf(2.0 / 9.0)).floor() as usize;
    if gamma0 == 0.0 {
        // Exact fit, same convention as the ADF path.
        return Ok(UnitRootResult { statistic: 0.0, lags: bandwidth, band: SignificanceBand::None });
    }
    let mut lam2 = gamma0;
    for j in 1..=bandwidth {
        let mut g = 0.0;
        for t in j..n {
            g += u[t] * u[t - j];
        }
        g /= nf;
        lam2 += 2.0 * (1.0 - j as f64 / (bandwidth as f64 + 1.0)) * g;
    }
    if lam2 <= 0.0 {
        return Err(StatsError::Degenerate("non-positive long-run variance".into()));
    }

    let t_stat = fit.coefs[0] / fit.se[0];
    let k = fit.coefs.len();
    let s2 = fit.ssr / (n - k) as f64;
    let statistic = (gamma0 / lam2).sqrt() * t_stat
        - 0.5 * (lam2 - gamma0) / lam2.sqrt() * nf * fit.se[0] / s2.sqrt();
    let band = if spec.constant { classify(statistic) } else { SignificanceBand::None };
    Ok(UnitRootResult { statistic, lags: bandwidth, band })
}

/// Pairwise correlation significance flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrFlag {
    Significant,
    NotSignificant,
    /// A zero-variance column makes the coefficient undefined.
    Undefined,
}

#[derive(Debug, Clone)]
pub struct PearsonMatrix {
    pub r: DMatrix<f64>,
    pub flags: Vec<Vec<CorrFlag>>,
}

/// Pairwise Pearson correlations over panel columns with a two-sided 5%
/// t-test flag per pair.
pub fn pearson_matrix(panel: &DMatrix<f64>) -> Result<PearsonMatrix, StatsError> {
    let n = panel.nrows();
    let p = panel.ncols();
    if n < 3 {
        return Err(StatsError::PanelTooShort { need: 3, got: n });
    }
    if panel.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let nf = n as f64;
    let means: Vec<f64> = (0..p).map(|j| panel.column(j).sum() / nf).collect();
    let ss: Vec<f64> = (0..p)
        .map(|j| panel.column(j).iter().map(|v| (v - means[j]) * (v - means[j])).sum::<f64>())
        .collect();

    let t_dist = StudentsT::new(0.0, 1.0, nf - 2.0).expect("valid dof");
    let mut r = DMatrix::zeros(p, p);
    let mut flags = vec![vec![CorrFlag::NotSignificant; p]; p];
    for i in 0..p {
        for j in 0..p {
            if ss[i] == 0.0 || ss[j] == 0.0 {
                r[(i, j)] = f64::NAN;
                flags[i][j] = CorrFlag::Undefined;
                continue;
            }
            if i == j {
                r[(i, j)] = 1.0;
                flags[i][j] = CorrFlag::Significant;
                continue;
            }
            let mut cov = 0.0;
            for t in 0..n {
                cov += (panel[(t, i)] - means[i]) * (panel[(t, j)] - means[j]);
            }
            let rij = (cov / (ss[i] * ss[j]).sqrt()).clamp(-1.0, 1.0);
            r[(i, j)] = rij;
            let denom = 1.0 - rij * rij;
            let significant = if denom <= 0.0 {
                true
            } else {
                let t = rij.abs() * ((nf - 2.0) / denom).sqrt();
                let p_value = 2.0 * (1.0 - t_dist.cdf(t));
                p_value < 0.05
            };
            flags[i][j] =
                if significant { CorrFlag::Significant } else { CorrFlag::NotSignificant };
        }
    }
    Ok(PearsonMatrix { r, flags })
}

/// Seeded driftless random walk, the unit-root fixture for sanity checks.
pub fn seeded_random_walk(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = seed::stream(seed, "stats-random-walk");
    let mut out = Vec::with_capacity(n);
    let mut level = 0.0;
    for _ in 0..n {
        level += seed::normal(&mut rng);
        out.push(level);
    }
    out
}

/// Seeded Gaussian white noise, the stationary fixture.
pub fn seeded_white_noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = seed::stream(seed, "stats-white-noise");
    (0..n).map(|_| seed::normal(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn describe_constant_series() {
        let s = describe(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(s.min, 3.0);
        assert_eq!(s.max, 3.0);
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn describe_hand_oracle() {
        // Mean 2.5 and std sqrt(5/3) from the textbook formula.
        let s = describe(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.std - 1.2909944487358056).abs() < 1e-15);
    }

    #[test]
    fn describe_rejects_short_input() {
        assert!(describe(&[]).is_err());
        assert!(describe(&[1.0]).is_err());
    }

    #[test]
    fn describe_is_permutation_invariant() {
        let a = describe(&[0.3, -1.2, 4.0, 2.2, 0.0]).unwrap();
        let b = describe(&[4.0, 0.0, 0.3, 2.2, -1.2]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn adf_linear_ramp_smoke() {
        let ramp: Vec<f64> = (0..200).map(|t| t as f64).collect();
        let r = adf_test(&ramp, &UnitRootSpec::default()).unwrap();
        assert!(r.statistic.is_finite());
    }

    #[test]
    fn unit_root_stats_shift_invariant_with_constant() {
        let x = seeded_random_walk(42, 300);
        let shifted: Vec<f64> = x.iter().map(|v| v + 7.0).collect();
        let spec = UnitRootSpec::default();
        let a = adf_test(&x, &spec).unwrap();
        let b = adf_test(&shifted, &spec).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-8);
        let a = pp_test(&x, &spec).unwrap();
        let b = pp_test(&shifted, &spec).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-8);
    }

    #[test]
    fn unit_root_stats_match_reference_implementation() {
        // Frozen from statsmodels.adfuller (maxlag = floor(12 (T/100)^{1/4}),
        // autolag AIC, constant case) and an independent Z-tau evaluation on
        // the same seeded series.
        let spec = UnitRootSpec::default();
        let walk = seeded_random_walk(20240901, 500);
        let noise = seeded_white_noise(20240901, 500);
        let cases = [
            (adf_test(&walk, &spec).unwrap(), -1.481618576233),
            (adf_test(&noise, &spec).unwrap(), -20.821259963386),
            (pp_test(&walk, &spec).unwrap(), -1.478251733887),
            (pp_test(&noise, &spec).unwrap(), -20.835497135708),
        ];
        for (got, want) in cases {
            assert!(
                (got.statistic - want).abs() < 1e-6,
                "statistic {} vs reference {want}",
                got.statistic
            );
        }
    }

    #[test]
    fn random_walk_not_rejected_noise_rejected() {
        let spec = UnitRootSpec::default();
        let walk = seeded_random_walk(20240901, 500);
        let noise = seeded_white_noise(20240901, 500);
        let adf_walk = adf_test(&walk, &spec).unwrap();
        let adf_noise = adf_test(&noise, &spec).unwrap();
        assert!(adf_walk.statistic > CRIT_10, "walk ADF {}", adf_walk.statistic);
        assert_eq!(adf_walk.band, SignificanceBand::None);
        assert!(adf_noise.statistic < CRIT_1, "noise ADF {}", adf_noise.statistic);
        assert_eq!(adf_noise.band, SignificanceBand::OnePercent);
        let pp_walk = pp_test(&walk, &spec).unwrap();
        let pp_noise = pp_test(&noise, &spec).unwrap();
        assert!(pp_walk.statistic > CRIT_10, "walk PP {}", pp_walk.statistic);
        assert!(pp_noise.statistic < CRIT_1, "noise PP {}", pp_noise.statistic);
    }

    #[test]
    fn pearson_identity_and_negation() {
        let x: Vec<f64> = vec![1.0, 2.0, 4.0, 4.5];
        let mut m = DMatrix::zeros(4, 2);
        for (t, &v) in x.iter().enumerate() {
            m[(t, 0)] = v;
            m[(t, 1)] = -v;
        }
        let pm = pearson_matrix(&m).unwrap();
        assert!((pm.r[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((pm.r[(0, 1)] + 1.0).abs() < 1e-15);
        assert!((pm.r[(1, 0)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_hand_sample() {
        // 4-point sample, r from the direct formula.
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 1.0, 4.0, 3.0];
        let mut m = DMatrix::zeros(4, 2);
        for t in 0..4 {
            m[(t, 0)] = xs[t];
            m[(t, 1)] = ys[t];
        }
        let pm = pearson_matrix(&m).unwrap();
        // cov = 4, ssx = 5, ssy = 5 => r = 4/5... computed directly:
        let mx = 2.5;
        let my = 2.5;
        let cov: f64 = (0..4).map(|t| (xs[t] - mx) * (ys[t] - my)).sum();
        let ssx: f64 = xs.iter().map(|v| (v - mx) * (v - mx)).sum();
        let ssy: f64 = ys.iter().map(|v| (v - my) * (v - my)).sum();
        let oracle = cov / (ssx * ssy).sqrt();
        assert!((pm.r[(0, 1)] - oracle).abs() < 1e-15);
        assert!(pm.r.transpose() == pm.r, "symmetric");
    }

    #[test]
    fn pearson_zero_variance_column_flagged() {
        let mut m = DMatrix::zeros(5, 2);
        for t in 0..5 {
            m[(t, 0)] = t as f64;
            m[(t, 1)] = 2.0;
        }
        let pm = pearson_matrix(&m).unwrap();
        assert_eq!(pm.flags[0][1], CorrFlag::Undefined);
        assert!(pm.r[(0, 1)].is_nan());
    }

    #[test]
    fn pearson_needs_three_rows() {
        let m = DMatrix::zeros(2, 2);
        assert!(pearson_matrix(&m).is_err());
    }
}
