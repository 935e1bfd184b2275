//! Penalty-weight calibration: `lambda_star` minimizes the summed squared
//! distance between the ZJW series and the SFR/SYC benchmarks over a
//! log-spaced grid, refined by golden-section search around the grid minimum.

use rayon::prelude::*;

use super::series::extract_series;
use super::zjw::zjw_extract_ref;
use super::{ExtractError, Method, ZjwConfig};
use crate::curve::{CashflowMatrix, QuotePanel};
use crate::numerics::golden_section_min;

const GRID_POINTS: usize = 61;
const LOG_LO: f64 = -2.0;
const LOG_HI: f64 = 4.0;
const REFINE_LOG_TOL: f64 = 1e-6;
const DEGENERACY_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LambdaCalibration {
    pub lambda_star: f64,
    pub objective: f64,
    /// Set when the objective was flat across the whole grid.
    pub degenerate: bool,
    /// `(lambda, objective)` over the search grid, for reporting.
    pub grid: Vec<(f64, f64)>,
}

/// ZJW annually-compounded series at a given lambda; errors name the first
/// failing date.
fn zjw_values_at(
    panel: &QuotePanel,
    config: &ZjwConfig,
    lambda: f64,
) -> Result<Vec<f64>, ExtractError> {
    let cfg = ZjwConfig { lambda, ..config.clone() };
    let grid = panel.grid();
    let cashflows = CashflowMatrix::identity(grid.len());
    let mut out = Vec::with_capacity(panel.n_dates());
    let mut reference = cfg.f_prior;
    for t in 0..panel.n_dates() {
        let prices = panel.prices_at(t);
        let ext = zjw_extract_ref(&prices, &cashflows, grid, &cfg, reference).map_err(|e| {
            ExtractError::Calibration { date: panel.dates()[t], source: Box::new(e) }
        })?;
        reference = ext.f_inf;
        out.push(f64::exp_m1(ext.f_inf));
    }
    Ok(out)
}

fn objective(zjw: &[f64], sfr: &[f64], syc: &[f64]) -> f64 {
    zjw.iter()
        .zip(sfr.iter().zip(syc))
        .map(|(&z, (&a, &b))| (z - a) * (z - a) + (z - b) * (z - b))
        .sum()
}

/// Calibrate the ZJW penalty weight against the SFR and SYC series.
pub fn calibrate_lambda(
    panel: &QuotePanel,
    config: &ZjwConfig,
) -> Result<LambdaCalibration, ExtractError> {
    config.validate()?;
    if panel.n_dates() < 2 {
        return Err(ExtractError::Config(format!(
            "lambda calibration needs at least 2 dates, got {}",
            panel.n_dates()
        )));
    }
    let sfr = extract_series(panel, Method::Sfr, config)?;
    let syc = extract_series(panel, Method::Syc, config)?;
    for s in [&sfr, &syc] {
        if let Some((date, why)) = s.failures.first() {
            return Err(ExtractError::Calibration {
                date: *date,
                source: Box::new(ExtractError::Config(why.clone())),
            });
        }
    }
    let sfr = sfr.complete_values()?;
    let syc = syc.complete_values()?;

    let lambdas: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            10f64.powf(LOG_LO + (LOG_HI - LOG_LO) * i as f64 / (GRID_POINTS - 1) as f64)
        })
        .collect();
    let grid: Vec<(f64, f64)> = lambdas
        .par_iter()
        .map(|&l| zjw_values_at(panel, config, l).map(|z| (l, objective(&z, &sfr, &syc))))
        .collect::<Result<_, _>>()?;

    let (best_idx, &(best_lambda, best_obj)) = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).expect("finite objectives"))
        .expect("non-empty grid");
    let worst = grid.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);

    if worst - best_obj <= DEGENERACY_EPS * best_obj.abs().max(1.0) {
        return Ok(LambdaCalibration {
            lambda_star: best_lambda,
            objective: best_obj,
            degenerate: true,
            grid,
        });
    }

    // Golden-section refinement in log-space between the grid neighbours of
    // the minimum; per-date failures inside the bracket surface as errors.
    let lo = grid[best_idx.saturating_sub(1)].0.log10();
    let hi = grid[(best_idx + 1).min(grid.len() - 1)].0.log10();
    let mut failure: Option<ExtractError> = None;
    let (log_star, refined_obj) = golden_section_min(
        |log_l| match zjw_values_at(panel, config, 10f64.powf(log_l)) {
            Ok(z) => objective(&z, &sfr, &syc),
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        REFINE_LOG_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }

    if refined_obj < best_obj {
        Ok(LambdaCalibration {
            lambda_star: 10f64.powf(log_star),
            objective: refined_obj,
            degenerate: false,
            grid,
        })
    } else {
        Ok(LambdaCalibration {
            lambda_star: best_lambda,
            objective: best_obj,
            degenerate: false,
            grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::TermGrid;
    use chrono::NaiveDate;
    use nalgebra::DMatrix;

    fn monthly_dates(n: usize) -> Vec<NaiveDate> {
        (0..n)
            .map(|k| {
                NaiveDate::from_ymd_opt(2018 + (k / 12) as i32, (k % 12) as u32 + 1, 28).unwrap()
            })
            .collect()
    }

    #[test]
    fn degenerate_on_flat_prior_panel() {
        // Flat curves at the prior make SFR, SYC and ZJW agree for every
        // lambda, so the objective is constant.
        let grid = TermGrid::new((1..=10).map(|k| k as f64).collect()).unwrap();
        let yields = DMatrix::from_element(3, 10, 0.045);
        let panel = QuotePanel::new(monthly_dates(3), yields, grid).unwrap();
        let cal = calibrate_lambda(&panel, &ZjwConfig::default()).unwrap();
        assert!(cal.degenerate);
        assert!(cal.objective < 1e-14, "{}", cal.objective);
    }

    #[test]
    fn returned_lambda_beats_grid() {
        // Mildly varying panel; the calibration objective at lambda_star must
        // not exceed any grid value.
        let grid = TermGrid::new((1..=10).map(|k| k as f64).collect()).unwrap();
        let n = 6;
        let mut yields = DMatrix::zeros(n, 10);
        for t in 0..n {
            for j in 0..10 {
                yields[(t, j)] =
                    0.03 + 0.004 * (t as f64 / n as f64 - 0.5) + 0.002 * (j as f64 / 9.0);
            }
        }
        let panel = QuotePanel::new(monthly_dates(n), yields, grid).unwrap();
        let cfg = ZjwConfig {
            alpha_grid: super::super::GridSpec { lo: 0.05, hi: 0.6, step: 0.05 },
            ..ZjwConfig::default()
        };
        let cal = calibrate_lambda(&panel, &cfg).unwrap();
        assert!(!cal.degenerate);
        for (l, obj) in &cal.grid {
            assert!(
                cal.objective <= obj + 1e-12,
                "objective {} at {} beats lambda_star {} ({})",
                obj,
                l,
                cal.lambda_star,
                cal.objective
            );
        }
    }

    #[test]
    fn too_few_dates_is_a_config_error() {
        let grid = TermGrid::new((1..=10).map(|k| k as f64).collect()).unwrap();
        let yields = DMatrix::from_element(1, 10, 0.03);
        let panel = QuotePanel::new(monthly_dates(1), yields, grid).unwrap();
        assert!(matches!(
            calibrate_lambda(&panel, &ZjwConfig::default()),
            Err(ExtractError::Config(_))
        ));
    }
}
