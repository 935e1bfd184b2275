//! Per-date UFR series extraction over a quote panel.

use chrono::NaiveDate;
use rayon::prelude::*;

use super::foc::{solve_foc, FocContext, DEFAULT_REFERENCE};
use super::weights::{extract_sfr_with_alpha_bar, extract_syc};
use super::zjw::zjw_extract_ref;
use super::{ExtractError, Method, ZjwConfig};
use crate::curve::{CashflowMatrix, QuotePanel};

/// Per-date UFR values for one extraction method. Values are annually
/// compounded; `f_inf` is the continuously-compounded twin with
/// `f_inf = ln(1 + value)` holding exactly. Failed dates stay `None` and are
/// listed in `failures`; ZJW dates that fell back to the α grid upper bound
/// are listed in `fallback_dates`.
#[derive(Debug, Clone)]
pub struct UfrSeries {
    pub method: Method,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<Option<f64>>,
    pub f_inf: Vec<Option<f64>>,
    pub alpha_path: Option<Vec<Option<f64>>>,
    pub fallback_dates: Vec<NaiveDate>,
    pub failures: Vec<(NaiveDate, String)>,
}

impl UfrSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Annually-compounded values, failing on the first missing date.
    pub fn complete_values(&self) -> Result<Vec<f64>, ExtractError> {
        self.values
            .iter()
            .zip(&self.dates)
            .map(|(v, d)| {
                v.ok_or_else(|| ExtractError::Calibration {
                    date: *d,
                    source: Box::new(ExtractError::EmptySeries),
                })
            })
            .collect()
    }

    pub fn complete_f_inf(&self) -> Result<Vec<f64>, ExtractError> {
        self.f_inf
            .iter()
            .zip(&self.dates)
            .map(|(v, d)| {
                v.ok_or_else(|| ExtractError::Calibration {
                    date: *d,
                    source: Box::new(ExtractError::EmptySeries),
                })
            })
            .collect()
    }
}

fn canonical_pair(f_root: f64) -> (f64, f64) {
    // Annual value first, then the continuous rate re-derived from it so the
    // reported pair satisfies f_inf = ln(1 + ufr) bit for bit.
    let annual = f64::exp_m1(f_root);
    (annual, f64::ln_1p(annual))
}

/// Extract a UFR series date by date. Per-date failures are recorded and the
/// run continues; ZJW also records the per-date α path.
pub fn extract_series(
    panel: &QuotePanel,
    method: Method,
    config: &ZjwConfig,
) -> Result<UfrSeries, ExtractError> {
    config.validate()?;
    let n = panel.n_dates();
    let grid = panel.grid();
    let cashflows = CashflowMatrix::identity(grid.len());
    let dates = panel.dates().to_vec();

    let mut values = vec![None; n];
    let mut f_infs = vec![None; n];
    let mut alphas = vec![None; n];
    let mut fallback_dates = Vec::new();
    let mut failures = Vec::new();

    match method {
        Method::Sfr | Method::Syc => {
            // Dates are independent here; weights depend only on the grid.
            let results: Vec<Result<f64, ExtractError>> = (0..n)
                .into_par_iter()
                .map(|t| {
                    let prices = panel.prices_at(t);
                    match method {
                        Method::Sfr => extract_sfr_with_alpha_bar(
                            &prices,
                            &cashflows,
                            grid,
                            config.alpha_fixed,
                            config.alpha_bar(),
                        ),
                        _ => extract_syc(&prices, &cashflows, grid, config.alpha_fixed),
                    }
                })
                .collect();
            for (t, r) in results.into_iter().enumerate() {
                match r {
                    Ok(f) => {
                        let (annual, f_inf) = canonical_pair(f);
                        values[t] = Some(annual);
                        f_infs[t] = Some(f_inf);
                    }
                    Err(e) => failures.push((dates[t], e.to_string())),
                }
            }
        }
        Method::Sdf => {
            // The multiple-root tie-break follows the previous date's level.
            let mut reference = DEFAULT_REFERENCE;
            for t in 0..n {
                let prices = panel.prices_at(t);
                match FocContext::new(&prices, &cashflows, grid, config.alpha_fixed)
                    .and_then(|ctx| solve_foc(&ctx, 0.0, 0.0, config.root_bracket, reference))
                {
                    Ok(f) => {
                        let (annual, f_inf) = canonical_pair(f);
                        values[t] = Some(annual);
                        f_infs[t] = Some(f_inf);
                        reference = f;
                    }
                    Err(e) => failures.push((dates[t], e.to_string())),
                }
            }
        }
        Method::Zjw => {
            let mut reference = config.f_prior;
            for t in 0..n {
                let prices = panel.prices_at(t);
                match zjw_extract_ref(&prices, &cashflows, grid, config, reference) {
                    Ok(out) => {
                        let (annual, f_inf) = canonical_pair(out.f_inf);
                        values[t] = Some(annual);
                        f_infs[t] = Some(f_inf);
                        alphas[t] = Some(out.alpha);
                        if out.alpha_fallback {
                            fallback_dates.push(dates[t]);
                        }
                        reference = out.f_inf;
                    }
                    Err(e) => failures.push((dates[t], e.to_string())),
                }
            }
        }
    }

    Ok(UfrSeries {
        method,
        dates,
        values,
        f_inf: f_infs,
        alpha_path: matches!(method, Method::Zjw).then_some(alphas),
        fallback_dates,
        failures,
    })
}
