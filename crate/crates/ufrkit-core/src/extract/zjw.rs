//! ZJW improved extraction: the SDF first-order condition with a prior
//! penalty `lambda (f_inf - f_prior)`, preceded by a feasible-region search
//! for the convergence speed.
//!
//! Feasibility of a grid α requires the sign condition at `f = 0` (the FOC
//! residual including the `-lambda f_prior` shift must be negative, which
//! guarantees a positive root) and convergence of the extrapolated
//! instantaneous forward to within `forward_gap_tol` of the extracted rate at
//! the convergence point. `alpha_star` is the smallest feasible grid point;
//! an empty feasible set falls back to the grid upper bound and is flagged.

use super::foc::{solve_foc, FocContext};
use super::{ExtractError, ZjwConfig};
use crate::curve::{fit_curve, CashflowMatrix, TermGrid};

const FORWARD_DIFF_STEP: f64 = 1e-4;

/// Outcome of the α feasibility search.
#[derive(Debug, Clone, Copy)]
pub struct AlphaSelection {
    pub alpha: f64,
    /// False when the feasible set was empty and the grid upper bound was
    /// used instead.
    pub feasible: bool,
    /// Extracted rate at the selected α, when the search solved it anyway.
    pub f_inf: Option<f64>,
}

/// Full two-step extraction result.
#[derive(Debug, Clone, Copy)]
pub struct ZjwExtraction {
    pub f_inf: f64,
    pub alpha: f64,
    pub alpha_fallback: bool,
}

/// Root of the penalized FOC for a fixed α.
pub fn zjw_foc_solve(
    prices: &[f64],
    cashflows: &CashflowMatrix,
    grid: &TermGrid,
    alpha: f64,
    lambda: f64,
    f_prior: f64,
) -> Result<f64, ExtractError> {
    zjw_foc_solve_ref(prices, cashflows, grid, alpha, lambda, f_prior, (1e-4, 0.20), f_prior)
}

pub(crate) fn zjw_foc_solve_ref(
    prices: &[f64],
    cashflows: &CashflowMatrix,
    grid: &TermGrid,
    alpha: f64,
    lambda: f64,
    f_prior: f64,
    bracket: (f64, f64),
    reference: f64,
) -> Result<f64, ExtractError> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(ExtractError::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    let ctx = FocContext::new(prices, cashflows, grid, alpha)?;
    solve_foc(&ctx, lambda, f_prior, bracket, reference)
}

/// Smallest grid α in the feasible set, or the grid upper bound flagged as
/// a fallback.
pub fn zjw_alpha_star(
    prices: &[f64],
    cashflows: &CashflowMatrix,
    grid: &TermGrid,
    config: &ZjwConfig,
) -> Result<AlphaSelection, ExtractError> {
    zjw_alpha_star_ref(prices, cashflows, grid, config, config.f_prior)
}

pub(crate) fn zjw_alpha_star_ref(
    prices: &[f64],
    cashflows: &CashflowMatrix,
    grid: &TermGrid,
    config: &ZjwConfig,
    reference: f64,
) -> Result<AlphaSelection, ExtractError> {
    config.validate()?;
    let mut ctx = FocContext::new(prices, cashflows, grid, config.alpha_grid.lo)?;
    for alpha in config.alpha_grid.points() {
        if alpha < config.alpha_min {
            continue;
        }
        ctx.alpha = alpha;
        // Sign condition: the penalized FOC at f = 0 must be negative.
        let at_zero = ctx.residual(0.0, config.lambda, config.f_prior);
        if !(at_zero < 0.0) {
            continue;
        }
        let f_alpha =
            match solve_foc(&ctx, config.lambda, config.f_prior, config.root_bracket, reference) {
                Ok(f) => f,
                Err(_) => continue,
            };
        let gap = match forward_gap(prices, cashflows, grid, alpha, f_alpha, config) {
            Ok(g) => g,
            Err(_) => continue,
        };
        if gap <= config.forward_gap_tol {
            return Ok(AlphaSelection { alpha, feasible: true, f_inf: Some(f_alpha) });
        }
    }
    Ok(AlphaSelection { alpha: config.alpha_grid.hi, feasible: false, f_inf: None })
}

/// `|forward(CP) - f_inf|` for a curve fitted at `(alpha, f_inf)`.
fn forward_gap(
    prices: &[f64],
    cashflows: &CashflowMatrix,
    grid: &TermGrid,
    alpha: f64,
    f_inf: f64,
    config: &ZjwConfig,
) -> Result<f64, ExtractError> {
    let curve = fit_curve(prices, cashflows, grid, alpha, f_inf)?;
    let fwd = curve.instantaneous_forward(config.convergence_point, FORWARD_DIFF_STEP)?;
    Ok((fwd - f_inf).abs())
}

/// Two-step ZJW extraction: select α, then solve the penalized FOC.
pub fn zjw_extract(
    prices: &[f64],
    cashflows: &CashflowMatrix,
    grid: &TermGrid,
    config: &ZjwConfig,
) -> Result<ZjwExtraction, ExtractError> {
    zjw_extract_ref(prices, cashflows, grid, config, config.f_prior)
}

pub(crate) fn zjw_extract_ref(
    prices: &[f64],
    cashflows: &CashflowMatrix,
    grid: &TermGrid,
    config: &ZjwConfig,
    reference: f64,
) -> Result<ZjwExtraction, ExtractError> {
    let sel = zjw_alpha_star_ref(prices, cashflows, grid, config, reference)?;
    let f_inf = match sel.f_inf {
        Some(f) => f,
        None => zjw_foc_solve_ref(
            prices,
            cashflows,
            grid,
            sel.alpha,
            config.lambda,
            config.f_prior,
            config.root_bracket,
            reference,
        )?,
    };
    Ok(ZjwExtraction { f_inf, alpha: sel.alpha, alpha_fallback: !sel.feasible })
}
