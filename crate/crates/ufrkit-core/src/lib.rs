//! Smith-Wilson term-structure toolkit: endogenous UFR extraction (SDF, SFR,
//! SYC and the penalized ZJW variant with data-driven α and λ selection),
//! a set of linear and nonlinear forecasting learners under a rolling
//! out-of-sample protocol, UFR-based curve projection, unit-root/correlation
//! statistics and model-agnostic Shapley attribution.
//!
//! All rates are continuously compounded decimals internally; the reported
//! UFR is annually compounded with `f_inf = ln(1 + ufr)` by construction.

pub mod curve;
pub mod extract;
pub mod numerics;
pub mod seed;
pub mod stats;

pub use curve::{
    fit_curve, wilson_h, wilson_w, wilson_wbar, CashflowMatrix, CurveError, QuotePanel,
    SmithWilsonCurve, TermGrid,
};
pub use extract::{
    calibrate_lambda, extract_sdf, extract_series, extract_sfr, extract_syc, sfr_syc_weights,
    zjw_alpha_star, zjw_extract, zjw_foc_solve, AlphaSelection, ExtractError, GridSpec,
    LambdaCalibration, Method, UfrSeries, ZjwConfig, ZjwExtraction,
};
pub use stats::{
    adf_test, describe, pearson_matrix, pp_test, PearsonMatrix, SeriesStats, SignificanceBand,
    StatsError, UnitRootResult, UnitRootSpec,
};

/// Annually-compounded rate for a continuously-compounded one.
pub fn annual_from_continuous(f_inf: f64) -> f64 {
    f64::exp_m1(f_inf)
}

/// Continuously-compounded rate for an annually-compounded one.
pub fn continuous_from_annual(rate: f64) -> f64 {
    f64::ln_1p(rate)
}
