//! Endogenous UFR extraction.
//!
//! Four methods are provided: SDF (smoothest discount factor, root of a
//! first-order condition in `f_inf`), SFR and SYC (smoothest forward rate /
//! yield curve, affine combinations of observed yields with kernel-derived
//! weights), and the penalized ZJW variant of SDF with a prior anchor, a
//! data-driven feasible-region search for the convergence speed α and a
//! calibration of the penalty weight λ against the SFR and SYC series.

mod foc;
mod lambda;
mod series;
mod weights;
mod zjw;

pub use foc::extract_sdf;
pub(crate) use foc::FocContext;
pub use lambda::{calibrate_lambda, LambdaCalibration};
pub use series::{extract_series, UfrSeries};
pub use weights::{
    extract_sfr, extract_sfr_with_alpha_bar, extract_syc, sfr_syc_weights, sfr_syc_weights_with,
    SfrSycWeights, WeightMethod,
};
pub use zjw::{zjw_alpha_star, zjw_extract, zjw_foc_solve, AlphaSelection, ZjwExtraction};

use thiserror::Error;

use crate::curve::CurveError;
use crate::numerics::NumericsError;

#[derive(Debug, Clone, Error)]
pub enum ExtractError {
    #[error("cashflow matrix must be square and invertible for extraction: {0}")]
    NonInvertibleCashflows(String),
    #[error("no FOC root: no sign change in [{lo:.6}, {hi:.6}] after {expansions} bracket expansions")]
    NoRoot { lo: f64, hi: f64, expansions: usize },
    #[error("weight matrix is singular ({0})")]
    SingularWeights(String),
    #[error("curve error during extraction: {0}")]
    Curve(#[from] CurveError),
    #[error("numeric failure during extraction: {0}")]
    Numerics(#[from] NumericsError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("calibration failed at date {date}: {source}")]
    Calibration { date: chrono::NaiveDate, source: Box<ExtractError> },
    #[error("series has no usable dates")]
    EmptySeries,
}

/// UFR extraction method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sdf,
    Sfr,
    Syc,
    Zjw,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Sdf => "sdf",
            Method::Sfr => "sfr",
            Method::Syc => "syc",
            Method::Zjw => "zjw",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sdf" => Ok(Method::Sdf),
            "sfr" => Ok(Method::Sfr),
            "syc" => Ok(Method::Syc),
            "zjw" => Ok(Method::Zjw),
            other => Err(format!("unknown extraction method '{other}'")),
        }
    }
}

/// Evenly stepped search grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step).round() as usize;
        let mut pts: Vec<f64> = (0..=n).map(|k| self.lo + self.step * k as f64).collect();
        if let Some(last) = pts.last_mut() {
            if *last > self.hi {
                *last = self.hi;
            }
        }
        pts
    }
}

/// Configuration shared by the extraction methods. The ZJW-specific fields
/// are the prior anchor, penalty weight and the α feasibility search; the
/// fixed α is what SDF/SFR/SYC use.
#[derive(Debug, Clone, PartialEq)]
pub struct ZjwConfig {
    /// Prior belief about the UFR (continuously compounded).
    pub f_prior: f64,
    /// Penalty weight on `(f_inf - f_prior)^2`.
    pub lambda: f64,
    /// Lower bound of the α feasible region.
    pub alpha_min: f64,
    /// Maturity at which the extrapolated forward must have converged.
    pub convergence_point: f64,
    /// Tolerance on `|forward(CP) - f_inf|`.
    pub forward_gap_tol: f64,
    /// Search grid for α.
    pub alpha_grid: GridSpec,
    /// Root bracket for `f_inf`.
    pub root_bracket: (f64, f64),
    /// Convergence speed used by SDF/SFR/SYC extraction and projection.
    pub alpha_fixed: f64,
    /// Smoothed-kernel speed for the SFR weight matrix; defaults to α.
    pub alpha_bar: Option<f64>,
}

impl Default for ZjwConfig {
    fn default() -> Self {
        Self {
            f_prior: 0.045,
            lambda: 1.0,
            alpha_min: 0.05,
            convergence_point: 60.0,
            forward_gap_tol: 1e-4,
            alpha_grid: GridSpec { lo: 0.05, hi: 1.0, step: 0.001 },
            root_bracket: (1e-4, 0.20),
            alpha_fixed: 0.1,
            alpha_bar: None,
        }
    }
}

impl ZjwConfig {
    pub fn validate(&self) -> Result<(), ExtractError> {
        let pos = [
            ("f_prior", self.f_prior),
            ("alpha_min", self.alpha_min),
            ("convergence_point", self.convergence_point),
            ("forward_gap_tol", self.forward_gap_tol),
            ("alpha_grid.lo", self.alpha_grid.lo),
            ("alpha_grid.step", self.alpha_grid.step),
            ("alpha_fixed", self.alpha_fixed),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ExtractError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(ExtractError::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.alpha_grid.lo >= self.alpha_grid.hi {
            return Err(ExtractError::Config("alpha_grid.lo must be below alpha_grid.hi".into()));
        }
        if self.root_bracket.0 >= self.root_bracket.1 {
            return Err(ExtractError::Config("root_bracket.lo must be below root_bracket.hi".into()));
        }
        if let Some(ab) = self.alpha_bar {
            if !(ab > 0.0) {
                return Err(ExtractError::Config(format!("alpha_bar must be positive, got {ab}")));
            }
        }
        Ok(())
    }

    pub fn alpha_bar(&self) -> f64 {
        self.alpha_bar.unwrap_or(self.alpha_fixed)
    }
}
