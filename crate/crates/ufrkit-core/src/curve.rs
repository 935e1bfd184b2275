//! Smith-Wilson curve machinery: Wilson kernels, curve fitting against quoted
//! prices, discounting, pricing and yield reconstruction.
//!
//! The discount function is `P(tau) = exp(-f_inf*tau) + sum_i xi_i sum_j
//! c_ij W(tau, u_j)` with `W(t, u) = exp(-f_inf*(t+u)) * H(t, u)` and the
//! kernel `H(t, u) = alpha*min - 0.5*exp(-alpha*max)*(exp(alpha*min) -
//! exp(-alpha*min))`. Fitting solves the linear system that reprices the
//! inputs exactly; everything downstream (extraction, projection) reuses the
//! same pricing path so degenerate-forecast identities hold bit for bit.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::numerics::{self, NumericsError};

#[derive(Debug, Clone, Error)]
pub enum CurveError {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },
    #[error("term grid invalid: {0}")]
    Grid(String),
    #[error("cashflow matrix invalid: {0}")]
    Cashflows(String),
    #[error("quote panel invalid: {0}")]
    Panel(String),
    #[error("curve fit failed: {0}")]
    Fit(#[from] NumericsError),
}

fn check_finite(op: &'static str, vals: &[(&str, f64)]) -> Result<(), CurveError> {
    for (name, v) in vals {
        if !v.is_finite() {
            return Err(CurveError::Domain { op, msg: format!("{name} = {v} is not finite") });
        }
    }
    Ok(())
}

/// Wilson kernel `H(t, u, alpha)`; symmetric in `(t, u)`.
pub fn wilson_h(t: f64, u: f64, alpha: f64) -> Result<f64, CurveError> {
    check_finite("wilson_h", &[("t", t), ("u", u), ("alpha", alpha)])?;
    if alpha <= 0.0 || t < 0.0 || u < 0.0 {
        return Err(CurveError::Domain {
            op: "wilson_h",
            msg: format!("requires alpha > 0 and t, u >= 0 (t={t}, u={u}, alpha={alpha})"),
        });
    }
    Ok(h_raw(t, u, alpha))
}

#[inline]
pub(crate) fn h_raw(t: f64, u: f64, alpha: f64) -> f64 {
    let (mn, mx) = if t <= u { (t, u) } else { (u, t) };
    alpha * mn - 0.5 * (-alpha * mx).exp() * ((alpha * mn).exp() - (-alpha * mn).exp())
}

/// Wilson function `W(t, u) = exp(-f_inf*(t+u)) * H(t, u, alpha)`.
pub fn wilson_w(t: f64, u: f64, alpha: f64, f_inf: f64) -> Result<f64, CurveError> {
    check_finite("wilson_w", &[("t", t), ("u", u), ("alpha", alpha), ("f_inf", f_inf)])?;
    if alpha <= 0.0 || t < 0.0 || u < 0.0 {
        return Err(CurveError::Domain {
            op: "wilson_w",
            msg: format!("requires alpha > 0 and t, u >= 0 (t={t}, u={u}, alpha={alpha})"),
        });
    }
    Ok(w_raw(t, u, alpha, f_inf))
}

#[inline]
pub(crate) fn w_raw(t: f64, u: f64, alpha: f64, f_inf: f64) -> f64 {
    (-f_inf * (t + u)).exp() * h_raw(t, u, alpha)
}

/// Smoothed Wilson kernel used by the SFR weight matrix; the indicator term
/// is active iff `t <= u`.
pub fn wilson_wbar(t: f64, u: f64, alpha_bar: f64) -> Result<f64, CurveError> {
    check_finite("wilson_wbar", &[("t", t), ("u", u), ("alpha_bar", alpha_bar)])?;
    if alpha_bar <= 0.0 || t < 0.0 {
        return Err(CurveError::Domain {
            op: "wilson_wbar",
            msg: format!("requires alpha_bar > 0 and t >= 0 (t={t}, alpha_bar={alpha_bar})"),
        });
    }
    if u <= 0.0 {
        return Err(CurveError::Domain {
            op: "wilson_wbar",
            msg: format!("u must be positive (u = {u} divides by u^2)"),
        });
    }
    Ok(wbar_raw(t, u, alpha_bar))
}

#[inline]
pub(crate) fn wbar_raw(t: f64, u: f64, ab: f64) -> f64 {
    let k = 0.5 * ab * ab * u * u;
    let mut v = 1.0 - (-ab * t).exp() * ((ab * u).cosh() - 1.0) / k;
    if t <= u {
        let d = u - t;
        v += ((ab * d).cosh() - 1.0 - 0.5 * ab * ab * d * d) / k;
    }
    v
}

/// Payment-date grid `u_1 < u_2 < ... < u_J`, all positive, in years.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGrid {
    maturities: Vec<f64>,
}

impl TermGrid {
    pub fn new(maturities: Vec<f64>) -> Result<Self, CurveError> {
        if maturities.is_empty() {
            return Err(CurveError::Grid("at least one maturity required".into()));
        }
        for (j, &u) in maturities.iter().enumerate() {
            if !u.is_finite() || u <= 0.0 {
                return Err(CurveError::Grid(format!("maturity #{j} = {u} must be positive")));
            }
            if j > 0 && u <= maturities[j - 1] {
                return Err(CurveError::Grid(format!(
                    "maturities must be strictly increasing ({} then {u})",
                    maturities[j - 1]
                )));
            }
        }
        Ok(Self { maturities })
    }

    pub fn maturities(&self) -> &[f64] {
        &self.maturities
    }

    pub fn len(&self) -> usize {
        self.maturities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maturities.is_empty()
    }

    pub fn max(&self) -> f64 {
        *self.maturities.last().unwrap()
    }
}

/// Cash flows `c_ij` per instrument `i` and payment date `j`; `J >= N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CashflowMatrix {
    entries: DMatrix<f64>,
    is_identity: bool,
}

impl CashflowMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self, CurveError> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(CurveError::Cashflows("empty matrix".into()));
        }
        if entries.ncols() < entries.nrows() {
            return Err(CurveError::Cashflows(format!(
                "J >= N required, got N = {} instruments over J = {} dates",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(CurveError::Cashflows("non-finite entry".into()));
        }
        let is_identity = entries.is_square()
            && entries
                .row_iter()
                .enumerate()
                .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| v == f64::from(i == j)));
        Ok(Self { entries, is_identity })
    }

    /// Zero-coupon construction: one unit cash flow per grid date.
    pub fn identity(n: usize) -> Self {
        Self { entries: DMatrix::identity(n, n), is_identity: true }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n_instruments(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_dates(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_identity(&self) -> bool {
        self.is_identity
    }
}

/// Dated cross-sections of continuously-compounded zero rates on a fixed grid.
#[derive(Debug, Clone)]
pub struct QuotePanel {
    dates: Vec<NaiveDate>,
    yields: DMatrix<f64>,
    grid: TermGrid,
}

impl QuotePanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        yields: DMatrix<f64>,
        grid: TermGrid,
    ) -> Result<Self, CurveError> {
        if dates.is_empty() {
            return Err(CurveError::Panel("no dates".into()));
        }
        if dates.len() != yields.nrows() {
            return Err(CurveError::Panel(format!(
                "{} dates but {} yield rows",
                dates.len(),
                yields.nrows()
            )));
        }
        if yields.ncols() != grid.len() {
            return Err(CurveError::Panel(format!(
                "{} yield columns but {} grid maturities",
                yields.ncols(),
                grid.len()
            )));
        }
        if yields.iter().any(|v| !v.is_finite()) {
            return Err(CurveError::Panel("missing or non-finite yield cell".into()));
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(CurveError::Panel(format!(
                    "dates must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { dates, yields, grid })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn grid(&self) -> &TermGrid {
        &self.grid
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn yields(&self) -> &DMatrix<f64> {
        &self.yields
    }

    pub fn yields_at(&self, t: usize) -> Vec<f64> {
        self.yields.row(t).iter().copied().collect()
    }

    /// Zero-coupon prices `m_j = exp(-y_j * u_j)` for date index `t`.
    pub fn prices_at(&self, t: usize) -> Vec<f64> {
        self.grid
            .maturities()
            .iter()
            .enumerate()
            .map(|(j, &u)| (-self.yields[(t, j)] * u).exp())
            .collect()
    }
}

/// Fitted Smith-Wilson curve: convergence speed, continuously-compounded UFR
/// and the fit weights over a grid of cash flows. Immutable after fitting.
#[derive(Debug, Clone)]
pub struct SmithWilsonCurve {
    alpha: f64,
    f_inf: f64,
    xi: DVector<f64>,
    grid: TermGrid,
    cashflows: CashflowMatrix,
}

/// Fit the weight vector so that the curve reprices `prices` exactly.
pub fn fit_curve(
    prices: &[f64],
    cashflows: &CashflowMatrix,
    grid: &TermGrid,
    alpha: f64,
    f_inf: f64,
) -> Result<SmithWilsonCurve, CurveError> {
    if prices.len() != cashflows.n_instruments() {
        return Err(CurveError::Cashflows(format!(
            "{} prices for {} instruments",
            prices.len(),
            cashflows.n_instruments()
        )));
    }
    if cashflows.n_dates() != grid.len() {
        return Err(CurveError::Cashflows(format!(
            "{} cash-flow dates but {} grid maturities",
            cashflows.n_dates(),
            grid.len()
        )));
    }
    check_finite("fit_curve", &[("alpha", alpha), ("f_inf", f_inf)])?;
    if alpha <= 0.0 {
        return Err(CurveError::Domain { op: "fit_curve", msg: format!("alpha = {alpha} <= 0") });
    }
    if prices.iter().any(|p| !p.is_finite()) {
        return Err(CurveError::Domain { op: "fit_curve", msg: "non-finite price".into() });
    }

    let u = grid.maturities();
    let n = cashflows.n_instruments();
    let j = grid.len();
    let c = cashflows.as_matrix();

    let mut w = DMatrix::zeros(j, j);
    for a in 0..j {
        for b in 0..j {
            w[(a, b)] = w_raw(u[a], u[b], alpha, f_inf);
        }
    }
    // Gram matrix C W C^T and residual prices against the flat-UFR discount.
    let gram = c * &w * c.transpose();
    let d = DVector::from_iterator(j, u.iter().map(|&uj| (-f_inf * uj).exp()));
    let target = DVector::from_row_slice(prices) - c * d;

    let (mut xi, _cond) = numerics::solve_guarded(&gram, &target, numerics::COND_LIMIT)?;
    // One step of iterative refinement keeps repricing at solver precision
    // even near the condition-number guard.
    let resid = &target - &gram * &xi;
    if let Some(dx) = gram.clone().lu().solve(&resid) {
        xi += dx;
    }
    debug_assert_eq!(xi.len(), n);

    Ok(SmithWilsonCurve { alpha, f_inf, xi, grid: grid.clone(), cashflows: cashflows.clone() })
}

impl SmithWilsonCurve {
    /// Assemble a curve directly from parameters (synthetic generation and
    /// projection reuse this).
    pub fn from_parts(
        alpha: f64,
        f_inf: f64,
        xi: Vec<f64>,
        grid: TermGrid,
        cashflows: CashflowMatrix,
    ) -> Result<Self, CurveError> {
        check_finite("from_parts", &[("alpha", alpha), ("f_inf", f_inf)])?;
        if alpha <= 0.0 {
            return Err(CurveError::Domain { op: "from_parts", msg: format!("alpha = {alpha} <= 0") });
        }
        if xi.len() != cashflows.n_instruments() {
            return Err(CurveError::Cashflows(format!(
                "{} weights for {} instruments",
                xi.len(),
                cashflows.n_instruments()
            )));
        }
        if cashflows.n_dates() != grid.len() {
            return Err(CurveError::Cashflows("cash-flow dates do not match grid".into()));
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(CurveError::Domain { op: "from_parts", msg: "non-finite xi".into() });
        }
        Ok(Self { alpha, f_inf, xi: DVector::from_vec(xi), grid, cashflows })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn f_inf(&self) -> f64 {
        self.f_inf
    }

    pub fn xi(&self) -> &[f64] {
        self.xi.as_slice()
    }

    pub fn grid(&self) -> &TermGrid {
        &self.grid
    }

    pub fn cashflows(&self) -> &CashflowMatrix {
        &self.cashflows
    }

    /// Discount factor under an overridden UFR, sharing the exact pricing
    /// arithmetic with `discount`; projection relies on this being bitwise
    /// identical when `f_inf` equals the fitted value.
    pub(crate) fn discount_with(&self, tau: f64, f_inf: f64) -> f64 {
        let u = self.grid.maturities();
        let c = self.cashflows.as_matrix();
        let base = (-f_inf * tau).exp();
        let mut acc = 0.0;
        if self.cashflows.is_identity() {
            for (i, &ui) in u.iter().enumerate() {
                acc += self.xi[i] * w_raw(tau, ui, self.alpha, f_inf);
            }
        } else {
            for i in 0..c.nrows() {
                let mut inner = 0.0;
                for (jj, &uj) in u.iter().enumerate() {
                    inner += c[(i, jj)] * w_raw(tau, uj, self.alpha, f_inf);
                }
                acc += self.xi[i] * inner;
            }
        }
        base + acc
    }

    /// Discount factor `P(tau)`.
    pub fn discount(&self, tau: f64) -> Result<f64, CurveError> {
        check_finite("discount", &[("tau", tau)])?;
        if tau < 0.0 {
            return Err(CurveError::Domain { op: "discount", msg: format!("tau = {tau} < 0") });
        }
        Ok(self.discount_with(tau, self.f_inf))
    }

    /// Continuously-compounded zero rate `-ln P(tau) / tau`; `tau = 0` is a
    /// domain error (the instantaneous limit is not computed).
    pub fn yield_at(&self, tau: f64) -> Result<f64, CurveError> {
        if tau == 0.0 {
            return Err(CurveError::Domain {
                op: "yield_at",
                msg: "tau = 0 (instantaneous rate limit is not computed)".into(),
            });
        }
        let p = self.discount(tau)?;
        if p <= 0.0 {
            return Err(CurveError::Domain {
                op: "yield_at",
                msg: format!("non-positive discount {p} at tau = {tau}"),
            });
        }
        Ok(-p.ln() / tau)
    }

    /// Price a cash-flow book against this curve.
    pub fn price_instruments(&self, cashflows: &CashflowMatrix) -> Result<Vec<f64>, CurveError> {
        if cashflows.n_dates() != self.grid.len() {
            return Err(CurveError::Cashflows("cash-flow dates do not match curve grid".into()));
        }
        let u = self.grid.maturities();
        let p: Vec<f64> = u.iter().map(|&uj| self.discount_with(uj, self.f_inf)).collect();
        let c = cashflows.as_matrix();
        Ok((0..c.nrows())
            .map(|i| (0..c.ncols()).map(|jj| c[(i, jj)] * p[jj]).sum())
            .collect())
    }

    /// Prices of the curve's own instruments.
    pub fn model_prices(&self) -> Vec<f64> {
        self.price_instruments(&self.cashflows).expect("own cashflows always match")
    }

    /// Instantaneous forward `-d ln P / d tau` by central differencing.
    pub fn instantaneous_forward(&self, tau: f64, step: f64) -> Result<f64, CurveError> {
        let lo = (tau - step).max(0.0);
        let hi = tau + step;
        let p_lo = self.discount(lo)?;
        let p_hi = self.discount(hi)?;
        if p_lo <= 0.0 || p_hi <= 0.0 {
            return Err(CurveError::Domain {
                op: "instantaneous_forward",
                msg: format!("non-positive discount near tau = {tau}"),
            });
        }
        Ok(-(p_hi.ln() - p_lo.ln()) / (hi - lo))
    }

    /// One-year forward rate `-ln(P(tau+1)/P(tau))`.
    pub fn one_year_forward(&self, tau: f64) -> Result<f64, CurveError> {
        let p0 = self.discount(tau)?;
        let p1 = self.discount(tau + 1.0)?;
        if p0 <= 0.0 || p1 <= 0.0 {
            return Err(CurveError::Domain {
                op: "one_year_forward",
                msg: format!("non-positive discount near tau = {tau}"),
            });
        }
        Ok(-(p1 / p0).ln())
    }
}
