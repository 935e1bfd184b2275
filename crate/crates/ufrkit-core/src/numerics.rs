//! Shared numerical routines: guarded linear solves, bracketed root finding,
//! adaptive Simpson quadrature and golden-section minimization.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum NumericsError {
    #[error("matrix is singular or ill-conditioned: condition number {cond:.3e} exceeds {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },
}

/// Relative condition-number guard applied to every curve-fitting solve.
pub const COND_LIMIT: f64 = 1e12;

/// Solve `a x = b` by LU after an SVD-based condition check.
///
/// Returns the solution together with the 2-norm condition estimate.
pub fn solve_guarded(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    cond_limit: f64,
) -> Result<(DVector<f64>, f64), NumericsError> {
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > cond_limit {
        return Err(NumericsError::IllConditioned { cond, limit: cond_limit });
    }
    let lu = a.clone().lu();
    match lu.solve(b) {
        Some(x) => Ok((x, cond)),
        None => Err(NumericsError::IllConditioned { cond: f64::INFINITY, limit: cond_limit }),
    }
}

/// Locate every sign change of `f` on an even grid over `[lo, hi]`.
pub fn scan_sign_changes<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let h = (hi - lo) / steps as f64;
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for k in 1..=steps {
        let x = if k == steps { hi } else { lo + h * k as f64 };
        let fx = f(x);
        if f_prev == 0.0 {
            // Exact grid-point zero: record once and skip the adjacent cell.
            out.push((x_prev, x_prev));
        } else if fx != 0.0
            && fx.is_finite()
            && f_prev.is_finite()
            && (fx < 0.0) != (f_prev < 0.0)
        {
            out.push((x_prev, x));
        }
        x_prev = x;
        f_prev = fx;
    }
    if f_prev == 0.0 {
        out.push((x_prev, x_prev));
    }
    out
}

/// Bisection-secant hybrid on a bracket known to contain a sign change.
///
/// Iterates until `|f| < residual_tol` or the bracket collapses to machine
/// width; the sign change then pins the returned root to within one ulp.
pub fn refine_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, residual_tol: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    if a == b {
        return a;
    }
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!((fa < 0.0) != (fb < 0.0), "refine_root requires a sign change");
    let mut best = (a, fa.abs());
    for iter in 0..200 {
        // Secant proposal, guarded into the interior; every third step bisects
        // so the bracket width contracts geometrically no matter what.
        let mid = 0.5 * (a + b);
        let mut x = if fb != fa { b - fb * (b - a) / (fb - fa) } else { mid };
        if !(x > a.min(b) && x < a.max(b)) || iter % 3 == 2 {
            x = mid;
        }
        let fx = f(x);
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx == 0.0 || fx.abs() < residual_tol {
            return x;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a).abs() <= f64::EPSILON * (a.abs().max(b.abs()).max(1.0)) {
            break;
        }
    }
    // The bracket is machine-tight: the sign change pins the root to within
    // one ulp even when the local slope makes the residual tolerance
    // unrepresentable (huge penalty weights do exactly that).
    best.0
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Golden-section minimization on `[lo, hi]`; returns `(argmin, min)`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    x_tol: f64,
) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > x_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_root_finds_cubic_root() {
        let r = refine_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-12);
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn refine_root_handles_steep_slopes() {
        // Slope 1e8 makes |f| < 1e-10 unrepresentable; the root must still
        // come back accurate to an ulp.
        let r = refine_root(|x| 1e8 * (x - 0.045), 0.0, 0.2, 1e-10);
        assert!((r - 0.045).abs() < 1e-15);
    }

    #[test]
    fn scan_finds_both_roots() {
        let roots = scan_sign_changes(|x| (x - 1.0) * (x - 3.0), 0.0, 4.0, 64);
        assert_eq!(roots.len(), 2);
        assert!(roots[0].0 <= 1.0 && 1.0 <= roots[0].1);
        assert!(roots[1].0 <= 3.0 && 3.0 <= roots[1].1);
    }

    #[test]
    fn scan_with_off_grid_roots() {
        let roots = scan_sign_changes(|x| (x - 0.41) * (x - 2.77), 0.0, 4.0, 64);
        assert_eq!(roots.len(), 2);
        assert!(roots[0].0 < 0.41 && 0.41 < roots[0].1);
        assert!(roots[1].0 < 2.77 && 2.77 < roots[1].1);
    }

    #[test]
    fn simpson_integrates_exp() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn golden_section_minimizes_parabola() {
        let (x, _) = golden_section_min(|x| (x - 0.7) * (x - 0.7), 0.0, 2.0, 1e-10);
        assert!((x - 0.7).abs() < 1e-8);
    }

    #[test]
    fn guarded_solve_rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_row_slice(&[1.0, 2.0]);
        assert!(solve_guarded(&a, &b, 1e12).is_err());
    }
}
