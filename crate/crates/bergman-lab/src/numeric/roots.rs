//! Safeguarded scalar root finding and one-dimensional maximization.

use crate::{Error, Result};

/// Expand `hi` by doubling the distance from `lo` until `f` changes sign.
///
/// `f(lo)` must be negative (a value of `-inf` is accepted). Returns the
/// bracketing pair `(lo', hi)` where `f(lo') <= 0 <= f(hi)`, with `lo'` the
/// last doubling point left of the sign change.
pub fn expand_bracket<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi_init: f64,
    max_doublings: usize,
) -> Result<(f64, f64)> {
    let flo = f(lo);
    if flo > 0.0 {
        return Err(Error::Domain(format!(
            "expand_bracket: f(lo) = {flo} > 0 at lo = {lo}"
        )));
    }
    let mut prev = lo;
    let mut hi = if hi_init > lo { hi_init } else { lo + 1.0 };
    for _ in 0..max_doublings {
        if f(hi) >= 0.0 {
            return Ok((prev, hi));
        }
        prev = hi;
        hi = lo + 2.0 * (hi - lo);
    }
    Err(Error::NoBracket(max_doublings))
}

/// Plain bisection on a sign change. `f(a) <= 0 <= f(b)` required.
/// Stops when the interval is below `tol_x` (absolute).
pub fn bisect<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol_x: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let fa = f(a);
    if fa > 0.0 || f(b) < 0.0 {
        return Err(Error::Domain(format!(
            "bisect: no sign change on [{a}, {b}]"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        if (b - a) <= tol_x || mid <= a || mid >= b {
            return Ok(mid);
        }
        if f(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Newton iteration safeguarded by a trust bracket.
///
/// `f(lo) <= 0 <= f(hi)` required. A Newton step that leaves the bracket, or
/// fails to shrink `|f|`, is replaced by bisection. Converges when
/// `|f| <= tol_f` or the bracket width drops below `tol_x` (relative).
pub fn newton_bisect<F, D>(
    f: &F,
    df: &D,
    lo: f64,
    hi: f64,
    tol_f: f64,
    tol_x: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    let mut fx = f(x);
    for _ in 0..max_iter {
        if fx.abs() <= tol_f {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if (b - a) <= tol_x * b.abs().max(1.0) {
            return Ok(x);
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d.is_finite() && d != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        fx = f(x);
        if !fx.is_finite() {
            // Retreat to the midpoint of the trust bracket.
            x = 0.5 * (a + b);
            fx = f(x);
            if !fx.is_finite() {
                return Err(Error::NoConvergence(format!(
                    "non-finite residual near x = {x}"
                )));
            }
        }
    }
    if fx.abs() <= tol_f * 1e3 {
        Ok(x)
    } else {
        Err(Error::NoConvergence(format!(
            "newton_bisect: residual {fx:.3e} after {max_iter} iterations"
        )))
    }
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
/// Returns the abscissa of the maximum to absolute tolerance `tol_x`.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol_x: f64, max_iter: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol_x {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
