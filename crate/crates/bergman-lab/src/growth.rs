//! Growth function of a majorant class.
//!
//! For a majorant with `J = M^{1/x}` the defining equation
//!
//! ```text
//!     N^2 J(N) J'(N) e^{2 N J'(N)/J(N)} = k
//! ```
//!
//! has a unique root `N(k) > x0` once `k` exceeds the threshold
//! `k0 = x0^2 J(x0) J'(x0) e^{2 x0 J'(x0)/J(x0)}`, and the growth function is
//! `f(k) = N(k) sqrt(J'(N)/J(N)) / sqrt(log k)` (clamped to `f(k0)` below the
//! threshold). Root finding works on the logarithmic form
//!
//! ```text
//!     2 log N + 2 log J + log beta + 2 N beta = log k,     beta = J'/J,
//! ```
//!
//! which cannot overflow. This module also solves the constrained
//! maximization of `k r^2` over `r = eps M(N)^{-1/N}`, `k r^2 = N log(1/eps)`
//! whose optimum is comparable to `f(k)^2 log k`.

use crate::majorant::Majorant;
use crate::numeric::roots;
use crate::{Error, Result};

/// Residual contract for all root solves in this module.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Solution of the defining equation at one `k`.
#[derive(Debug, Clone)]
pub struct GrowthSolution {
    pub k: f64,
    /// Root `N(k)` of the defining equation (or `x0` when clamped).
    pub n_of_k: f64,
    /// Growth function value `f(k)`.
    pub f_of_k: f64,
    /// `|LHS(N) - k| / k` at the returned root.
    pub residual: f64,
    /// Threshold below which `f` is clamped.
    pub k0: f64,
    /// `J'(N)/J(N)` at the root.
    pub beta: f64,
    /// True when `k < k0` and the clamp `f(k) = f(k0)` was applied.
    pub clamped: bool,
}

/// Maximizer of `k r^2` under the decay constraints, with the comparability
/// data for the admissible upper cutoff `eps1`.
#[derive(Debug, Clone)]
pub struct DecayOptimum {
    /// Maximizing radius, amplitude, and degree.
    pub r_bar: f64,
    pub eps_bar: f64,
    pub n_bar: f64,
    /// Maximized `k r^2` over the admissible interval.
    pub max_kr2: f64,
    /// Admissible upper cutoff and its comparability constant
    /// `C(eps1) = 4 log(1/eps1) / eps1^2`.
    pub eps1: f64,
    pub c_eps1: f64,
    /// Unconstrained interior critical point of `h(eps) = N(eps) log(1/eps)`.
    pub eps_crit: f64,
    /// Lower end of the admissible interval (where `g^{-1}` starts existing).
    pub eps0: f64,
    /// True when `eps_crit > eps1` and the maximum sits at the cutoff.
    pub clamped: bool,
}

/// Logarithmic form of the defining equation minus `log k`.
/// Returns `-inf` where `beta <= 0` (left of the threshold).
fn log_lhs(m: &Majorant, n: f64) -> f64 {
    let beta = m.beta_raw(n);
    if beta <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let log_j = m.log_m(n) / n;
    2.0 * n.ln() + 2.0 * log_j + beta.ln() + 2.0 * n * beta
}

/// Derivative of `log_lhs` in `N`: `2/N + 4 beta + beta'/beta + 2 N beta'`.
fn dlog_lhs(m: &Majorant, n: f64) -> f64 {
    let beta = m.beta_raw(n);
    let beta_p = m.beta_prime_raw(n);
    2.0 / n + 4.0 * beta + beta_p / beta + 2.0 * n * beta_p
}

/// Threshold `k0` evaluated from the defining formula at `x0`.
pub fn k0_of(m: &Majorant) -> Result<f64> {
    if let Some(&v) = m.k0_cache().get() {
        return Ok(v);
    }
    let x0 = m.x0()?;
    let j = m.j_raw(x0);
    let beta = m.beta_raw(x0);
    let jp = j * beta;
    let v = if jp <= 0.0 {
        // Interior sign change: J'(x0) = 0 makes the product collapse.
        0.0
    } else {
        x0 * x0 * j * jp * (2.0 * x0 * beta).exp()
    };
    let _ = m.k0_cache().set(v);
    Ok(v)
}

/// Solve the defining equation for `N(k)`. Requires `k > k0`.
pub fn solve_n(m: &Majorant, k: f64) -> Result<GrowthSolution> {
    let k0 = k0_of(m)?;
    if !(k > k0) {
        return Err(Error::BelowThreshold { k, k0 });
    }
    let x0 = m.x0()?;
    let target = k.ln();
    let f = |n: f64| log_lhs(m, n) - target;

    // The log-form LHS is strictly increasing on (x0, inf) and below log k at
    // x0 (where it equals log k0, possibly -inf); expand to the right.
    let (lo, hi) = roots::expand_bracket(&f, x0, (2.0 * x0).max(x0 + 1.0), 200)?;
    let df = |n: f64| dlog_lhs(m, n);
    let n = roots::newton_bisect(&f, &df, lo, hi, 1e-13, 1e-15, 200)?;

    let residual = (f(n).exp() - 1.0).abs();
    if residual > RESIDUAL_TOL {
        return Err(Error::NoConvergence(format!(
            "defining equation residual {residual:.3e} at k = {k}"
        )));
    }
    let beta = m.beta_raw(n);
    let f_val = if k > 1.0 {
        n * beta.sqrt() / k.ln().sqrt()
    } else {
        f64::NAN
    };
    Ok(GrowthSolution {
        k,
        n_of_k: n,
        f_of_k: f_val,
        residual,
        k0,
        beta,
        clamped: false,
    })
}

/// Growth function value, with the clamp `f(k) = f(k0)` for `1 < k < k0`.
pub fn f_of_k(m: &Majorant, k: f64) -> Result<f64> {
    Ok(growth_profile(m, k)?.f_of_k)
}

/// Full solution record including the clamp region (used by the CSV table).
pub fn growth_profile(m: &Majorant, k: f64) -> Result<GrowthSolution> {
    if !(k > 1.0) {
        return Err(Error::Domain(format!("f(k) needs k > 1, got k = {k}")));
    }
    let k0 = k0_of(m)?;
    if k > k0 {
        return solve_n(m, k);
    }
    // Clamp: evaluate at the threshold. k0 > 1 here since k0 >= k > 1 failed
    // the branch above only when k <= k0.
    let x0 = m.x0()?;
    let beta = m.beta_raw(x0);
    let f_val = x0 * beta.max(0.0).sqrt() / k0.ln().sqrt();
    Ok(GrowthSolution {
        k,
        n_of_k: x0,
        f_of_k: f_val,
        residual: 0.0,
        k0,
        beta,
        clamped: true,
    })
}

/// `g(x) = x J(x)^2 = x M(x)^{2/x}`.
pub fn g_of(m: &Majorant, x: f64) -> Result<f64> {
    m.g(x)
}

/// Inverse of `g` on its increasing branch `(x0, inf)` by bracketed bisection;
/// residual below `RESIDUAL_TOL` relative.
pub fn g_inverse(m: &Majorant, y: f64) -> Result<f64> {
    let x0 = m.x0()?;
    let g_x0 = m.g_raw(x0);
    if y < g_x0 {
        return Err(Error::OutOfRange { value: y, lo: g_x0 });
    }
    let target = y.ln();
    let f = |x: f64| m.log_m(x) * 2.0 / x + x.ln() - target;
    if f(x0) >= 0.0 {
        return Ok(x0);
    }
    let (lo, hi) = roots::expand_bracket(&f, x0, (2.0 * x0).max(x0 + 1.0), 200)?;
    let x = roots::bisect(&f, lo, hi, 1e-14 * hi.max(1.0), 250)?;
    let residual = (f(x).exp() - 1.0).abs();
    if residual > RESIDUAL_TOL {
        return Err(Error::NoConvergence(format!(
            "g_inverse residual {residual:.3e} at y = {y}"
        )));
    }
    Ok(x)
}

/// Region boundaries at scale `k`: `(gamma sqrt(log k / k), f sqrt(log k / k))`.
pub fn region_boundaries(k: f64, gamma: f64, f_val: f64) -> Result<(f64, f64)> {
    if !(k > 1.0) || !(gamma > 0.0) {
        return Err(Error::Domain(format!(
            "region boundaries need k > 1 and gamma > 0 (k = {k}, gamma = {gamma})"
        )));
    }
    if f_val < gamma {
        return Err(Error::Domain(format!(
            "invalid region spec: f = {f_val} < gamma = {gamma}"
        )));
    }
    let scale = (k.ln() / k).sqrt();
    Ok((gamma * scale, f_val * scale))
}

/// `t(eps) = eps^2 / log(1/eps)`, strictly increasing on (0, 1).
fn t_of_eps(eps: f64) -> f64 {
    eps * eps / (1.0 / eps).ln()
}

/// `h(eps) = N(eps) log(1/eps)` with `N(eps) = g^{-1}(k t(eps))`.
fn h_of_eps(m: &Majorant, k: f64, eps: f64) -> Result<f64> {
    let n = g_inverse(m, k * t_of_eps(eps))?;
    Ok(n * (1.0 / eps).ln())
}

/// Sign of `h'(eps)` from the closed form
/// `h' = [2 log(1/eps) g + g - N g'] / (eps g')`; `g' > 0` right of `x0`.
fn h_prime_sign(m: &Majorant, k: f64, eps: f64) -> Result<f64> {
    let n = g_inverse(m, k * t_of_eps(eps))?;
    let g = m.g_raw(n);
    let gp = m.g_prime_raw(n);
    Ok(2.0 * (1.0 / eps).ln() * g + g - n * gp)
}

/// Maximize `k r^2` subject to `r = eps M(N)^{-1/N}`, `k r^2 = N log(1/eps)`,
/// `eps <= eps1`. The interior critical point is located by golden-section
/// search on `h`, refined by bisection on the sign of `h'`; if it exceeds
/// `eps1` the admissible maximum sits at the cutoff and both are reported.
pub fn optimize_decay(m: &Majorant, k: f64, eps1: f64) -> Result<DecayOptimum> {
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(Error::Domain(format!("eps1 must lie in (0,1), got {eps1}")));
    }
    let k0 = k0_of(m)?;
    if !(k > k0) {
        return Err(Error::BelowThreshold { k, k0 });
    }
    let x0 = m.x0()?;
    let g_x0 = m.g_raw(x0);
    if k * t_of_eps(eps1) < g_x0 {
        return Err(Error::KTooSmallForEps1 { k, eps1 });
    }

    // eps0(k): unique solution of k t(eps) = g(x0); below it g^{-1} is empty.
    let eps0 = {
        let f = |ln_eps: f64| (k * t_of_eps(ln_eps.exp())).ln() - g_x0.ln();
        let lo = (1e-120f64).ln();
        let hi = (1.0 - 1e-12f64).ln();
        if f(lo) >= 0.0 {
            0.0
        } else {
            roots::bisect(&f, lo, hi, 1e-13, 300)?.exp()
        }
    };

    // Interior critical point of h on (eps0, 1).
    let lo = (eps0 * (1.0 + 1e-9)).max(1e-120);
    let hi = 1.0 - 1e-9;
    let h = |eps: f64| h_of_eps(m, k, eps).unwrap_or(f64::NEG_INFINITY);
    let guess = roots::golden_max(&h, lo, hi, 1e-6 * hi, 300);
    let hp = |eps: f64| -h_prime_sign(m, k, eps).unwrap_or(f64::NAN);
    // Bracket the sign change of h' around the golden-section estimate.
    let mut blo = (guess * 0.9).max(lo);
    let mut bhi = (guess * 1.1).min(hi);
    while hp(blo) > 0.0 && blo > lo * 1.0000001 {
        blo = (blo * 0.7).max(lo);
    }
    while hp(bhi) < 0.0 && bhi < hi {
        bhi = (bhi * 1.2).min(hi);
    }
    let eps_crit = roots::bisect(&hp, blo, bhi, 1e-13, 300)?;

    let clamped = eps_crit > eps1;
    let eps_bar = if clamped { eps1 } else { eps_crit };
    let n_bar = g_inverse(m, k * t_of_eps(eps_bar))?;
    let max_kr2 = n_bar * (1.0 / eps_bar).ln();
    let r_bar = eps_bar * (-m.log_m(n_bar) / n_bar).exp();
    let c_eps1 = 4.0 * (1.0 / eps1).ln() / (eps1 * eps1);

    Ok(DecayOptimum {
        r_bar,
        eps_bar,
        n_bar,
        max_kr2,
        eps1,
        c_eps1,
        eps_crit,
        eps0,
        clamped,
    })
}

/// Smallest `k` from which `f` is provably strictly increasing: the point
/// where `2 log J(N) + log(N^2 beta) = 1` (the sign condition of `(f^2)'`),
/// mapped through the defining equation. Returns `k0` when the condition
/// already holds at the threshold.
pub fn monotone_from(m: &Majorant) -> Result<f64> {
    let x0 = m.x0()?;
    let k0 = k0_of(m)?;
    let cond = |n: f64| {
        let beta = m.beta_raw(n);
        if beta <= 0.0 {
            return f64::NEG_INFINITY;
        }
        2.0 * m.log_m(n) / n + (n * n * beta).ln() - 1.0
    };
    if cond(x0.max(m.x_min() * (1.0 + 1e-9))) >= 0.0 {
        return Ok(k0);
    }
    let (lo, hi) = roots::expand_bracket(&cond, x0, (2.0 * x0).max(x0 + 1.0), 200)?;
    let n_cond = roots::bisect(&cond, lo, hi, 1e-12, 200)?;
    Ok(log_lhs(m, n_cond).exp().max(k0))
}
