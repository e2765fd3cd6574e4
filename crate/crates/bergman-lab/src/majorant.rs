//! Admissible majorant classes.
//!
//! A majorant is a positive function `M` on `(x_min, inf)` with `log M`
//! strictly convex and `J(x) = M(x)^{1/x}` eventually increasing and
//! unbounded. Everything downstream (the growth solver, the decay
//! optimization) consumes a majorant only through `log M` and its first two
//! derivatives, so that is what the type stores.
//!
//! Built-ins:
//!  * `Majorant::gevrey(s)`: `M(x) = x^{(s-1)x}`, the Gevrey-class scale.
//!  * `Majorant::denjoy(level)`: iterated-logarithm quasi-analytic scales
//!    `M(x) = (log x)^x`, `(log x)^x (log log x)^x`, ...
//!  * `Majorant::from_log_m` / `Majorant::from_table` for custom classes.

use crate::numeric::diff;
use crate::numeric::roots;
use crate::numeric::spline::Pchip;
use crate::numeric::{geometric_grid, Precision};
use crate::{Error, Result};
use std::sync::{Arc, OnceLock};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of points in validation / scan grids.
pub const SCAN_POINTS: usize = 512;

/// Absolute tolerance for the threshold `x0`.
pub const X0_TOL: f64 = 1e-8;

#[derive(Clone)]
pub struct Majorant {
    name: String,
    x_min: f64,
    log_m: RealFn,
    dlog_m: RealFn,
    d2log_m: RealFn,
    x0_cache: Arc<OnceLock<f64>>,
    k0_cache: Arc<OnceLock<f64>>,
}

impl std::fmt::Debug for Majorant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Majorant")
            .field("name", &self.name)
            .field("x_min", &self.x_min)
            .finish()
    }
}

/// Outcome of the standing-hypothesis checks.
#[derive(Debug, Clone)]
pub struct MajorantValidation {
    /// Minimum of the second derivative of `log M` over the scan grid.
    pub min_d2log_m: f64,
    /// Worst relative mismatch between the supplied first derivative and a
    /// central finite difference of `log M`.
    pub max_dlog_m_mismatch: f64,
    /// The computed threshold `x0`.
    pub x0: f64,
}

impl Majorant {
    /// Build from explicit `log M` and its two derivatives.
    pub fn new(
        name: impl Into<String>,
        x_min: f64,
        log_m: RealFn,
        dlog_m: RealFn,
        d2log_m: RealFn,
    ) -> Self {
        Majorant {
            name: name.into(),
            x_min,
            log_m,
            dlog_m,
            d2log_m,
            x0_cache: Arc::new(OnceLock::new()),
            k0_cache: Arc::new(OnceLock::new()),
        }
    }

    /// Build from `log M` alone; derivatives fall back to high-order central
    /// finite differences.
    pub fn from_log_m(name: impl Into<String>, x_min: f64, log_m: RealFn) -> Self {
        let f1 = log_m.clone();
        let f2 = log_m.clone();
        let dlog: RealFn = Arc::new(move |x| diff::d1_central5(&*f1, x, diff::step_d1(x)));
        let d2log: RealFn = Arc::new(move |x| diff::d2_central5(&*f2, x, diff::step_d2(x)));
        Majorant::new(name, x_min, log_m, dlog, d2log)
    }

    /// Build from a tabulated `(x, log M)` list, interpolated by a
    /// shape-preserving cubic (PCHIP).
    pub fn from_table(name: impl Into<String>, table: &[(f64, f64)]) -> Result<Self> {
        let spline = Arc::new(Pchip::new(table)?);
        let x_min = spline.x_min();
        let s0 = spline.clone();
        let s1 = spline.clone();
        let s2 = spline;
        Ok(Majorant::new(
            name,
            x_min,
            Arc::new(move |x| s0.eval(x)),
            Arc::new(move |x| s1.deriv(x)),
            Arc::new(move |x| s2.deriv2(x)),
        ))
    }

    /// Gevrey-class majorant `M(x) = x^{(s-1)x}`, for `s > 1`.
    ///
    /// `J(x) = x^{s-1}` is increasing on the whole domain, so the threshold
    /// degenerates to the domain edge `x_min = 1`.
    pub fn gevrey(s: f64) -> Result<Self> {
        if !(s > 1.0) {
            return Err(Error::Domain(format!(
                "gevrey requires s > 1 (the analytic case s = 1 has bounded J); got s = {s}"
            )));
        }
        let a = s - 1.0;
        Ok(Majorant::new(
            format!("gevrey({s})"),
            1.0,
            Arc::new(move |x: f64| a * x * x.ln()),
            Arc::new(move |x: f64| a * (x.ln() + 1.0)),
            Arc::new(move |x: f64| a / x),
        ))
    }

    /// Denjoy quasi-analytic majorant built from `level` iterated logarithms:
    /// `log M(x) = x * sum_{j=1..level} log(log^(j) x)`.
    ///
    /// The domain starts where the innermost iterated log reaches 1, plus a
    /// margin of 0.5, so every factor is positive.
    pub fn denjoy(level: u32) -> Result<Self> {
        if level < 1 {
            return Err(Error::Domain(format!(
                "denjoy requires level >= 1, got {level}"
            )));
        }
        let lv = level as usize;
        let mut tower = 1.0f64;
        for _ in 0..lv {
            tower = tower.exp();
        }
        let x_min = tower + 0.5;

        // log M = x * sum_j log(l_j),   l_1 = log x, l_j = log(l_{j-1}).
        // With P_j = prod_{i<=j} l_i:
        //   (log M)'  = sum_j [ log(l_j) + 1/P_j ]
        //   (log M)'' = (1/x) sum_j (1/P_j) [ 1 - sum_{m<=j} 1/P_m ]
        let logs = move |x: f64| -> Vec<f64> {
            let mut v = Vec::with_capacity(lv);
            let mut cur = x;
            for _ in 0..lv {
                cur = cur.ln();
                v.push(cur);
            }
            v
        };
        let l0 = logs;
        let l1 = logs;
        let l2 = logs;
        Ok(Majorant::new(
            format!("denjoy({level})"),
            x_min,
            Arc::new(move |x: f64| {
                let ls = l0(x);
                x * ls.iter().map(|l| l.ln()).sum::<f64>()
            }),
            Arc::new(move |x: f64| {
                let ls = l1(x);
                let mut p = 1.0;
                let mut total = 0.0;
                for l in &ls {
                    p *= l;
                    total += l.ln() + 1.0 / p;
                }
                total
            }),
            Arc::new(move |x: f64| {
                let ls = l2(x);
                let mut p = 1.0;
                let mut inv_sum = 0.0;
                let mut total = 0.0;
                for l in &ls {
                    p *= l;
                    inv_sum += 1.0 / p;
                    total += (1.0 - inv_sum) / p;
                }
                total / x
            }),
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x > self.x_min {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "x = {x} outside domain (x_min = {}) of majorant '{}'",
                self.x_min, self.name
            )))
        }
    }

    pub fn log_m(&self, x: f64) -> f64 {
        (self.log_m)(x)
    }

    pub fn dlog_m(&self, x: f64) -> f64 {
        (self.dlog_m)(x)
    }

    pub fn d2log_m(&self, x: f64) -> f64 {
        (self.d2log_m)(x)
    }

    /// `J(x) = M(x)^{1/x} = exp(log M(x) / x)`.
    pub fn j(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok((self.log_m(x) / x).exp())
    }

    /// `J'(x) = J(x) (log J)'(x)` with `log J = log M / x`.
    pub fn j_prime(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.j(x)? * self.beta_raw(x))
    }

    /// `beta(x) = J'(x)/J(x) = (log M)'(x)/x - log M(x)/x^2`.
    /// No domain check; used on trust-bracketed arguments by the solver.
    pub(crate) fn beta_raw(&self, x: f64) -> f64 {
        self.dlog_m(x) / x - self.log_m(x) / (x * x)
    }

    /// `beta'(x) = (log M)''/x - 2 (log M)'/x^2 + 2 log M/x^3`.
    pub(crate) fn beta_prime_raw(&self, x: f64) -> f64 {
        self.d2log_m(x) / x - 2.0 * self.dlog_m(x) / (x * x) + 2.0 * self.log_m(x) / (x * x * x)
    }

    pub fn beta(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.beta_raw(x))
    }

    /// `J` without the domain check; the growth solver evaluates at the
    /// closed endpoint `x0 = x_min` where the built-ins are all defined.
    pub(crate) fn j_raw(&self, x: f64) -> f64 {
        (self.log_m(x) / x).exp()
    }

    pub(crate) fn g_raw(&self, x: f64) -> f64 {
        let j = self.j_raw(x);
        x * j * j
    }

    pub(crate) fn g_prime_raw(&self, x: f64) -> f64 {
        let j = self.j_raw(x);
        j * j * (1.0 + 2.0 * x * self.beta_raw(x))
    }

    /// Upper end of scan/validation grids. 1e6 unless the domain itself starts
    /// higher (deeply nested Denjoy levels), in which case scale with x_min.
    fn scan_hi(&self) -> f64 {
        (100.0 * self.x_min).max(1e6)
    }

    fn scan_lo(&self) -> f64 {
        self.x_min * (1.0 + 1e-12)
    }

    /// Threshold `x0`: the smallest point such that `J' > 0` to its right and
    /// `J(x0)` dominates every earlier value of `J`.
    ///
    /// Found by scanning a geometric grid for the last sign change of `J'`,
    /// bisecting it to absolute tolerance 1e-8, then (if J decayed from a
    /// higher early value) moving right to where `J` re-attains the running
    /// maximum. When `J' > 0 across the whole window the threshold
    /// degenerates to `x_min`.
    pub fn x0(&self) -> Result<f64> {
        if let Some(&v) = self.x0_cache.get() {
            return Ok(v);
        }
        let v = self.compute_x0()?;
        let _ = self.x0_cache.set(v);
        Ok(v)
    }

    fn compute_x0(&self) -> Result<f64> {
        let grid = geometric_grid(self.scan_lo(), self.scan_hi(), SCAN_POINTS);
        let jp: Vec<f64> = grid.iter().map(|&x| self.beta_raw(x)).collect();

        if jp.iter().all(|&v| v <= 0.0) {
            return Err(Error::BoundedJ(self.name.clone()));
        }
        // Last index where J' changes from <= 0 to > 0.
        let mut change = None;
        for i in 0..grid.len() - 1 {
            if jp[i] <= 0.0 && jp[i + 1] > 0.0 {
                change = Some(i);
            }
        }
        let x_c = match change {
            None => {
                if jp[0] > 0.0 {
                    // Increasing everywhere: threshold degenerates to the edge.
                    return Ok(self.x_min);
                }
                return Err(Error::BoundedJ(self.name.clone()));
            }
            Some(i) => {
                let f = |x: f64| self.beta_raw(x);
                roots::bisect(&f, grid[i], grid[i + 1], X0_TOL, 200)?
            }
        };

        // J may have started higher than J(x_c); move right until the running
        // maximum is re-attained (log J comparison for scale safety).
        let log_j = |x: f64| self.log_m(x) / x;
        let left_max = grid
            .iter()
            .take_while(|&&x| x < x_c)
            .map(|&x| log_j(x))
            .fold(log_j(self.scan_lo()), f64::max);
        if log_j(x_c) >= left_max {
            return Ok(x_c);
        }
        let hi = self.scan_hi();
        if log_j(hi) < left_max {
            return Err(Error::BoundedJ(self.name.clone()));
        }
        let f = |x: f64| log_j(x) - left_max;
        roots::bisect(&f, x_c, hi, X0_TOL, 200)
    }

    pub(crate) fn k0_cache(&self) -> &OnceLock<f64> {
        &self.k0_cache
    }

    /// Run the standing-hypothesis checks on the scan grid:
    /// strict log-convexity, derivative consistency, and eventual growth of J
    /// (via `x0`). Errors if any check fails.
    pub fn validate(&self) -> Result<MajorantValidation> {
        let grid = geometric_grid(self.x_min * (1.0 + 1e-6), self.scan_hi(), SCAN_POINTS);
        let mut min_d2 = f64::INFINITY;
        for &x in &grid {
            let d2 = self.d2log_m(x);
            min_d2 = min_d2.min(d2);
            if !(d2 > 0.0) {
                return Err(Error::InvalidMajorant {
                    name: self.name.clone(),
                    reason: format!("log M not strictly convex: (log M)''({x}) = {d2}"),
                });
            }
        }

        let mut max_mismatch: f64 = 0.0;
        for &x in &grid {
            let h = 1e-6 * x.max(1.0);
            if x - h <= self.x_min {
                continue;
            }
            let fd = diff::d1_central2(&|t| self.log_m(t), x, h);
            let an = self.dlog_m(x);
            let scale = an.abs().max(fd.abs()).max(1e-8);
            let rel = (fd - an).abs() / scale;
            max_mismatch = max_mismatch.max(rel);
        }
        // Finite-difference-backed custom majorants agree trivially; for
        // analytic constructors this guards transcription errors.
        if max_mismatch > 1e-6 {
            return Err(Error::InvalidMajorant {
                name: self.name.clone(),
                reason: format!("dlog_m disagrees with finite differences by {max_mismatch:.3e}"),
            });
        }

        let x0 = self.x0()?;
        Ok(MajorantValidation {
            min_d2log_m: min_d2,
            max_dlog_m_mismatch: max_mismatch,
            x0,
        })
    }

    /// Sampled-grid check helpers used by the property suites.
    /// `g(x) = x J(x)^2` and `G(x) = (x g' - g)/g = 2 x beta(x)`.
    pub fn g(&self, x: f64) -> Result<f64> {
        let j = self.j(x)?;
        Ok(x * j * j)
    }

    pub fn g_prime(&self, x: f64) -> Result<f64> {
        let j = self.j(x)?;
        Ok(j * j * (1.0 + 2.0 * x * self.beta_raw(x)))
    }

    pub fn big_g(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(2.0 * x * self.beta_raw(x))
    }
}

/// Convenience free functions mirroring the operation names.
pub fn j(m: &Majorant, x: f64) -> Result<f64> {
    m.j(x)
}

pub fn j_prime(m: &Majorant, x: f64) -> Result<f64> {
    m.j_prime(x)
}

pub fn x0(m: &Majorant) -> Result<f64> {
    m.x0()
}

/// Sum-accumulated `ln n!` table (exact to ~1e-15 relative for n <= a few
/// thousand); shared by the Gram-matrix oracles and tests.
#[allow(clippy::needless_range_loop)]
pub fn ln_factorial_table(n_max: usize) -> Vec<f64> {
    let mut table = vec![0.0; n_max + 1];
    let mut acc = crate::numeric::sum::Accumulator::new(Precision::Extended);
    for n in 1..=n_max {
        acc.add((n as f64).ln());
        table[n] = acc.value();
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn gevrey_two_has_linear_j() {
        let m = Majorant::gevrey(2.0).unwrap();
        for x in [1.5, 2.0, 5.0, 100.0] {
            assert_relative_eq!(m.j(x).unwrap(), x, max_relative = 1e-14);
            assert_relative_eq!(m.j_prime(x).unwrap(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn gevrey_fractional_values() {
        let m = Majorant::gevrey(1.5).unwrap();
        // J(x) = x^{1/2}, J'(x) = 0.5 x^{-1/2}.
        assert_relative_eq!(m.j(4.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(m.j_prime(4.0).unwrap(), 0.25, max_relative = 1e-13);
    }

    #[test]
    fn gevrey_rejects_analytic_case() {
        assert!(Majorant::gevrey(1.0).is_err());
        assert!(Majorant::gevrey(0.5).is_err());
    }

    #[test]
    fn denjoy_level_one_is_log() {
        let m = Majorant::denjoy(1).unwrap();
        let x = E * E;
        // J(x) = log x, so J(e^2) = 2 and J'(x) = 1/x.
        assert_relative_eq!(m.j(x).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(m.j_prime(x).unwrap(), (-2.0f64).exp(), max_relative = 1e-12);
        // (log M)'(x) = log log x + 1/log x at x = e^2.
        assert_relative_eq!(m.dlog_m(x), 2.0f64.ln() + 0.5, max_relative = 1e-14);
    }

    #[test]
    fn denjoy_domains_start_past_log_towers() {
        let m1 = Majorant::denjoy(1).unwrap();
        assert_relative_eq!(m1.x_min(), E + 0.5, max_relative = 1e-15);
        let m2 = Majorant::denjoy(2).unwrap();
        assert!(m2.x_min() > E.powf(E));
        assert_relative_eq!(m2.x_min(), E.powf(E) + 0.5, max_relative = 1e-12);
        // Derivatives stay consistent with finite differences on the domain.
        for m in [&m1, &m2] {
            for &x in &geometric_grid(m.x_min() * 1.01, 1e5, 17) {
                let fd = diff::d1_central2(&|t| m.log_m(t), x, 1e-5 * x);
                assert_relative_eq!(m.dlog_m(x), fd, max_relative = 1e-7);
                let fd2 = diff::d2_central5(&|t| m.log_m(t), x, diff::step_d2(x) * 0.5);
                assert_relative_eq!(m.d2log_m(x), fd2, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn domain_errors_reported() {
        let m = Majorant::gevrey(2.0).unwrap();
        assert!(m.j(0.5).is_err());
        assert!(m.j_prime(1.0).is_err());
    }

    #[test]
    fn x0_degenerates_to_edge_for_monotone_j() {
        for m in [
            Majorant::gevrey(1.2).unwrap(),
            Majorant::gevrey(2.0).unwrap(),
            Majorant::gevrey(3.0).unwrap(),
        ] {
            assert_eq!(m.x0().unwrap(), 1.0);
        }
        let d = Majorant::denjoy(1).unwrap();
        assert_eq!(d.x0().unwrap(), d.x_min());
    }

    // Oracle for the dipping custom majorant log M = (x - 3)^2:
    // log J = x - 6 + 9/x has derivative 1 - 9/x^2, so J' changes sign at
    // x = 3. With x_min = 1, sup of log J left of 3 is log J(1) = 4, and the
    // re-attainment point solves x - 6 + 9/x = 4, i.e. x^2 - 10x + 9 = 0,
    // giving x0 = 9. With x_min = 2.5 the sup is log J(2.5) = 0.1 and
    // x^2 - 6.1x + 9 = 0 gives x0 = 3.6.
    fn dipping(x_min: f64) -> Majorant {
        Majorant::new(
            "dip",
            x_min,
            Arc::new(|x: f64| (x - 3.0) * (x - 3.0)),
            Arc::new(|x: f64| 2.0 * (x - 3.0)),
            Arc::new(|_| 2.0),
        )
    }

    #[test]
    fn x0_honors_left_maximum_of_j() {
        let m = dipping(1.0);
        assert!((m.x0().unwrap() - 9.0).abs() < 1e-6);
        let m = dipping(2.5);
        assert!((m.x0().unwrap() - 3.6).abs() < 1e-6);
        // Degenerate tie-break: J' > 0 on the whole window.
        let m = dipping(3.0);
        assert_eq!(m.x0().unwrap(), 3.0);
    }

    #[test]
    fn bounded_j_is_rejected() {
        // log M = -x log x gives J = 1/x, decreasing: J' < 0 everywhere.
        let m = Majorant::new(
            "decay",
            1.0,
            Arc::new(|x: f64| -x * x.ln()),
            Arc::new(|x: f64| -(x.ln() + 1.0)),
            Arc::new(|x: f64| -1.0 / x),
        );
        assert!(matches!(m.x0(), Err(Error::BoundedJ(_))));
    }

    #[test]
    fn validation_passes_builtins_and_catches_bad_derivative() {
        for m in [
            Majorant::gevrey(1.5).unwrap(),
            Majorant::gevrey(2.0).unwrap(),
            Majorant::denjoy(1).unwrap(),
            Majorant::denjoy(2).unwrap(),
        ] {
            let v = m.validate().unwrap();
            assert!(v.min_d2log_m > 0.0);
            assert!(v.max_dlog_m_mismatch < 1e-6);
        }
        // A deliberately wrong first derivative must be caught.
        let bad = Majorant::new(
            "bad",
            1.0,
            Arc::new(|x: f64| x * x.ln()),
            Arc::new(|x: f64| x.ln()), // missing +1
            Arc::new(|x: f64| 1.0 / x),
        );
        assert!(matches!(bad.validate(), Err(Error::InvalidMajorant { .. })));
        // Concave log M must be caught.
        let concave = Majorant::new(
            "concave",
            1.0,
            Arc::new(|x: f64| x.sqrt()),
            Arc::new(|x: f64| 0.5 / x.sqrt()),
            Arc::new(|x: f64| -0.25 / x.powf(1.5)),
        );
        assert!(matches!(
            concave.validate(),
            Err(Error::InvalidMajorant { .. })
        ));
    }

    #[test]
    fn from_log_m_derives_consistent_derivatives() {
        let m = Majorant::from_log_m("fd-backed", 1.0, Arc::new(|x: f64| 0.7 * x * x.ln()));
        let exact = Majorant::gevrey(1.7).unwrap();
        for x in [2.0, 7.0, 31.0, 150.0] {
            assert_relative_eq!(m.dlog_m(x), exact.dlog_m(x), max_relative = 1e-9);
            assert_relative_eq!(m.d2log_m(x), exact.d2log_m(x), max_relative = 1e-6);
        }
    }

    #[test]
    fn table_majorant_tracks_generating_function() {
        let pts: Vec<(f64, f64)> = geometric_grid(1.0, 1e6, 400)
            .into_iter()
            .map(|x| (x, x * x.ln()))
            .collect();
        let m = Majorant::from_table("tabulated", &pts).unwrap();
        let exact = Majorant::gevrey(2.0).unwrap();
        for x in [3.0, 42.0, 1234.5] {
            assert_relative_eq!(m.j(x).unwrap(), exact.j(x).unwrap(), max_relative = 1e-4);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn ln_factorials_match_direct_products() {
        let t = ln_factorial_table(20);
        let mut fact = 1.0f64;
        for n in 1..=20 {
            fact *= n as f64;
            assert_relative_eq!(t[n], fact.ln(), max_relative = 1e-13);
        }
    }
}
