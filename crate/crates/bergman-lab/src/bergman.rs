//! Numerical Bergman kernels: weighted Gram matrices of a holomorphic
//! section basis, orthonormalization, and kernel evaluation.
//!
//! For the rotation-invariant geometries in this crate the monomials `z^j`
//! are orthogonal, so the Gram matrix is diagonal with entries
//!
//! ```text
//!     <z^j, z^j> = pi * Int_0^inf u^j e^{-k F(u)} lambda(u) du,   u = |z|^2,
//! ```
//!
//! where `F` is the radial potential and `lambda = F' + u F''` the metric
//! density. Monomial norms span thousands of orders of magnitude at large
//! `k`, so entries are computed and stored in log space: each integral is
//! taken in the substitution `u = e^v` after shifting out the peak of the
//! exponent. Kernel evaluation re-combines the logs pairwise, which keeps
//! every intermediate on unit scale regardless of `k`.
//!
//! A dense Hermitian path (Cholesky orthonormalization) is retained for
//! bases that are not orthogonal; it is exercised against the diagonal path
//! by the basis-change tests.

use crate::geometry::ModelGeometry;
use crate::numeric::quadrature;
use crate::numeric::roots;
use crate::numeric::sum::ComplexAccumulator;
use crate::numeric::{linalg, Precision};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Quadrature / precision controls for Gram assembly and kernel checks.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Relative tolerance for each 1D integral.
    pub rel_tol: f64,
    /// Exponent drop defining the integration window: the window covers
    /// everything within `exp(-tail_drop)` of the integrand peak.
    pub tail_drop: f64,
    /// Panel cap for the adaptive scheme.
    pub max_panels: usize,
    /// Accumulation mode.
    pub precision: Precision,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-13,
            tail_drop: 40.0,
            max_panels: 4096,
            precision: Precision::Double,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.tail_drop > 0.0) || self.max_panels == 0 {
            return Err(Error::Config(
                "quadrature resolution fields must be positive".to_string(),
            ));
        }
        Ok(())
    }

    pub fn with_precision(mut self, p: Precision) -> Self {
        self.precision = p;
        self
    }
}

#[derive(Debug, Clone)]
enum GramData {
    /// Log of the diagonal norms `<z^j, z^j>`.
    Diagonal(Vec<f64>),
    /// Dense Hermitian matrix (row-major).
    Dense(Vec<Vec<Complex64>>),
}

/// Weighted Gram matrix of the section basis at power `k`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub k: f64,
    pub size: usize,
    data: GramData,
    /// log10 of the spread max/min of the diagonal norms.
    pub condition_log10: f64,
}

impl GramMatrix {
    /// Entry accessor (linear scale; overflows to `inf` for extreme spreads,
    /// use `log_diagonal` for those).
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match &self.data {
            GramData::Diagonal(logs) => {
                if i == j {
                    Complex64::new(logs[i].exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            GramData::Dense(m) => m[i][j],
        }
    }

    pub fn log_diagonal(&self) -> Option<&[f64]> {
        match &self.data {
            GramData::Diagonal(logs) => Some(logs),
            GramData::Dense(_) => None,
        }
    }

    /// Wrap a dense Hermitian matrix, validating Hermitian symmetry at
    /// 1e-14 relative to the diagonal scale.
    #[allow(clippy::needless_range_loop)]
    pub fn from_dense(k: f64, m: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = m.len();
        let scale = (0..n)
            .map(|i| m[i][i].re.abs())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        for i in 0..n {
            if m[i][i].im.abs() > 1e-14 * scale {
                return Err(Error::Domain(format!(
                    "Gram diagonal entry {i} not real: {}",
                    m[i][i]
                )));
            }
            for j in 0..i {
                if (m[i][j] - m[j][i].conj()).norm() > 1e-14 * scale {
                    return Err(Error::Domain(format!(
                        "Gram matrix not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        let cond = {
            let diag: Vec<f64> = (0..n).map(|i| m[i][i].re).collect();
            let hi = diag.iter().cloned().fold(f64::MIN, f64::max);
            let lo = diag.iter().cloned().fold(f64::MAX, f64::min);
            (hi / lo).log10()
        };
        Ok(GramMatrix {
            k,
            size: n,
            data: GramData::Dense(m),
            condition_log10: cond,
        })
    }
}

/// Exponent of the Gram integrand in the log substitution `u = e^v`:
/// `(j+1) v - k F(e^v)` (the metric density is applied outside).
fn gram_exponent(g: &ModelGeometry, k: f64, j: usize, v: f64) -> f64 {
    (j as f64 + 1.0) * v - k * g.radial_potential(v.exp())
}

/// Log of `<z^j, z^j>` by peak-shifted adaptive quadrature.
///
/// Peak location and windowing use the full log-magnitude including the
/// metric density: for the top monomials of a compact model the bare
/// exponent has no interior maximum and the density supplies the decay.
fn log_norm(g: &ModelGeometry, k: f64, j: usize, spec: &QuadratureSpec) -> Result<f64> {
    let e = |v: f64| gram_exponent(g, k, j, v);
    let ln_lam = |v: f64| {
        let lam = g.metric_factor(Complex64::new(v.exp().sqrt(), 0.0));
        lam.abs().max(1e-300).ln()
    };
    let full = |v: f64| e(v) + ln_lam(v);

    // Coarse scan + golden refinement of the full magnitude.
    let mut v_peak = -40.0;
    let mut best = f64::NEG_INFINITY;
    let mut v = -40.0;
    while v <= 60.0 {
        let val = full(v);
        if val > best {
            best = val;
            v_peak = v;
        }
        v += 0.25;
    }
    let v_peak = roots::golden_max(&full, v_peak - 0.5, v_peak + 0.5, 1e-10, 200);
    // Normalize by the full magnitude so the integrand peaks at +-1; the
    // sign of the density (it may dip negative for perturbed models) is
    // carried separately.
    let m = full(v_peak);

    // Window: walk out until the magnitude drops below e^{-tail_drop}.
    let drop = spec.tail_drop;
    let mut lo = v_peak - 1.0;
    while full(lo) - m > -drop && lo > -745.0 {
        lo -= 1.0;
    }
    let mut hi = v_peak + 1.0;
    while full(hi) - m > -drop && hi < 745.0 {
        hi += 1.0;
    }

    let f = |v: f64| {
        let lam = g.metric_factor(Complex64::new(v.exp().sqrt(), 0.0));
        let mag = (e(v) + lam.abs().max(1e-300).ln() - m).exp();
        if lam < 0.0 {
            -mag
        } else {
            mag
        }
    };
    // The exponent is a difference of terms of this magnitude, so integrand
    // evaluations carry the corresponding cancellation noise.
    let exponent_scale = (j as f64 + 1.0) * v_peak.abs()
        + k * g.radial_potential(v_peak.exp()).abs()
        + m.abs()
        + 1.0;
    let q = quadrature::integrate_noisy(
        f,
        lo,
        hi,
        spec.rel_tol,
        1e-18,
        spec.max_panels,
        spec.precision,
        f64::EPSILON * exponent_scale,
    )?;
    if !(q.value > 0.0) {
        return Err(Error::GramNotPositive);
    }
    Ok(PI.ln() + m + q.value.ln())
}

/// Assemble the Gram matrix of the monomial basis. Rotation invariance makes
/// it diagonal; entries are parallel independent 1D integrals.
pub fn gram_matrix(g: &ModelGeometry, k: f64, spec: &QuadratureSpec) -> Result<GramMatrix> {
    spec.validate()?;
    let size = g.basis_size(k)?;
    let logs: Result<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|j| log_norm(g, k, j, spec))
        .collect();
    let logs = logs?;
    let hi = logs.iter().cloned().fold(f64::MIN, f64::max);
    let lo = logs.iter().cloned().fold(f64::MAX, f64::min);
    Ok(GramMatrix {
        k,
        size,
        data: GramData::Diagonal(logs),
        condition_log10: (hi - lo) / std::f64::consts::LN_10,
    })
}

/// Orthonormalized kernel evaluator.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    geometry: ModelGeometry,
    pub k: f64,
    mode: EvalMode,
    precision: Precision,
}

#[derive(Debug, Clone)]
enum EvalMode {
    /// Diagonal Gram: `sigma_j = z^j / sqrt(<j>)`, norms kept in log space.
    DiagonalLog { log_norms: Vec<f64> },
    /// Dense path: rows of `L^{-1}` (Cholesky factor inverse) combine the
    /// monomials into the orthonormal basis.
    Dense { coeff: Vec<Vec<Complex64>> },
}

impl KernelEvaluator {
    pub fn new(g: &ModelGeometry, gram: &GramMatrix) -> Result<Self> {
        let mode = match &gram.data {
            GramData::Diagonal(logs) => EvalMode::DiagonalLog {
                log_norms: logs.clone(),
            },
            GramData::Dense(m) => {
                let l = linalg::cholesky_hermitian(m)?;
                EvalMode::Dense {
                    coeff: linalg::invert_lower(&l),
                }
            }
        };
        Ok(KernelEvaluator {
            geometry: g.clone(),
            k: gram.k,
            mode,
            precision: Precision::Double,
        })
    }

    pub fn with_precision(mut self, p: Precision) -> Self {
        self.precision = p;
        self
    }

    pub fn geometry(&self) -> &ModelGeometry {
        &self.geometry
    }

    pub fn basis_len(&self) -> usize {
        match &self.mode {
            EvalMode::DiagonalLog { log_norms } => log_norms.len(),
            EvalMode::Dense { coeff } => coeff.len(),
        }
    }

    fn check_chart(&self, z: Complex64) -> Result<()> {
        if z.norm() <= self.geometry.chart_radius() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "evaluation point {z} outside chart truncation radius {}",
                self.geometry.chart_radius()
            )))
        }
    }

    /// Unweighted kernel `K(z, w)` and weighted magnitude
    /// `|B| = |K| e^{-k(phi(z) + phi(w))/2}`. `K` may overflow to `inf` at
    /// extreme `k`; `|B|` is always finite.
    pub fn kernel_eval(&self, z: Complex64, w: Complex64) -> Result<(Complex64, f64)> {
        self.check_chart(z)?;
        self.check_chart(w)?;
        let weight = 0.5 * self.k * (self.geometry.potential(z) + self.geometry.potential(w));
        match &self.mode {
            EvalMode::DiagonalLog { log_norms } => {
                let zeta = z * w.conj();
                let (log_abs, arg) = if zeta.norm_sqr() == 0.0 {
                    (f64::NEG_INFINITY, 0.0)
                } else {
                    (zeta.norm().ln(), zeta.arg())
                };
                // Per-term log magnitudes relative to the weighted scale.
                let mut l_max = f64::NEG_INFINITY;
                let logs: Vec<f64> = log_norms
                    .iter()
                    .enumerate()
                    .map(|(j, ln_norm)| {
                        let l = if j == 0 {
                            -ln_norm - weight
                        } else if log_abs == f64::NEG_INFINITY {
                            f64::NEG_INFINITY
                        } else {
                            j as f64 * log_abs - ln_norm - weight
                        };
                        l_max = l_max.max(l);
                        l
                    })
                    .collect();
                if l_max == f64::NEG_INFINITY {
                    return Ok((Complex64::new(0.0, 0.0), 0.0));
                }
                let mut acc = ComplexAccumulator::new(self.precision);
                for (j, l) in logs.iter().enumerate() {
                    if *l - l_max > -746.0 {
                        let mag = (l - l_max).exp();
                        acc.add(Complex64::from_polar(mag, j as f64 * arg));
                    }
                }
                let s = acc.value();
                let abs_b = s.norm() * l_max.exp();
                let kk = s * (l_max + weight).exp();
                Ok((kk, abs_b))
            }
            EvalMode::Dense { coeff } => {
                let n = coeff.len();
                let mono_z = monomials(z, n);
                let mono_w = monomials(w, n);
                let mut acc = ComplexAccumulator::new(self.precision);
                for row in coeff {
                    let mut sz = ComplexAccumulator::new(self.precision);
                    let mut sw = ComplexAccumulator::new(self.precision);
                    for (c, (mz, mw)) in row.iter().zip(mono_z.iter().zip(&mono_w)) {
                        sz.add(c * mz);
                        sw.add(c * mw);
                    }
                    acc.add(sz.value() * sw.value().conj());
                }
                let kk = acc.value();
                Ok((kk, kk.norm() * (-weight).exp()))
            }
        }
    }

    /// Weighted diagonal value (the Bergman function).
    pub fn bergman_function(&self, z: Complex64) -> Result<f64> {
        Ok(self.kernel_eval(z, z)?.1)
    }

    /// Quadrature check of the reproducing identity
    /// `<K(., w), z^j> = conj(w^j)` under `<f, g> = Int f g-bar e^{-k phi} dV`.
    /// Returns the worst relative error over the requested points and basis
    /// elements.
    pub fn check_reproducing(&self, ws: &[Complex64], degrees: &[usize]) -> Result<f64> {
        let k = self.k;
        let g = &self.geometry;
        let n_theta = 96usize;
        // Radial window from the heaviest monomial weight in play, with the
        // metric density included (it carries the decay on compact models).
        let j_top = *degrees.iter().max().unwrap_or(&0);
        let ln_lam = |v: f64| {
            g.metric_factor(Complex64::new(v.exp().sqrt(), 0.0))
                .abs()
                .max(1e-300)
                .ln()
        };
        let e_top = |v: f64| gram_exponent(g, k, j_top, v) + ln_lam(v);
        let e_zero = |v: f64| gram_exponent(g, k, 0, v) + ln_lam(v);
        // Stay inside the chart truncation radius; the tail beyond it is
        // negligible against the 1e-6 tolerance of this check.
        let v_cap = 2.0 * (0.99 * g.chart_radius()).ln();
        let mut lo = -40.0;
        let mut hi = v_cap.min(40.0);
        let peak = roots::golden_max(&e_top, -40.0, hi, 1e-8, 300);
        let m = e_top(peak).max(e_zero(roots::golden_max(&e_zero, -40.0, hi, 1e-8, 300)));
        while e_zero(lo) - m < -60.0 && lo < peak {
            lo += 0.5;
        }
        while e_top(hi) - m < -60.0 && hi > peak {
            hi -= 0.5;
        }

        let mut worst: f64 = 0.0;
        for &w in ws {
            for &j in degrees {
                // Int K(z, w) conj(z^j) e^{-k phi(z)} lambda dx dy
                // in polar coordinates: dx dy = du dtheta / 2.
                let radial = |v: f64| -> Result<Complex64> {
                    let u = v.exp();
                    let r = u.sqrt();
                    let lam = g.metric_factor(Complex64::new(r, 0.0));
                    let wgt = (-k * g.radial_potential(u)).exp();
                    let mut acc = ComplexAccumulator::new(self.precision);
                    for t in 0..n_theta {
                        let theta = 2.0 * PI * t as f64 / n_theta as f64;
                        let zp = Complex64::from_polar(r, theta);
                        let (kk, _) = self.kernel_eval(zp, w)?;
                        acc.add(kk * zp.conj().powu(j as u32));
                    }
                    // Trapezoid in theta (periodic, spectrally accurate),
                    // u-Jacobian e^v, weight and density.
                    Ok(acc.value() * (2.0 * PI / n_theta as f64) * 0.5 * u * wgt * lam)
                };
                // Composite Gauss on [lo, hi] in v.
                let panels = 96usize;
                let mut acc = ComplexAccumulator::new(self.precision);
                for p in 0..panels {
                    let a = lo + (hi - lo) * p as f64 / panels as f64;
                    let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
                    for (t, wq) in GL8_T.iter().zip(GL8_W) {
                        let v = a + (b - a) * t;
                        acc.add(radial(v)? * wq * (b - a));
                    }
                }
                let got = acc.value();
                let expect = w.conj().powu(j as u32);
                let scale = expect.norm().max(1e-12);
                worst = worst.max((got - expect).norm() / scale);
            }
        }
        Ok(worst)
    }
}

fn monomials(z: Complex64, n: usize) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(n);
    let mut cur = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        v.push(cur);
        cur *= z;
    }
    v
}

// 8-point Gauss-Legendre on [0, 1].
#[allow(clippy::excessive_precision)]
const GL8_T: [f64; 8] = [
    0.019855071751231884,
    0.101666761293186630,
    0.237233795041835507,
    0.408282678752175098,
    0.591717321247824902,
    0.762766204958164493,
    0.898333238706813370,
    0.980144928248768116,
];
#[allow(clippy::excessive_precision)]
const GL8_W: [f64; 8] = [
    0.050614268145188130,
    0.111190517226687235,
    0.156853322938943644,
    0.181341891689180991,
    0.181341891689180991,
    0.156853322938943644,
    0.111190517226687235,
    0.050614268145188130,
];

/// Reference log of the CP^1 Gram diagonal:
/// `<z^j, z^j> = pi j! (k-j)! / (k+1)!` (Beta integral).
pub fn cp1_gram_log_reference(k: usize, j: usize) -> f64 {
    let t = crate::majorant::ln_factorial_table(k + 1);
    PI.ln() + t[j] + t[k - j] - t[k + 1]
}

/// Reference log of the Fock Gram diagonal on the full plane:
/// `<z^j, z^j> = pi j! / k^{j+1}` (Gaussian moments).
pub fn fock_gram_log_reference(k: f64, j: usize) -> f64 {
    let t = crate::majorant::ln_factorial_table(j.max(1));
    PI.ln() + t[j] - (j as f64 + 1.0) * k.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cp1_exact_kernel, fock_kernel, ModelGeometry};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cp1_gram_diagonal_beta_integrals() {
        let g = ModelGeometry::cp1();
        let spec = QuadratureSpec::default();
        // k = 2: (pi/3, pi/6, pi/3).
        let gram = gram_matrix(&g, 2.0, &spec).unwrap();
        let expect = [PI / 3.0, PI / 6.0, PI / 3.0];
        for (j, e) in expect.iter().enumerate() {
            assert_relative_eq!(gram.entry(j, j).re, e, max_relative = 1e-12);
        }
        // Higher powers against the factorial reference, in log space.
        for k in [4usize, 16, 64] {
            let gram = gram_matrix(&g, k as f64, &spec).unwrap();
            let logs = gram.log_diagonal().unwrap();
            #[allow(clippy::needless_range_loop)]
            for j in 0..=k {
                let diff = (logs[j] - cp1_gram_log_reference(k, j)).abs();
                assert!(diff < 1e-11, "k={k} j={j}: log diff {diff:.2e}");
            }
        }
    }

    #[test]
    fn fock_gram_diagonal_gaussian_moments() {
        let g = ModelGeometry::fock();
        let spec = QuadratureSpec::default();
        let gram = gram_matrix(&g, 1.0, &spec).unwrap();
        // pi * j! at k = 1.
        let mut fact = 1.0f64;
        for j in 0..=6 {
            if j > 0 {
                fact *= j as f64;
            }
            assert_relative_eq!(gram.entry(j, j).re, PI * fact, max_relative = 1e-12);
        }
        let logs = gram.log_diagonal().unwrap();
        for j in [0usize, 13, 40, 64] {
            assert!((logs[j] - fock_gram_log_reference(1.0, j)).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_amplitude_matches_unperturbed() {
        let g0 = ModelGeometry::cp1();
        let g1 = ModelGeometry::cp1_perturbed(0.0).unwrap();
        let spec = QuadratureSpec::default();
        let a = gram_matrix(&g0, 8.0, &spec).unwrap();
        let b = gram_matrix(&g1, 8.0, &spec).unwrap();
        for j in 0..a.size {
            let (la, lb) = (a.log_diagonal().unwrap()[j], b.log_diagonal().unwrap()[j]);
            assert!(((la - lb).exp() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_refinement_is_converged() {
        // Tightening the tolerance (equivalently, doubling nodes) moves no
        // entry by more than 1e-11 relative.
        let g = ModelGeometry::cp1_perturbed(0.05).unwrap();
        let coarse = QuadratureSpec::default();
        let fine = QuadratureSpec {
            rel_tol: 1e-15,
            ..coarse
        };
        let a = gram_matrix(&g, 16.0, &coarse).unwrap();
        let b = gram_matrix(&g, 16.0, &fine).unwrap();
        for j in 0..a.size {
            let d = (a.log_diagonal().unwrap()[j] - b.log_diagonal().unwrap()[j]).abs();
            assert!(d < 1e-11, "entry {j} moved {d:.2e}");
        }
    }

    #[test]
    fn numeric_cp1_kernel_matches_exact() {
        let g = ModelGeometry::cp1();
        let spec = QuadratureSpec::default();
        for k in [4u32, 16] {
            let gram = gram_matrix(&g, k as f64, &spec).unwrap();
            let eval = KernelEvaluator::new(&g, &gram).unwrap();
            for z in [c(0.0, 0.0), c(0.3, 0.2), c(-0.6, 0.5)] {
                for w in [c(0.1, -0.1), c(0.5, 0.4)] {
                    let (_, abs_b) = eval.kernel_eval(z, w).unwrap();
                    let exact = cp1_exact_kernel(k, z, w);
                    assert_relative_eq!(abs_b, exact, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn numeric_fock_kernel_matches_exact_inside_unit_disk() {
        let g = ModelGeometry::fock();
        let spec = QuadratureSpec::default();
        for k in [1.0, 4.0] {
            let gram = gram_matrix(&g, k, &spec).unwrap();
            let eval = KernelEvaluator::new(&g, &gram).unwrap();
            for z in [c(0.0, 0.0), c(0.9, 0.3), c(-0.7, -0.6)] {
                for w in [c(0.2, 0.1), c(-0.9, 0.8)] {
                    let (_, abs_b) = eval.kernel_eval(z, w).unwrap();
                    let exact = fock_kernel(k, z, w);
                    assert_relative_eq!(abs_b, exact, max_relative = 1e-6);
                }
            }
        }
        // At k = 64 the relative comparison is meaningful where the angular
        // cancellation factor e^{k |z||w| (1 - cos theta)} stays bounded;
        // pairs with correlated arguments cover the whole radius range.
        let k = 64.0;
        let gram = gram_matrix(&g, k, &spec).unwrap();
        let eval = KernelEvaluator::new(&g, &gram).unwrap();
        for (r1, r2, t1, t2) in [
            (0.0, 0.3, 0.0, 0.4),
            (0.5, 0.95, 0.2, 0.35),
            (1.0, 0.8, -0.4, -0.3),
            (0.9, 0.9, 1.1, 1.25),
        ] {
            let z = Complex64::from_polar(r1, t1);
            let w = Complex64::from_polar(r2, t2);
            let (_, abs_b) = eval.kernel_eval(z, w).unwrap();
            assert_relative_eq!(abs_b, fock_kernel(k, z, w), max_relative = 1e-6);
        }
    }

    #[test]
    fn kernel_is_hermitian() {
        let g = ModelGeometry::cp1_perturbed(0.05).unwrap();
        let spec = QuadratureSpec::default();
        let gram = gram_matrix(&g, 16.0, &spec).unwrap();
        let eval = KernelEvaluator::new(&g, &gram).unwrap();
        let (z, w) = (c(0.4, 0.7), c(-0.3, 0.2));
        let (kzw, abs_zw) = eval.kernel_eval(z, w).unwrap();
        let (kwz, abs_wz) = eval.kernel_eval(w, z).unwrap();
        assert!((kzw - kwz.conj()).norm() <= 1e-14 * kzw.norm());
        assert!((abs_zw - abs_wz).abs() <= 1e-14 * abs_zw);
    }

    #[test]
    fn bergman_function_positive_and_diagonal() {
        let g = ModelGeometry::cp1();
        let spec = QuadratureSpec::default();
        let gram = gram_matrix(&g, 8.0, &spec).unwrap();
        let eval = KernelEvaluator::new(&g, &gram).unwrap();
        for z in [c(0.0, 0.0), c(0.5, -0.2), c(1.5, 0.7)] {
            let b = eval.bergman_function(z).unwrap();
            assert!(b > 0.0);
            assert_relative_eq!(b, 9.0 / PI, max_relative = 1e-9);
        }
        // Outside the chart radius evaluation must fail.
        assert!(eval.kernel_eval(c(2e4, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn extended_precision_is_consistent() {
        let g = ModelGeometry::cp1_perturbed(0.05).unwrap();
        let spec = QuadratureSpec::default();
        let spec_ext = spec.with_precision(Precision::Extended);
        let gram_d = gram_matrix(&g, 32.0, &spec).unwrap();
        let gram_e = gram_matrix(&g, 32.0, &spec_ext).unwrap();
        let ev_d = KernelEvaluator::new(&g, &gram_d).unwrap();
        let ev_e = KernelEvaluator::new(&g, &gram_e)
            .unwrap()
            .with_precision(Precision::Extended);
        for z in [c(0.2, 0.3), c(-0.8, 0.1)] {
            for w in [c(0.6, -0.5), c(0.0, 0.0)] {
                let a = ev_d.kernel_eval(z, w).unwrap().1;
                let b = ev_e.kernel_eval(z, w).unwrap().1;
                assert!(
                    ((a / b) - 1.0).abs() < 1e-9,
                    "precision modes disagree: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn dense_path_is_basis_independent() {
        // Build the k = 6 CP^1 Gram in the monomial basis (linear scale) and
        // in a deliberately mixed basis p_i = sum_j c_{ij} z^j; the
        // reproducing kernel must be identical.
        let k = 6usize;
        let n = k + 1;
        let g = ModelGeometry::cp1();
        let mono: Vec<f64> = (0..n).map(|j| cp1_gram_log_reference(k, j).exp()).collect();

        let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for j in 0..n {
            dense[j][j] = Complex64::new(mono[j], 0.0);
        }
        let gram_mono = GramMatrix::from_dense(k as f64, dense).unwrap();
        let ev_mono = KernelEvaluator::new(&g, &gram_mono).unwrap();

        // Mixing matrix C (lower triangular, unit diagonal, a few couplings).
        let mut cmat = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            cmat[i][i] = Complex64::new(1.0, 0.0);
            if i > 0 {
                cmat[i][i - 1] = Complex64::new(0.5, 0.25);
            }
            if i > 1 {
                cmat[i][i - 2] = Complex64::new(-0.1, 0.3);
            }
        }
        // Gram of the mixed basis: G' = C G C^H.
        let mut mixed = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for r in 0..n {
            for c_ in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    s += cmat[r][l] * mono[l] * cmat[c_][l].conj();
                }
                mixed[r][c_] = s;
            }
        }
        let gram_mixed = GramMatrix::from_dense(k as f64, mixed).unwrap();
        // The dense evaluator expands in monomials; feed it the mixed basis
        // by folding C into the coefficient rows: sigma = L'^{-1} C z-powers.
        let l = linalg::cholesky_hermitian(match &gram_mixed.data {
            GramData::Dense(m) => m,
            _ => unreachable!(),
        })
        .unwrap();
        let linv = linalg::invert_lower(&l);
        let mut coeff = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for r in 0..n {
            for c_ in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for l_ in 0..n {
                    s += linv[r][l_] * cmat[l_][c_];
                }
                coeff[r][c_] = s;
            }
        }
        let ev_mixed = KernelEvaluator {
            geometry: g.clone(),
            k: k as f64,
            mode: EvalMode::Dense { coeff },
            precision: Precision::Double,
        };

        for (z, w) in [
            (c(0.3, 0.1), c(-0.2, 0.4)),
            (c(0.0, 0.0), c(0.7, -0.3)),
            (c(0.5, 0.5), c(0.5, 0.5)),
        ] {
            let a = ev_mono.kernel_eval(z, w).unwrap().1;
            let b = ev_mixed.kernel_eval(z, w).unwrap().1;
            assert_relative_eq!(a, b, max_relative = 1e-10);
            // And both agree with the closed form.
            assert_relative_eq!(a, cp1_exact_kernel(k as u32, z, w), max_relative = 1e-10);
        }
    }

    #[test]
    fn dense_gram_must_be_hermitian() {
        let m = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.1)],
            vec![Complex64::new(0.5, 0.2), Complex64::new(1.0, 0.0)],
        ];
        assert!(GramMatrix::from_dense(1.0, m).is_err());
        let m = vec![
            vec![Complex64::new(1.0, 1e-3), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ];
        assert!(GramMatrix::from_dense(1.0, m).is_err());
    }

    #[test]
    fn fock_bergman_function_is_constant_in_trusted_region() {
        let g = ModelGeometry::fock();
        let spec = QuadratureSpec::default();
        let gram = gram_matrix(&g, 4.0, &spec).unwrap();
        let eval = KernelEvaluator::new(&g, &gram).unwrap();
        for z in [c(0.0, 0.0), c(0.5, -0.5), c(0.9, 0.9)] {
            assert_relative_eq!(
                eval.bergman_function(z).unwrap(),
                4.0 / PI,
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn non_positive_dense_gram_is_rejected() {
        let m = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
            vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)],
        ];
        let gram = GramMatrix::from_dense(1.0, m).unwrap();
        let g = ModelGeometry::cp1();
        assert!(matches!(
            KernelEvaluator::new(&g, &gram),
            Err(Error::GramNotPositive)
        ));
    }

    #[test]
    fn reproducing_property_via_quadrature() {
        let g = ModelGeometry::cp1();
        let spec = QuadratureSpec::default();
        let gram = gram_matrix(&g, 6.0, &spec).unwrap();
        let eval = KernelEvaluator::new(&g, &gram).unwrap();
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let ws: Vec<Complex64> = (0..10)
            .map(|_| {
                let r: f64 = 0.8 * rng.gen::<f64>();
                let t: f64 = 2.0 * PI * rng.gen::<f64>();
                Complex64::from_polar(r.sqrt() * 0.8, t)
            })
            .collect();
        let worst = eval.check_reproducing(&ws, &[0, 2, 5]).unwrap();
        assert!(worst < 1e-6, "reproducing error {worst:.2e}");
    }
}
