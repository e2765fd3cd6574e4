//! Decay-law analysis of kernel samples.
//!
//! Samples are classified into three bands by the scaled separation
//! `d / sqrt(log k / k)`: `very_near` below `gamma`, `far` above the growth
//! value `f(k)`, `near` in between. Near-diagonal magnitudes are fitted in
//! log space against the Gaussian form `C k^n e^{-c k d^2}`, far samples
//! against a per-k linear decay rate, and diagonal values against an
//! expansion in `1/k`. Envelope verification counts samples above a bound
//! with a 1.05 tolerance headroom so quadrature noise cannot flip a pass.

use crate::bergman::{gram_matrix, KernelEvaluator, QuadratureSpec};
use crate::geometry::ModelGeometry;
use crate::numeric::linalg;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Headroom factor on envelope constants.
pub const ENVELOPE_TOL_FACTOR: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    VeryNear,
    Near,
    Far,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::VeryNear => "very_near",
            Region::Near => "near",
            Region::Far => "far",
        }
    }

    pub fn parse(s: &str) -> Result<Region> {
        match s {
            "very_near" => Ok(Region::VeryNear),
            "near" => Ok(Region::Near),
            "far" => Ok(Region::Far),
            other => Err(Error::Config(format!("unknown region tag '{other}'"))),
        }
    }
}

/// One kernel evaluation record.
#[derive(Debug, Clone, Copy)]
pub struct KernelSample {
    pub k: f64,
    pub z: Complex64,
    pub w: Complex64,
    pub abs_b: f64,
    pub d: f64,
    pub diastasis: f64,
    pub region: Region,
}

/// Band classification. The far band is closed on the left: a separation
/// exactly at `f sqrt(log k / k)` is far.
pub fn classify(k: f64, d: f64, gamma: f64, f_val: f64) -> Result<Region> {
    if !(k > 1.0) || !(gamma > 0.0) || d < 0.0 {
        return Err(Error::Domain(format!(
            "classify needs k > 1, gamma > 0, d >= 0 (k = {k}, gamma = {gamma}, d = {d})"
        )));
    }
    if f_val < gamma {
        return Err(Error::Domain(format!(
            "invalid region spec: f = {f_val} < gamma = {gamma}"
        )));
    }
    let scale = (k.ln() / k).sqrt();
    if d >= f_val * scale {
        Ok(Region::Far)
    } else if d <= gamma * scale {
        Ok(Region::VeryNear)
    } else {
        Ok(Region::Near)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayLaw {
    /// `C k^n e^{-c k d^2}`.
    GaussianInD2,
    /// `C k^n e^{-c f(k) sqrt(k log k) d}`.
    ExponentialInD,
    /// `C k^n e^{-c sqrt(k) d}` (smooth-metric baseline).
    AgmonSqrtK,
}

/// Decay-law fit / verification summary.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub law: DecayLaw,
    /// Rate constant of the law.
    pub fitted_c: f64,
    /// Amplitude constant of the law.
    pub fitted_big_c: f64,
    /// Estimated power of `k` (multi-k fits only).
    pub n_hat: Option<f64>,
    /// Coefficient of determination of the log-space regression.
    pub r_squared: f64,
    /// Samples above the envelope with the 1.05 headroom.
    pub violations: usize,
    pub n_samples: usize,
    /// Set when the input was empty and the pass is vacuous.
    pub vacuous: bool,
}

fn distinct_ks(samples: &[KernelSample]) -> Vec<f64> {
    let mut set: BTreeMap<u64, f64> = BTreeMap::new();
    for s in samples {
        set.insert(s.k.to_bits(), s.k);
    }
    let mut v: Vec<f64> = set.into_values().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn r_squared(y: &[f64], fitted: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = y.iter().zip(fitted).map(|(v, f)| (v - f) * (v - f)).sum();
    if ss_tot <= 1e-300 {
        if ss_res <= 1e-300 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    }
}

/// Least squares of `log absB` against `[1, log k, k d^2]` (the `log k`
/// column is dropped when all samples share one `k`). Returns the Gaussian
/// envelope constants; violations are counted against the fitted envelope
/// with the 1.05 headroom.
pub fn fit_gaussian(samples: &[KernelSample]) -> Result<DecayReport> {
    let usable: Vec<&KernelSample> = samples
        .iter()
        .filter(|s| matches!(s.region, Region::VeryNear | Region::Near))
        .filter(|s| s.abs_b > 0.0)
        .collect();
    let with_sep = usable.iter().filter(|s| s.d > 0.0).count();
    if with_sep < 10 {
        return Err(Error::DegenerateFit(format!(
            "gaussian fit needs >= 10 near-band samples with d > 0 and absB > 0, got {with_sep}"
        )));
    }
    let ks = distinct_ks(&usable.iter().map(|s| **s).collect::<Vec<_>>());
    let multi_k = ks.len() >= 2;

    let mut design = Vec::with_capacity(usable.len());
    let mut y = Vec::with_capacity(usable.len());
    for s in &usable {
        let mut row = vec![1.0];
        if multi_k {
            row.push(s.k.ln());
        }
        row.push(s.k * s.d * s.d);
        design.push(row);
        y.push(s.abs_b.ln());
    }
    let beta = linalg::least_squares(&design, &y)?;
    let (intercept, n_hat, slope) = if multi_k {
        (beta[0], Some(beta[1]), beta[2])
    } else {
        (beta[0], None, beta[1])
    };
    let fitted: Vec<f64> = design
        .iter()
        .map(|row| row.iter().zip(&beta).map(|(a, b)| a * b).sum())
        .collect();
    let r2 = r_squared(&y, &fitted);

    let violations = y
        .iter()
        .zip(&fitted)
        .filter(|(obs, pred)| **obs > **pred + ENVELOPE_TOL_FACTOR.ln())
        .count();

    Ok(DecayReport {
        law: DecayLaw::GaussianInD2,
        fitted_c: -slope,
        fitted_big_c: intercept.exp(),
        n_hat,
        r_squared: r2,
        violations,
        n_samples: usable.len(),
        vacuous: false,
    })
}

/// Per-k linear decay rate of the far band.
#[derive(Debug, Clone, Serialize)]
pub struct FarRateFit {
    pub k: f64,
    /// Fitted rate `rho(k)`: `log absB ~ a - rho d`.
    pub rho: f64,
    /// `rho / sqrt(k)` (smooth-metric baseline normalization).
    pub agmon_ratio: f64,
    /// `rho / (f(k) sqrt(k log k))` (growth-function normalization).
    pub growth_ratio: f64,
    pub r_squared: f64,
    pub n_samples: usize,
    pub d_min: f64,
    pub d_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FarReport {
    pub fits: Vec<FarRateFit>,
    pub warnings: Vec<String>,
}

/// Fit far-band decay rates per k (never pooled across k: the far rate
/// couples `k` and `f(k)`). Each group needs >= 10 samples spanning a
/// factor >= 2 in separation.
pub fn fit_far_exponent<F>(samples: &[KernelSample], f_of_k: F) -> Result<FarReport>
where
    F: Fn(f64) -> f64,
{
    let far: Vec<&KernelSample> = samples
        .iter()
        .filter(|s| s.region == Region::Far && s.abs_b > 0.0)
        .collect();
    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    for k in distinct_ks(&far.iter().map(|s| **s).collect::<Vec<_>>()) {
        let group: Vec<&&KernelSample> = far.iter().filter(|s| s.k == k).collect();
        let d_min = group.iter().map(|s| s.d).fold(f64::MAX, f64::min);
        let d_max = group.iter().map(|s| s.d).fold(f64::MIN, f64::max);
        if group.len() < 10 || d_max < 2.0 * d_min {
            warnings.push(format!(
                "k = {k}: skipped ({} samples, d spread {:.3}x)",
                group.len(),
                d_max / d_min
            ));
            continue;
        }
        let design: Vec<Vec<f64>> = group.iter().map(|s| vec![1.0, s.d]).collect();
        let y: Vec<f64> = group.iter().map(|s| s.abs_b.ln()).collect();
        let beta = linalg::least_squares(&design, &y)?;
        let fitted: Vec<f64> = design
            .iter()
            .map(|row| row[0] * beta[0] + row[1] * beta[1])
            .collect();
        let rho = -beta[1];
        let f_val = f_of_k(k);
        fits.push(FarRateFit {
            k,
            rho,
            agmon_ratio: rho / k.sqrt(),
            growth_ratio: rho / (f_val * (k * k.ln()).sqrt()),
            r_squared: r_squared(&y, &fitted),
            n_samples: group.len(),
            d_min,
            d_max,
        });
    }
    if fits.is_empty() {
        return Err(Error::DegenerateFit(
            "no far-band group with >= 10 samples spanning a factor 2 in d".to_string(),
        ));
    }
    Ok(FarReport { fits, warnings })
}

/// Least squares of `y` against `[1, 1/k, 1/k^2]`; returns `(b0, b1)`.
pub fn fit_inverse_k_series(ks: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if ks.len() < 3 || ks.len() != ys.len() {
        return Err(Error::DegenerateFit(format!(
            "diagonal expansion needs >= 3 k values, got {}",
            ks.len()
        )));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateFit(
            "diagonal expansion needs strictly increasing k values".to_string(),
        ));
    }
    let design: Vec<Vec<f64>> = ks
        .iter()
        .map(|&k| vec![1.0, 1.0 / k, 1.0 / (k * k)])
        .collect();
    let beta = linalg::least_squares(&design, ys)?;
    Ok((beta[0], beta[1]))
}

/// Diagonal expansion coefficients at a fixed point: fits
/// `pi k^{-1} B_k(z, z)` against `b0 + b1/k + b2/k^2` over the given powers,
/// using the exact kernel when the model has one and the numerical pipeline
/// otherwise.
pub fn diagonal_expansion_fit(
    g: &ModelGeometry,
    ks: &[f64],
    z: Complex64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let mut ys = Vec::with_capacity(ks.len());
    for &k in ks {
        let abs_b = match g.exact_kernel_abs(k, z, z) {
            Some(v) => v,
            None => {
                let gram = gram_matrix(g, k, spec)?;
                KernelEvaluator::new(g, &gram)?.bergman_function(z)?
            }
        };
        ys.push(PI / k * abs_b);
    }
    fit_inverse_k_series(ks, &ys)
}

/// Envelope exponent for a law at one sample.
fn envelope_rate(law: DecayLaw, c: f64, k: f64, d: f64, f_val: f64) -> f64 {
    match law {
        DecayLaw::GaussianInD2 => c * k * d * d,
        DecayLaw::ExponentialInD => c * f_val * (k * k.ln()).sqrt() * d,
        DecayLaw::AgmonSqrtK => c * k.sqrt() * d,
    }
}

/// Count samples above `C k^n e^{-rate}` (with the 1.05 headroom on `C`).
/// An empty sample set passes vacuously with a flag.
pub fn verify_envelope<F>(
    samples: &[KernelSample],
    law: DecayLaw,
    c: f64,
    big_c: f64,
    n_dim: f64,
    f_of_k: F,
) -> Result<DecayReport>
where
    F: Fn(f64) -> f64,
{
    if !(c > 0.0) || !(big_c > 0.0) {
        return Err(Error::Domain(format!(
            "envelope constants must be positive (c = {c}, C = {big_c})"
        )));
    }
    if samples.is_empty() {
        return Ok(DecayReport {
            law,
            fitted_c: c,
            fitted_big_c: big_c,
            n_hat: None,
            r_squared: f64::NAN,
            violations: 0,
            n_samples: 0,
            vacuous: true,
        });
    }
    let violations = samples
        .iter()
        .filter(|s| {
            let rate = envelope_rate(law, c, s.k, s.d, f_of_k(s.k));
            let bound = ENVELOPE_TOL_FACTOR * big_c * s.k.powf(n_dim) * (-rate).exp();
            s.abs_b > bound
        })
        .count();
    Ok(DecayReport {
        law,
        fitted_c: c,
        fitted_big_c: big_c,
        n_hat: None,
        r_squared: f64::NAN,
        violations,
        n_samples: samples.len(),
        vacuous: false,
    })
}

/// Envelope verification with constants taken from a fit and the amplitude
/// inflated to the largest observed residual, so the check gates the *form*
/// of the law.
pub fn verify_envelope_fitted<F>(
    samples: &[KernelSample],
    law: DecayLaw,
    fit: &DecayReport,
    n_dim: f64,
    f_of_k: F,
) -> Result<DecayReport>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return verify_envelope(samples, law, fit.fitted_c.max(1e-300), 1.0, n_dim, f_of_k);
    }
    let c = fit.fitted_c;
    if !(c > 0.0) {
        return Err(Error::DegenerateFit(format!(
            "fitted rate constant not positive: {c}"
        )));
    }
    let mut big_c = fit.fitted_big_c;
    for s in samples {
        if s.abs_b <= 0.0 {
            continue;
        }
        let rate = envelope_rate(law, c, s.k, s.d, f_of_k(s.k));
        let needed = s.abs_b * (rate).exp() / s.k.powf(n_dim);
        big_c = big_c.max(needed);
    }
    verify_envelope(samples, law, c, big_c, n_dim, f_of_k)
}
