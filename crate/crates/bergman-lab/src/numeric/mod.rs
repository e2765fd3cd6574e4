//! Shared numerical machinery: compensated summation, adaptive quadrature,
//! safeguarded root finding, monotone cubic interpolation, finite differences,
//! and the small dense linear algebra the fitting code needs.

pub mod diff;
pub mod linalg;
pub mod quadrature;
pub mod roots;
pub mod spline;
pub mod sum;

/// Working-precision mode for long accumulations.
///
/// `Double` sums in plain f64. `Extended` uses Neumaier-compensated
/// accumulation, which roughly doubles the effective precision of sums and
/// guards ill-conditioned cancellation in kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

impl std::str::FromStr for Precision {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(crate::Error::Config(format!(
                "unknown precision '{other}' (expected 'double' or 'extended')"
            ))),
        }
    }
}

/// Geometric grid of `n` points on `[lo, hi]` (inclusive endpoints, `lo > 0`).
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "bad geometric grid request");
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Linear grid of `n` points on `[lo, hi]` (inclusive endpoints).
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi >= lo && n >= 2, "bad linear grid request");
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
