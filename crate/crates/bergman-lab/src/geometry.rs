//! Model Kähler geometries on a single affine chart.
//!
//! Two exactly solvable models and a perturbed variant:
//!
//!  * `fock`: flat potential `|z|^2` on C, Euclidean distance, Gaussian
//!    kernel `(k/pi) e^{-k|z-w|^2/2}`.
//!  * `cp1`: Fubini-Study potential `log(1 + |z|^2)`; sections are the
//!    polynomials of degree <= k and the kernel is explicit.
//!  * `cp1` + bump: a rotation-invariant, smooth, flat-at-edge perturbation
//!    `eps * exp(-1/(1-(u-1)^2))` of the radial variable `u = |z|^2` (the
//!    bump is Gevrey-regular but not analytic). Distances fall back to a
//!    numerical geodesic solver.
//!
//! All models are rotation invariant, so the potential is a function `F(u)`
//! of `u = |z|^2` and the metric density is `lambda(u) = F'(u) + u F''(u)`.

use crate::geodesic::{GeodesicOptions, GeodesicSolver};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// Default perturbation amplitude. Keeps the metric positive on the
/// evaluation disk |z| <= 1 (the sup over all of C is a bit smaller than
/// 0.05; see `validate_positivity`).
pub const DEFAULT_BUMP_AMPLITUDE: f64 = 0.05;

/// Default chart truncation radius for the CP^1 models.
pub const DEFAULT_R_MAX: f64 = 1e4;

/// Radius of the disk on which positivity of the metric is validated.
pub const POSITIVITY_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Fock,
    Cp1,
}

/// Rotation-invariant bump perturbation of the radial potential.
#[derive(Debug, Clone, Copy)]
pub struct Perturbation {
    pub amplitude: f64,
}

#[derive(Clone)]
pub struct ModelGeometry {
    name: String,
    dim: usize,
    kind: GeometryKind,
    perturbation: Option<Perturbation>,
    r_max: f64,
    geodesic: Arc<OnceLock<GeodesicSolver>>,
}

impl std::fmt::Debug for ModelGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelGeometry")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("perturbation", &self.perturbation)
            .finish()
    }
}

// --- the bump profile -------------------------------------------------------

/// `b(u) = exp(-1/(1-(u-1)^2))` on `|u - 1| < 1`, zero outside.
pub fn bump(u: f64) -> f64 {
    let t = u - 1.0;
    let q = 1.0 - t * t;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// First derivative of the bump.
pub fn bump_d1(u: f64) -> f64 {
    let t = u - 1.0;
    let q = 1.0 - t * t;
    if q <= 0.0 {
        0.0
    } else {
        bump(u) * (-2.0 * t / (q * q))
    }
}

/// Second derivative of the bump.
pub fn bump_d2(u: f64) -> f64 {
    let t = u - 1.0;
    let q = 1.0 - t * t;
    if q <= 0.0 {
        0.0
    } else {
        let q2 = q * q;
        bump(u) * (4.0 * t * t / (q2 * q2) - 2.0 / q2 - 8.0 * t * t / (q2 * q))
    }
}

/// Complex continuation of the bump, used to polarize the perturbed
/// potential near the diagonal. The profile is real-analytic on the open
/// support (0, 2), so substituting the complex product `z w-bar` is valid
/// for arguments near that interval; the formula is cut off where the real
/// profile is zero to double precision (|1 - (zeta-1)^2| small or Re outside
/// the support).
pub fn bump_complex(zeta: Complex64) -> Complex64 {
    let t = zeta - 1.0;
    if t.re.abs() >= 1.0 {
        return Complex64::new(0.0, 0.0);
    }
    let q = Complex64::new(1.0, 0.0) - t * t;
    if q.norm() < 1e-2 {
        return Complex64::new(0.0, 0.0);
    }
    (-q.inv()).exp()
}

// --- construction -----------------------------------------------------------

impl ModelGeometry {
    pub fn fock() -> Self {
        ModelGeometry {
            name: "fock".to_string(),
            dim: 1,
            kind: GeometryKind::Fock,
            perturbation: None,
            r_max: DEFAULT_R_MAX,
            geodesic: Arc::new(OnceLock::new()),
        }
    }

    pub fn cp1() -> Self {
        ModelGeometry {
            name: "cp1".to_string(),
            dim: 1,
            kind: GeometryKind::Cp1,
            perturbation: None,
            r_max: DEFAULT_R_MAX,
            geodesic: Arc::new(OnceLock::new()),
        }
    }

    /// CP^1 with the bump perturbation. Positivity of the metric is
    /// validated on the evaluation disk at construction.
    pub fn cp1_perturbed(amplitude: f64) -> Result<Self> {
        let g = ModelGeometry {
            name: "cp1-perturbed".to_string(),
            dim: 1,
            kind: GeometryKind::Cp1,
            perturbation: Some(Perturbation { amplitude }),
            r_max: DEFAULT_R_MAX,
            geodesic: Arc::new(OnceLock::new()),
        };
        g.validate_positivity(0, 100, POSITIVITY_RADIUS)?;
        Ok(g)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn perturbation(&self) -> Option<Perturbation> {
        self.perturbation
    }

    pub fn chart_radius(&self) -> f64 {
        self.r_max
    }

    pub fn is_perturbed(&self) -> bool {
        self.perturbation.is_some_and(|p| p.amplitude != 0.0)
    }

    fn eps(&self) -> f64 {
        self.perturbation.map_or(0.0, |p| p.amplitude)
    }

    // --- radial data ---------------------------------------------------------

    /// `F(u)`: the potential as a function of `u = |z|^2`.
    pub fn radial_potential(&self, u: f64) -> f64 {
        let base = match self.kind {
            GeometryKind::Fock => u,
            GeometryKind::Cp1 => (1.0 + u).ln(),
        };
        base + self.eps() * bump(u)
    }

    pub fn radial_potential_d1(&self, u: f64) -> f64 {
        let base = match self.kind {
            GeometryKind::Fock => 1.0,
            GeometryKind::Cp1 => 1.0 / (1.0 + u),
        };
        base + self.eps() * bump_d1(u)
    }

    pub fn radial_potential_d2(&self, u: f64) -> f64 {
        let base = match self.kind {
            GeometryKind::Fock => 0.0,
            GeometryKind::Cp1 => -1.0 / ((1.0 + u) * (1.0 + u)),
        };
        base + self.eps() * bump_d2(u)
    }

    /// Metric density `lambda(u) = F'(u) + u F''(u)`; the Kähler form is
    /// `lambda dx dy` and the Riemannian line element `sqrt(lambda) |dz|`.
    pub fn metric_factor(&self, z: Complex64) -> f64 {
        let u = z.norm_sqr();
        self.radial_potential_d1(u) + u * self.radial_potential_d2(u)
    }

    // --- pointwise data ------------------------------------------------------

    pub fn potential(&self, z: Complex64) -> f64 {
        self.radial_potential(z.norm_sqr())
    }

    /// Polarized potential `psi(z, w-bar)`; restricting to `w = z` recovers
    /// the potential.
    pub fn holomorphic_extension(&self, z: Complex64, w_bar: Complex64) -> Complex64 {
        let zeta = z * w_bar;
        let base = match self.kind {
            GeometryKind::Fock => zeta,
            GeometryKind::Cp1 => (Complex64::new(1.0, 0.0) + zeta).ln(),
        };
        base + self.eps() * bump_complex(zeta)
    }

    /// Calabi diastasis `D(z, w) = phi(z) + phi(w) - 2 Re psi(z, w-bar)`,
    /// clamped at zero against rounding.
    pub fn diastasis(&self, z: Complex64, w: Complex64) -> f64 {
        let d = match (self.kind, self.is_perturbed()) {
            (GeometryKind::Fock, _) => (z - w).norm_sqr(),
            (GeometryKind::Cp1, false) => cp1_diastasis(z, w),
            (GeometryKind::Cp1, true) => {
                let base = cp1_diastasis(z, w);
                let e = self.eps();
                let pert = e * (bump(z.norm_sqr()) + bump(w.norm_sqr()))
                    - 2.0 * e * bump_complex(z * w.conj()).re;
                base + pert
            }
        };
        d.max(0.0)
    }

    /// Geodesic distance for the chart metric. Closed forms for the exact
    /// models; the perturbed model goes through the graph geodesic solver
    /// (short separations use straight-segment quadrature directly).
    pub fn distance(&self, z: Complex64, w: Complex64) -> Result<f64> {
        self.check_chart(z)?;
        self.check_chart(w)?;
        match (self.kind, self.is_perturbed()) {
            (GeometryKind::Fock, _) => Ok((z - w).norm()),
            (GeometryKind::Cp1, false) => Ok(cp1_distance(z, w)),
            (GeometryKind::Cp1, true) => self.geodesic_solver().distance(z, w),
        }
    }

    /// Shared geodesic solver (built on first use, default options).
    pub fn geodesic_solver(&self) -> &GeodesicSolver {
        self.geodesic.get_or_init(|| {
            let g = self.clone();
            GeodesicSolver::new(
                Arc::new(move |z| g.metric_factor(z)),
                GeodesicOptions::default(),
            )
        })
    }

    /// Number of sections in the computational basis at power `k`.
    /// CP^1 carries the polynomials of degree <= k; the Fock basis is
    /// truncated at degree max(8k, 64) for evaluation on the unit disk.
    pub fn basis_size(&self, k: f64) -> Result<usize> {
        match self.kind {
            GeometryKind::Fock => {
                if !(k > 0.0) {
                    return Err(Error::Domain(format!("fock basis needs k > 0, got {k}")));
                }
                Ok(((8.0 * k).ceil() as usize).max(64) + 1)
            }
            GeometryKind::Cp1 => {
                let ki = k.round();
                if !(ki >= 1.0) || (k - ki).abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "cp1 sections need integer k >= 1, got {k}"
                    )));
                }
                Ok(ki as usize + 1)
            }
        }
    }

    /// Exact weighted kernel `|B_k(z, w)|`, where available (unperturbed
    /// models only).
    pub fn exact_kernel_abs(&self, k: f64, z: Complex64, w: Complex64) -> Option<f64> {
        if self.is_perturbed() {
            return None;
        }
        match self.kind {
            GeometryKind::Fock => Some(fock_kernel(k, z, w)),
            GeometryKind::Cp1 => {
                let ki = k.round();
                if (k - ki).abs() < 1e-9 && ki >= 1.0 {
                    Some(cp1_exact_kernel(ki as u32, z, w))
                } else {
                    None
                }
            }
        }
    }

    fn check_chart(&self, z: Complex64) -> Result<()> {
        if z.norm() <= self.r_max {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "point {z} outside chart truncation radius {}",
                self.r_max
            )))
        }
    }

    /// Check `dd-bar phi > 0` by finite differences at `n_points` seeded
    /// random points of the disk of the given radius.
    pub fn validate_positivity(&self, seed: u64, n_points: usize, radius: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-4;
        for _ in 0..n_points {
            // Uniform on the disk.
            let r = radius * rng.gen::<f64>().sqrt();
            let th = 2.0 * PI * rng.gen::<f64>();
            let z = Complex64::from_polar(r, th);
            let lap = (self.potential(z + h)
                + self.potential(z - h)
                + self.potential(z + Complex64::new(0.0, h))
                + self.potential(z - Complex64::new(0.0, h))
                - 4.0 * self.potential(z))
                / (h * h);
            let ddbar = 0.25 * lap;
            if !(ddbar > 0.0) {
                return Err(Error::Domain(format!(
                    "metric positivity lost at z = {z}: dd-bar phi = {ddbar:.6e} \
                     (geometry '{}')",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

fn cp1_diastasis(z: Complex64, w: Complex64) -> f64 {
    let num = (1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr());
    let den = (Complex64::new(1.0, 0.0) + z * w.conj()).norm_sqr();
    (num / den).ln()
}

/// Fubini-Study geodesic distance in the normalization where the potential
/// is `log(1 + |z|^2)`: the angle `arccos(|1 + z w-bar| / sqrt((1+|z|^2)(1+|w|^2)))`.
pub fn cp1_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (Complex64::new(1.0, 0.0) + z * w.conj()).norm();
    let den = ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt();
    (num / den).clamp(-1.0, 1.0).acos()
}

/// Exact Fock-model kernel `(k/pi)^n e^{-k |z-w|^2 / 2}` (n = 1).
pub fn fock_kernel(k: f64, z: Complex64, w: Complex64) -> f64 {
    (k / PI) * (-k * (z - w).norm_sqr() / 2.0).exp()
}

/// Exact CP^1 kernel
/// `((k+1)/pi) |1 + z w-bar|^k / ((1+|z|^2)^{k/2} (1+|w|^2)^{k/2})`,
/// evaluated in log space.
pub fn cp1_exact_kernel(k: u32, z: Complex64, w: Complex64) -> f64 {
    let kf = k as f64;
    let log_num = kf * (Complex64::new(1.0, 0.0) + z * w.conj()).norm().ln();
    let log_den = 0.5 * kf * ((1.0 + z.norm_sqr()).ln() + (1.0 + w.norm_sqr()).ln());
    ((k + 1) as f64 / PI) * (log_num - log_den).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fock_kernel_values() {
        // Diagonal value k/pi.
        assert_relative_eq!(fock_kernel(5.0, c(0.3, 0.1), c(0.3, 0.1)), 5.0 / PI);
        // |z - w|^2 = 2 at k = 1.
        let v = fock_kernel(1.0, c(1.0, 1.0), c(0.0, 0.0));
        assert_relative_eq!(v, (-1.0f64).exp() / PI, max_relative = 1e-14);
        assert_relative_eq!(v, 0.11709966304863834, max_relative = 1e-12);
        // Ratio to the diagonal is e^{-k D / 2} with D = |z-w|^2.
        let g = ModelGeometry::fock();
        let (z, w, k) = (c(0.4, -0.2), c(-0.1, 0.3), 7.0);
        let ratio = fock_kernel(k, z, w) / fock_kernel(k, z, z);
        assert_relative_eq!(
            ratio,
            (-k * g.diastasis(z, w) / 2.0).exp(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn cp1_kernel_values() {
        // Constant (k+1)/pi on the diagonal.
        for k in [1u32, 5, 64] {
            for z in [c(0.0, 0.0), c(0.4, 0.3), c(-0.9, 0.1)] {
                assert_relative_eq!(
                    cp1_exact_kernel(k, z, z),
                    (k + 1) as f64 / PI,
                    max_relative = 1e-13
                );
            }
        }
        assert_relative_eq!(
            cp1_exact_kernel(5, c(0.0, 0.0), c(0.0, 0.0)),
            6.0 / PI,
            max_relative = 1e-14
        );
        // Decay towards the antipode of z = 0.
        assert!(cp1_exact_kernel(8, c(0.0, 0.0), c(1e5, 0.0)) < 1e-30);
    }

    #[test]
    fn diastasis_closed_forms() {
        let fock = ModelGeometry::fock();
        let (z, w) = (c(0.3, -0.7), c(-0.2, 0.5));
        assert_relative_eq!(
            fock.diastasis(z, w),
            (z - w).norm_sqr(),
            max_relative = 1e-13
        );

        let cp1 = ModelGeometry::cp1();
        let expect = ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())
            / (Complex64::new(1.0, 0.0) + z * w.conj()).norm_sqr())
        .ln();
        assert_relative_eq!(cp1.diastasis(z, w), expect, max_relative = 1e-13);

        for g in [&fock, &cp1] {
            assert_eq!(g.diastasis(z, z), 0.0);
            assert_relative_eq!(g.diastasis(z, w), g.diastasis(w, z), max_relative = 1e-14);
        }
    }

    #[test]
    fn diastasis_rotation_invariance() {
        let rot = Complex64::from_polar(1.0, 1.234);
        let (z, w) = (c(0.5, 0.2), c(0.1, -0.6));
        for g in [
            ModelGeometry::fock(),
            ModelGeometry::cp1(),
            ModelGeometry::cp1_perturbed(DEFAULT_BUMP_AMPLITUDE).unwrap(),
        ] {
            assert_relative_eq!(
                g.diastasis(z, w),
                g.diastasis(rot * z, rot * w),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn extension_restricts_to_potential() {
        for g in [
            ModelGeometry::fock(),
            ModelGeometry::cp1(),
            ModelGeometry::cp1_perturbed(DEFAULT_BUMP_AMPLITUDE).unwrap(),
        ] {
            for z in [c(0.0, 0.0), c(0.7, 0.2), c(-1.1, 0.4), c(0.9, -0.9)] {
                let psi = g.holomorphic_extension(z, z.conj());
                assert!((psi.re - g.potential(z)).abs() < 1e-12);
                assert!(psi.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distances_closed_forms() {
        let fock = ModelGeometry::fock();
        assert_relative_eq!(
            fock.distance(c(0.0, 0.0), c(3.0, 0.0)).unwrap(),
            3.0,
            max_relative = 1e-15
        );
        let cp1 = ModelGeometry::cp1();
        // d(0, w) = arctan |w| on the Fubini-Study chart.
        for w in [0.3, 1.0, 2.7] {
            assert_relative_eq!(
                cp1.distance(c(0.0, 0.0), c(w, 0.0)).unwrap(),
                w.atan(),
                max_relative = 1e-13
            );
        }
        // Symmetry and vanishing on the diagonal.
        let (z, w) = (c(0.2, 0.4), c(-0.5, 0.1));
        for g in [&fock, &cp1] {
            assert_eq!(g.distance(z, z).unwrap(), 0.0);
            assert_relative_eq!(
                g.distance(z, w).unwrap(),
                g.distance(w, z).unwrap(),
                max_relative = 1e-12
            );
        }
        // Chart truncation is enforced.
        assert!(cp1.distance(c(0.0, 0.0), c(2e4, 0.0)).is_err());
    }

    #[test]
    fn small_separation_diastasis_matches_distance_squared() {
        let sep = 1e-3;
        for g in [
            ModelGeometry::fock(),
            ModelGeometry::cp1(),
            ModelGeometry::cp1_perturbed(DEFAULT_BUMP_AMPLITUDE).unwrap(),
        ] {
            for base in [c(0.4, 0.1), c(0.8, -0.3)] {
                for dir in [c(1.0, 0.0), c(0.0, 1.0), c(0.6, 0.8)] {
                    let w = base + dir * sep;
                    let d = g.distance(base, w).unwrap();
                    let dia = g.diastasis(base, w);
                    assert!(
                        (d * d / dia - 1.0).abs() < 2e-3,
                        "{}: d^2/D = {} at {base}",
                        g.name(),
                        d * d / dia
                    );
                }
            }
        }
    }

    #[test]
    fn positivity_validation() {
        // The default amplitude passes on the evaluation disk.
        assert!(ModelGeometry::cp1_perturbed(DEFAULT_BUMP_AMPLITUDE).is_ok());
        // A grossly over-sized amplitude loses positivity inside |z| <= 1.
        assert!(ModelGeometry::cp1_perturbed(0.4).is_err());
        // Unperturbed models are positive everywhere.
        ModelGeometry::fock()
            .validate_positivity(7, 100, 1.5)
            .unwrap();
        ModelGeometry::cp1()
            .validate_positivity(7, 100, 1.5)
            .unwrap();
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        use crate::numeric::diff;
        for u in [0.2, 0.6, 1.0, 1.3, 1.9] {
            let d1 = diff::d1_central5(&bump, u, 1e-4);
            assert!((bump_d1(u) - d1).abs() < 1e-8, "b' at {u}");
            let d2 = diff::d2_central5(&bump, u, 1e-4);
            assert!((bump_d2(u) - d2).abs() < 1e-5, "b'' at {u}");
        }
        // Flat at the support edges and outside.
        for u in [0.0, 2.0, 2.5, -0.3] {
            assert_eq!(bump(u), 0.0);
            assert_eq!(bump_d1(u), 0.0);
            assert_eq!(bump_d2(u), 0.0);
        }
    }

    #[test]
    fn basis_sizes() {
        let fock = ModelGeometry::fock();
        assert_eq!(fock.basis_size(1.0).unwrap(), 65);
        assert_eq!(fock.basis_size(64.0).unwrap(), 513);
        let cp1 = ModelGeometry::cp1();
        assert_eq!(cp1.basis_size(2.0).unwrap(), 3);
        assert_eq!(cp1.basis_size(64.0).unwrap(), 65);
        assert!(cp1.basis_size(2.5).is_err());
    }
}
