//! Numerical laboratory for Bergman-kernel decay on model geometries.
//!
//! The crate has two halves:
//!
//!  * **Growth side**: [`majorant`] defines admissible growth classes
//!    `M(x)` (Gevrey, iterated-log Denjoy scales, custom tables) and
//!    [`growth`] solves the defining equation for the degree `N(k)`, the
//!    growth function `f(k)`, and the constrained maximization of `k r^2`
//!    behind the decay envelopes.
//!  * **Kernel side**: [`geometry`] provides exactly solvable model
//!    geometries and a perturbed variant, [`bergman`] computes weighted
//!    Gram matrices and reproducing kernels numerically, and [`decay`]
//!    classifies samples into near/far bands, fits decay laws, and checks
//!    envelopes.
//!
//! [`experiment`] wires both halves to configuration files and CSV/JSON
//! artifacts for the command-line front end.

// Comparisons are written in negated form (`!(x > 0.0)`) where NaN must be
// rejected along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod config;
pub mod decay;
pub mod error;
pub mod experiment;
pub mod geodesic;
pub mod geometry;
pub mod growth;
pub mod majorant;
pub mod numeric;

pub use error::{Error, Result};
pub use majorant::Majorant;
pub use numeric::Precision;
