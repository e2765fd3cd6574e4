//! Finite-difference derivative stencils.

/// Fourth-order central first derivative (5-point stencil).
pub fn d1_central5<F: Fn(f64) -> f64 + ?Sized>(f: &F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second derivative (5-point stencil).
pub fn d2_central5<F: Fn(f64) -> f64 + ?Sized>(f: &F, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

/// Second-order central first derivative.
pub fn d1_central2<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Step size for the 5-point first-derivative stencil at scale `x`.
pub fn step_d1(x: f64) -> f64 {
    2e-3 * x.abs().max(1.0)
}

/// Step size for the 5-point second-derivative stencil at scale `x`.
pub fn step_d2(x: f64) -> f64 {
    4e-3 * x.abs().max(1.0)
}
