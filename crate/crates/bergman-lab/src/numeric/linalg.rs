//! Small dense linear algebra: Gaussian elimination for the normal equations
//! of the regression fits, and a complex Hermitian Cholesky factorization for
//! the general (non-diagonal) Gram path.

#![allow(clippy::needless_range_loop)]

use crate::{Error, Result};
use num_complex::Complex64;

/// Solve the n-by-n system `a x = b` in place by Gaussian elimination with
/// partial pivoting. `a` is row-major.
pub fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::DegenerateFit(
                "singular normal equations".to_string(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Ordinary least squares `y ~ X beta` via the normal equations.
/// `xs[i]` is the i-th design row. Returns the coefficient vector.
pub fn least_squares(xs: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    assert!(n == y.len() && n > 0);
    let p = xs[0].len();
    if n < p {
        return Err(Error::DegenerateFit(format!(
            "{n} observations for {p} parameters"
        )));
    }
    let mut ata = vec![vec![0.0; p]; p];
    let mut aty = vec![0.0; p];
    for (row, &yi) in xs.iter().zip(y) {
        for i in 0..p {
            aty[i] += row[i] * yi;
            for j in 0..p {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve_dense(&mut ata, &mut aty)
}

/// Column-major lower-triangular Cholesky factor of a Hermitian positive
/// definite matrix (row-major `n x n`). Fails if a pivot is not positive.
pub fn cholesky_hermitian(a: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let n = a.len();
    let mut l = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            if i == j {
                if s.re <= 0.0 || s.im.abs() > 1e-12 * s.re.abs().max(1e-300) {
                    return Err(Error::GramNotPositive);
                }
                l[i][j] = Complex64::new(s.re.sqrt(), 0.0);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Invert a lower-triangular matrix by forward substitution.
pub fn invert_lower(l: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = l.len();
    let mut inv = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for col in 0..n {
        inv[col][col] = Complex64::new(1.0, 0.0) / l[col][col];
        for row in col + 1..n {
            let mut s = Complex64::new(0.0, 0.0);
            for k in col..row {
                s += l[row][k] * inv[k][col];
            }
            inv[row][col] = -s / l[row][row];
        }
    }
    inv
}
