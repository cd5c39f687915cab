//! Dense linear-algebra helpers shared by the solvers and the convergence oracles.
//!
//! Everything here is a thin layer over `nalgebra`: eigenvalues come from a
//! real (or complex) Schur decomposition, norms from an SVD.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{OneShotError, Result};

pub type Complex64 = Complex<f64>;

/// Spectral norm (largest singular value). Zero for empty matrices.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

pub fn complex_spectral_norm(a: &DMatrix<Complex64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// Singular values sorted in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    match a.nrows() {
        0 => Vec::new(),
        1 => vec![Complex::new(a[(0, 0)], 0.0)],
        _ => a.complex_eigenvalues().iter().copied().collect(),
    }
}

/// Eigenvalues of a complex square matrix, read off the diagonal of its Schur form.
pub fn complex_eigenvalues(a: &DMatrix<Complex64>) -> Vec<Complex64> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    match a.nrows() {
        0 => Vec::new(),
        1 => vec![a[(0, 0)]],
        _ => {
            let (_, t) = a.clone().schur().unpack();
            t.diagonal().iter().copied().collect()
        }
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `a^k` by repeated squaring; `a^0 = I`.
pub fn matrix_power(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = a.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Solve `a x = rhs` with partial-pivot LU, rejecting numerically singular systems.
pub fn solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    lu.solve(rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| OneShotError::Singular(format!("{}x{} LU solve failed", a.nrows(), a.ncols())))
}

/// Solve `a X = rhs` for a matrix right-hand side.
pub fn solve_matrix(a: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let lu = a.clone().lu();
    lu.solve(rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| OneShotError::Singular(format!("{}x{} LU solve failed", a.nrows(), a.ncols())))
}

/// `I - a` for square `a`.
pub fn identity_minus(a: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(a.nrows(), a.ncols()) - a
}

/// Build a matrix from a row-major slice.
pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(OneShotError::Dimension(format!(
            "expected {rows}x{cols}={} entries, got {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

/// Row-major flattening, the layout used by the JSON problem format.
pub fn to_row_major(a: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Real and imaginary parts of a complex matrix.
pub fn split_complex(a: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_matches_repeated_product() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.3]);
        let mut p = DMatrix::identity(2, 2);
        for _ in 0..7 {
            p = &p * &a;
        }
        assert!((matrix_power(&a, 7) - p).norm() < 1e-15);
        assert_eq!(matrix_power(&a, 0), DMatrix::identity(2, 2));
    }

    #[test]
    fn radius_of_rotation_is_one() {
        let r = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((spectral_radius(&r) - 1.0).abs() < 1e-14);
        assert!((spectral_norm(&r) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_solve_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve(&a, &DVector::from_vec(vec![1.0, 1.0])).is_err());
    }

    #[test]
    fn complex_eigenvalues_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex::new(0.5, 0.2),
            Complex::new(-0.1, 0.0),
            Complex::new(0.0, -0.7),
        ]));
        let mut ev = complex_eigenvalues(&a);
        ev.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert!((ev[0] - Complex::new(-0.1, 0.0)).norm() < 1e-14);
        assert!((ev[2] - Complex::new(0.5, 0.2)).norm() < 1e-14);
    }
}
