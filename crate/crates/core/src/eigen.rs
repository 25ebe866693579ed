//! Hermitian eigendecomposition for the small dense matrices used by the spin
//! model: complex 3x3 blocks on the hot path and the 81-dimensional full
//! product space for cross-checks.
//!
//! Both entry points verify Hermiticity before factorizing and return
//! eigenvalues sorted ascending with the eigenvector columns permuted to
//! match.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative Hermiticity tolerance: max |H_ij - conj(H_ji)| must not exceed
/// this times the largest element magnitude.
pub const HERMITICITY_TOL: f64 = 1e-9;

/// Eigendecomposition of a 3x3 Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigh3 {
    /// Real eigenvalues, ascending.
    pub values: Vector3<f64>,
    /// Orthonormal eigenvectors, column k belongs to `values[k]`.
    pub vectors: Matrix3<Complex64>,
}

/// Eigendecomposition of an n x n Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EighDyn {
    pub values: DVector<f64>,
    pub vectors: DMatrix<Complex64>,
}

fn hermiticity_check(elems: &[Complex64], n: usize) -> Result<()> {
    let mut scale = 0.0f64;
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            // column-major storage
            let hij = elems[j * n + i];
            let hji = elems[i * n + j];
            scale = scale.max(hij.norm());
            dev = dev.max((hij - hji.conj()).norm());
        }
    }
    let bound = HERMITICITY_TOL * scale;
    if dev > bound {
        return Err(Error::NotHermitian { deviation: dev, bound });
    }
    Ok(())
}

fn sort_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Diagonalizes a Hermitian 3x3 matrix.
///
/// Fails if the matrix is not Hermitian within [`HERMITICITY_TOL`] (relative
/// to its largest element).
pub fn eigh3(h: &Matrix3<Complex64>) -> Result<Eigh3> {
    hermiticity_check(h.as_slice(), 3)?;
    let eig = SymmetricEigen::new(*h);
    let order = sort_order(eig.eigenvalues.as_slice());
    let mut values = Vector3::zeros();
    let mut vectors = Matrix3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Eigh3 { values, vectors })
}

/// Diagonalizes a Hermitian n x n matrix.
pub fn eigh_dyn(h: &DMatrix<Complex64>) -> Result<EighDyn> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "eigh needs a square non-empty matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    hermiticity_check(h.as_slice(), n)?;
    let eig = SymmetricEigen::new(h.clone());
    let order = sort_order(eig.eigenvalues.as_slice());
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EighDyn { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Eigenvalues of a Hermitian 3x3 matrix from the characteristic cubic,
    /// solved in closed form (trigonometric method). Independent of the
    /// library factorization; used as the test oracle.
    fn cubic_eigenvalues(h: &Matrix3<Complex64>) -> [f64; 3] {
        let tr: Complex64 = h[(0, 0)] + h[(1, 1)] + h[(2, 2)];
        let tr = tr.re;
        // sum of principal 2x2 minors
        let minor = |i: usize, j: usize| -> f64 {
            (h[(i, i)] * h[(j, j)] - h[(i, j)] * h[(j, i)]).re
        };
        let c1 = minor(0, 1) + minor(0, 2) + minor(1, 2);
        let det = (h[(0, 0)] * (h[(1, 1)] * h[(2, 2)] - h[(1, 2)] * h[(2, 1)])
            - h[(0, 1)] * (h[(1, 0)] * h[(2, 2)] - h[(1, 2)] * h[(2, 0)])
            + h[(0, 2)] * (h[(1, 0)] * h[(2, 1)] - h[(1, 1)] * h[(2, 0)]))
            .re;
        // depressed cubic t^3 + p t + q with lambda = t + tr/3; p <= 0 because
        // all roots are real
        let s = tr / 3.0;
        let p = c1 - tr * tr / 3.0;
        let q = -det + c1 * s - 2.0 * s * s * s;
        let m = 2.0 * ((-p).max(0.0) / 3.0).sqrt();
        if m < 1e-9 * (1.0 + s.abs()) {
            return [s, s, s];
        }
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut out = [0.0; 3];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + s;
        }
        out.sort_by(f64::total_cmp);
        out
    }

    fn random_hermitian(seed: [f64; 9]) -> Matrix3<Complex64> {
        let a = Matrix3::from_fn(|i, j| c(seed[3 * i + j], seed[(3 * i + j + 4) % 9]));
        (a + a.adjoint()).scale(0.5)
    }

    #[test]
    fn diagonal_matrix_passes_through() {
        let h = Matrix3::from_diagonal(&Vector3::new(c(3460.0, 0.0), c(0.0, 0.0), c(3460.0, 0.0)));
        let eig = eigh3(&h).unwrap();
        assert_eq!(eig.values, Vector3::new(0.0, 3460.0, 3460.0));
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut h = Matrix3::zeros();
        h[(0, 1)] = c(1.0, 0.0);
        h[(1, 0)] = c(2.0, 0.0);
        let err = eigh3(&h).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn residual_and_orthonormality_hold() {
        let h = random_hermitian([3.1, -0.4, 2.2, 0.9, 1250.0, -7.7, 0.01, 40.0, -3.0]);
        let eig = eigh3(&h).unwrap();
        let scale = h.norm();
        for k in 0..3 {
            let v = eig.vectors.column(k);
            let resid = (h * v - v.scale(eig.values[k])).norm();
            assert!(resid <= 1e-9 * scale, "residual {resid:.3e}");
        }
        let gram = eig.vectors.adjoint() * eig.vectors;
        assert_relative_eq!(gram.norm(), 3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn dynamic_path_matches_static_path() {
        let h = random_hermitian([1.0, 2.0, 3.0, -4.0, 5.0, 600.0, 7.0, 8.5, -9.0]);
        let hd = DMatrix::from_fn(3, 3, |i, j| h[(i, j)]);
        let a = eigh3(&h).unwrap();
        let b = eigh_dyn(&hd).unwrap();
        for k in 0..3 {
            assert_relative_eq!(a.values[k], b.values[k], max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn matches_cubic_formula(vals in proptest::array::uniform9(-2000.0f64..2000.0)) {
            let h = random_hermitian(vals);
            let eig = eigh3(&h).unwrap();
            let oracle = cubic_eigenvalues(&h);
            let scale = 1.0 + h.norm();
            for k in 0..3 {
                prop_assert!((eig.values[k] - oracle[k]).abs() <= 1e-8 * scale);
            }
        }
    }
}
