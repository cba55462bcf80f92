//! Dense helpers layered on nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `max|A - A^T| / max|A|`, zero for the zero matrix.
pub fn relative_asymmetry<T: Scalar>(a: &DMatrix<T>) -> T {
    let scale = a.amax();
    if scale == T::zero() {
        return T::zero();
    }
    (a - a.transpose()).amax() / scale
}

/// `max|A + A^T| / max|A|`.
pub fn relative_skew_defect<T: Scalar>(a: &DMatrix<T>) -> T {
    let scale = a.amax();
    if scale == T::zero() {
        return T::zero();
    }
    (a + a.transpose()).amax() / scale
}

/// Copies the upper triangle onto the lower one.
pub fn mirror_upper<T: Scalar>(a: &mut DMatrix<T>) {
    for i in 0..a.nrows() {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues<T: Scalar>(a: &DMatrix<T>) -> Vec<T> {
    let mut values: Vec<T> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalue"));
    values
}

/// Spectral condition number of a symmetric positive definite matrix.
pub fn spd_condition_number<T: Scalar>(a: &DMatrix<T>) -> T {
    let values = symmetric_eigenvalues(a);
    match (values.first(), values.last()) {
        (Some(&lo), Some(&hi)) if lo > T::zero() => hi / lo,
        _ => T::max_value().unwrap_or_else(T::one),
    }
}

/// Solves `A u = lambda B u` for symmetric `A` and SPD `B`.
///
/// Eigenvalues ascend; eigenvectors are `B`-orthonormal columns.
pub fn generalized_symmetric_eigen<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<(Vec<T>, DMatrix<T>)> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::Dimension("generalized eigenproblem needs square matrices of equal size".into()));
    }
    let chol = Cholesky::new(b.clone()).ok_or_else(|| Error::Solve("B is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or_else(|| Error::Solve("singular Cholesky factor".into()))?;
    let mut c = &l_inv * a * l_inv.transpose();
    let cc = c.clone();
    c = (cc.clone() + cc.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).expect("finite eigenvalue"));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let back = l_inv.transpose();
    let vectors = DMatrix::from_fn(a.nrows(), a.nrows(), |r, k| {
        let col = order[k];
        (0..a.nrows()).fold(T::zero(), |acc, m| acc + back[(r, m)] * eig.eigenvectors[(m, col)])
    });
    Ok((values, vectors))
}

/// Quadratic form `x^T A y`.
pub fn bilinear<T: Scalar>(a: &DMatrix<T>, x: &DVector<T>, y: &DVector<T>) -> T {
    x.dot(&(a * y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_eigen_diagonal() {
        let a = DMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![6.0, 2.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let (values, vectors): (Vec<f64>, _) = generalized_symmetric_eigen(&a, &b).unwrap();
        assert!((values[0] - 2.0).abs() < 1e-14);
        assert!((values[1] - 3.0).abs() < 1e-14);
        let u = vectors.column(1).into_owned();
        assert!((bilinear(&b, &u, &u) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn asymmetry_measures() {
        let mut a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(relative_asymmetry(&a) > 0.0);
        mirror_upper(&mut a);
        assert_eq!(relative_asymmetry(&a), 0.0);
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        assert_eq!(relative_skew_defect(&s), 0.0);
    }
}
