//! Dense linear algebra kernels used by the oracle and the ROM.

pub mod dense;
pub mod eigen;

pub use dense::{axpy, dot, norm2, rel_l2, Matrix};
pub use eigen::{symmetric_eigen, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim("cholesky of a non-square matrix"));
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let lj = l.row(j)[..j].to_vec();
            let djj = a[(j, j)] - dot(&lj, &lj);
            if !(djj > T::zero()) || !djj.is_finite() {
                return Err(Error::numerical(format!("matrix not positive definite at pivot {j}")));
            }
            let ljj = djj.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &lj);
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        for i in 0..n {
            let s = b[i] - dot(&self.l.row(i)[..i], &b[..i]);
            b[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s = s - self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut bt = b.transpose();
        for i in 0..bt.rows() {
            self.solve_in_place(bt.row_mut(i));
        }
        bt.transpose()
    }
}

/// Symmetric positive definite square root `A^{1/2}` via eigendecomposition.
pub fn spd_sqrt<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = symmetric_eigen(a)?;
    let lmin = eig.values.first().copied().unwrap_or(T::one());
    let lmax = eig.values.last().copied().unwrap_or(T::one());
    let floor = lmax.abs() * T::epsilon() * T::from_usize_lossy(a.rows().max(1));
    if !(lmin > floor) {
        return Err(Error::numerical(format!(
            "block not positive definite (eigenvalues in [{:e}, {:e}])",
            lmin.f64(),
            lmax.f64()
        )));
    }
    let mut s = eig.reconstruct(|x| x.sqrt());
    s.symmetrize();
    Ok(s)
}
