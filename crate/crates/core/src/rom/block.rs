use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    General,
    Spd,
    BlockUpperTriangular,
}

/// `nm × nm` matrix viewed as `n × n` blocks of size `m × m`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix<T> {
    pub n: usize,
    pub m: usize,
    pub structure: Structure,
    pub mat: Matrix<T>,
}

impl<T: Real> BlockMatrix<T> {
    pub fn new(n: usize, m: usize, structure: Structure, mat: Matrix<T>) -> Result<Self> {
        if mat.rows() != n * m || mat.cols() != n * m {
            return Err(Error::dim(format!(
                "{}x{} matrix is not {n}x{n} blocks of size {m}",
                mat.rows(),
                mat.cols()
            )));
        }
        Ok(Self { n, m, structure, mat })
    }

    pub fn zeros(n: usize, m: usize, structure: Structure) -> Self {
        Self { n, m, structure, mat: Matrix::zeros(n * m, n * m) }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n * self.m
    }

    pub fn block(&self, j: usize, l: usize) -> Matrix<T> {
        self.mat.submatrix(j * self.m, l * self.m, self.m, self.m)
    }

    pub fn set_block(&mut self, j: usize, l: usize, b: &Matrix<T>) {
        self.mat.set_submatrix(j * self.m, l * self.m, b);
    }

    /// True when every block below the block diagonal is exactly zero.
    pub fn is_block_upper(&self) -> bool {
        let m = self.m;
        (0..self.size()).all(|r| self.mat.row(r)[..(r / m) * m].iter().all(|&v| v == T::zero()))
    }

    /// Leading `n' × n'` blocks.
    pub fn leading(&self, n: usize) -> Self {
        let k = n.min(self.n) * self.m;
        Self { n: n.min(self.n), m: self.m, structure: self.structure, mat: self.mat.submatrix(0, 0, k, k) }
    }

    /// Relative norm of the block row `j`, column block `l` against the whole column block.
    pub fn block_norm(&self, j: usize, l: usize) -> T {
        self.block(j, l).frobenius()
    }
}

/// Block upper triangular factor with symmetric positive definite diagonal
/// blocks, prepared for forward and backward substitution.
#[derive(Clone, Debug)]
pub struct TriangularFactor<T> {
    pub r: BlockMatrix<T>,
    diag: Vec<Cholesky<T>>,
}

impl<T: Real> TriangularFactor<T> {
    pub fn new(r: BlockMatrix<T>) -> Result<Self> {
        if !r.is_block_upper() {
            return Err(Error::dim("factor is not block upper triangular"));
        }
        let diag = (0..r.n)
            .map(|j| {
                let mut b = r.block(j, j);
                b.symmetrize();
                Cholesky::new(&b).map_err(|_| Error::numerical(format!("diagonal block {j} is singular")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { r, diag })
    }

    pub fn size(&self) -> usize {
        self.r.size()
    }

    /// `x ← x R^{-1}` for a row vector (equivalently `Rᵀ x = b`).
    pub fn solve_row_in_place(&self, x: &mut [T]) {
        let (n, m) = (self.r.n, self.r.m);
        let nm = n * m;
        assert_eq!(x.len(), nm);
        for j in 0..n {
            let (head, tail) = x.split_at_mut((j + 1) * m);
            let xj = &mut head[j * m..];
            self.diag[j].solve_in_place(xj);
            for t in 0..m {
                let a = xj[t];
                if a != T::zero() {
                    let row = &self.r.mat.row(j * m + t)[(j + 1) * m..];
                    for (b, &rv) in tail.iter_mut().zip(row) {
                        *b = *b - a * rv;
                    }
                }
            }
        }
    }

    /// `R x = b`, solved in place by backward substitution.
    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, m) = (self.r.n, self.r.m);
        let nm = n * m;
        assert_eq!(x.len(), nm);
        for j in (0..n).rev() {
            let (head, tail) = x.split_at_mut((j + 1) * m);
            let xj = &mut head[j * m..];
            for t in 0..m {
                let row = &self.r.mat.row(j * m + t)[(j + 1) * m..];
                xj[t] = xj[t] - dot(row, tail);
            }
            self.diag[j].solve_in_place(xj);
        }
    }

    /// `X ← X R^{-1}` for every row of a row-major `rows × nm` buffer.
    pub fn solve_rows(&self, data: &mut [T]) {
        let nm = self.size();
        data.par_chunks_mut(nm).for_each(|row| self.solve_row_in_place(row));
    }

    /// `x R` for a row vector, exploiting the zero pattern.
    pub fn row_times(&self, x: &[T]) -> Vec<T> {
        row_times_upper(&self.r, x)
    }
}

/// `x R` for a block upper triangular `R`.
pub fn row_times_upper<T: Real>(r: &BlockMatrix<T>, x: &[T]) -> Vec<T> {
    let (n, m) = (r.n, r.m);
    let nm = n * m;
    assert_eq!(x.len(), nm);
    let mut out = vec![T::zero(); nm];
    for i in 0..nm {
        let a = x[i];
        if a == T::zero() {
            continue;
        }
        let start = (i / m) * m;
        let row = &r.mat.row(i)[start..];
        for (o, &rv) in out[start..].iter_mut().zip(row) {
            *o = *o + a * rv;
        }
    }
    out
}
