//! Data-driven reduced order model: mass and stiffness assembly, eigenvalue
//! clamping, block Cholesky factorization and the projected propagator.

mod block;
mod noise;

pub use block::{row_times_upper, BlockMatrix, Structure, TriangularFactor};
pub use noise::add_noise;

use crate::error::{Error, Result};
use crate::linalg::{dot, spd_sqrt, symmetric_eigen, Cholesky, Matrix};
use crate::scalar::Real;
use crate::solver::DataTensor;

/// Default clamp level relative to the largest mass eigenvalue, noiseless data.
pub const LAMBDA_MIN_NOISELESS: f64 = 1e-8;
/// Default clamp level relative to the largest mass eigenvalue, noisy data.
pub const LAMBDA_MIN_NOISY: f64 = 1e-3;

fn check_len<T: Real>(d: &DataTensor<T>, n: usize, needed: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::config("n must be positive"));
    }
    if d.len() < needed {
        return Err(Error::config(format!(
            "{} data matrices given, {needed} needed for n = {n}",
            d.len()
        )));
    }
    Ok(())
}

fn sym_data<T: Real>(d: &DataTensor<T>) -> Vec<Matrix<T>> {
    d.symmetrized().mats
}

/// `M_{jl} = ½ (D_{j+l} + D_{|j−l|})`.
pub fn assemble_mass<T: Real>(d: &DataTensor<T>, n: usize) -> Result<BlockMatrix<T>> {
    check_len(d, n, 2 * n - 1)?;
    let ds = sym_data(d);
    let m = d.m;
    let half = T::lit(0.5);
    let mut out = BlockMatrix::zeros(n, m, Structure::General);
    for j in 0..n {
        for l in j..n {
            let b = ds[j + l].add(&ds[j.abs_diff(l)]).scale(half);
            out.set_block(j, l, &b);
            if l != j {
                out.set_block(l, j, &b.transpose());
            }
        }
    }
    Ok(out)
}

/// `S_{jl} = ¼ (D_{j+l+1} + D_{|j−l−1|} + D_{|j+l−1|} + D_{|j−l+1|})`.
pub fn assemble_stiffness<T: Real>(d: &DataTensor<T>, n: usize) -> Result<BlockMatrix<T>> {
    check_len(d, n, 2 * n)?;
    let ds = sym_data(d);
    let m = d.m;
    let quarter = T::lit(0.25);
    let idx = |a: i64| a.unsigned_abs() as usize;
    let mut out = BlockMatrix::zeros(n, m, Structure::General);
    for j in 0..n {
        for l in j..n {
            let (ji, li) = (j as i64, l as i64);
            let b = ds[idx(ji + li + 1)]
                .add(&ds[idx(ji - li - 1)])
                .add(&ds[idx(ji + li - 1)])
                .add(&ds[idx(ji - li + 1)])
                .scale(quarter);
            out.set_block(j, l, &b);
            if l != j {
                out.set_block(l, j, &b.transpose());
            }
        }
    }
    Ok(out)
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
pub fn largest_eigenvalue<T: Real>(a: &Matrix<T>) -> T {
    let n = a.rows();
    if n == 0 {
        return T::zero();
    }
    // irregular start so symmetric problems cannot hide the top eigenvector
    let mut v: Vec<T> = (0..n).map(|i| T::lit(1.0 + (0.618_033_988_75 * i as f64).fract())).collect();
    let mut lam = T::zero();
    for _ in 0..500 {
        let w = a.matvec(&v);
        let next = dot(&w, &v);
        let nw = crate::linalg::norm2(&w);
        if nw == T::zero() {
            return T::zero();
        }
        v = w.iter().map(|&x| x / nw).collect();
        if (next - lam).abs() <= T::lit(1e-12) * next.abs() {
            return next;
        }
        lam = next;
    }
    lam
}

/// Default clamp level for a mass matrix.
pub fn default_lambda_min<T: Real>(m: &BlockMatrix<T>, noisy: bool) -> T {
    let rel = if noisy { LAMBDA_MIN_NOISY } else { LAMBDA_MIN_NOISELESS };
    T::lit(rel) * largest_eigenvalue(&m.mat)
}

/// Replaces eigenvalues of `M̃` below `λ_min` by `λ_min`.
pub fn regularize_mass<T: Real>(m_tilde: &BlockMatrix<T>, lambda_min: T) -> Result<BlockMatrix<T>> {
    if !(lambda_min > T::zero()) {
        return Err(Error::config("lambda_min must be positive"));
    }
    let mut sym = m_tilde.mat.clone();
    sym.symmetrize();
    // M̃ − λ_min I positive definite means every eigenvalue already exceeds
    // λ_min and the clamp is the identity map.
    let mut shifted = sym.clone();
    for i in 0..shifted.rows() {
        shifted[(i, i)] = shifted[(i, i)] - lambda_min;
    }
    let out = if Cholesky::new(&shifted).is_ok() {
        sym
    } else {
        let eig = symmetric_eigen(&sym)?;
        let mut r = eig.reconstruct(|l| l.max(lambda_min));
        r.symmetrize();
        r
    };
    BlockMatrix::new(m_tilde.n, m_tilde.m, Structure::Spd, out)
}

/// `M = Rᵀ R` with `R` block upper triangular and SPD diagonal blocks
/// (the symmetric square roots of the successive Schur complements).
pub fn block_cholesky<T: Real>(mass: &BlockMatrix<T>) -> Result<BlockMatrix<T>> {
    if mass.structure != Structure::Spd {
        return Err(Error::config("block Cholesky needs a matrix tagged SPD"));
    }
    let (n, m) = (mass.n, mass.m);
    let nm = n * m;
    // Upper triangle of the running Schur complement.
    let mut work = mass.mat.clone();
    let mut r = Matrix::zeros(nm, nm);
    let mut col = vec![T::zero(); m];
    for j in 0..n {
        let o = j * m;
        let schur = Matrix::from_fn(m, m, |a, b| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            work[(o + lo, o + hi)]
        });
        let rjj = spd_sqrt(&schur)
            .map_err(|e| Error::numerical(format!("pivot block {j} not positive definite, increase lambda_min ({e})")))?;
        let chol = Cholesky::new(&rjj).map_err(|_| Error::numerical(format!("pivot block {j} is singular")))?;
        r.set_submatrix(o, o, &rjj);
        // Row block j: R_jl = R_jj^{-1} W_jl.
        for c in o + m..nm {
            for t in 0..m {
                col[t] = work[(o + t, c)];
            }
            chol.solve_in_place(&mut col);
            for t in 0..m {
                r[(o + t, c)] = col[t];
            }
        }
        // Trailing update W_pq −= Σ_t R_{t p} R_{t q}, upper triangle only.
        for t in 0..m {
            let rrow = r.row(o + t)[o + m..].to_vec();
            for (pp, &rp) in rrow.iter().enumerate() {
                if rp == T::zero() {
                    continue;
                }
                let p = o + m + pp;
                let wrow = &mut work.row_mut(p)[p..];
                for (w, &rq) in wrow.iter_mut().zip(&rrow[pp..]) {
                    *w = *w - rp * rq;
                }
            }
        }
    }
    BlockMatrix::new(n, m, Structure::BlockUpperTriangular, r)
}

/// `P^{ROM} = R^{-T} S R^{-1}` by two triangular solves.
pub fn rom_propagator<T: Real>(factor: &TriangularFactor<T>, s: &BlockMatrix<T>) -> Result<BlockMatrix<T>> {
    let nm = factor.size();
    if s.size() != nm {
        return Err(Error::dim("stiffness and factor sizes differ"));
    }
    // X = S R^{-1}; since S is symmetric, Pᵀ = Xᵀ R^{-1}.
    let mut x = s.mat.clone();
    factor.solve_rows(x.as_mut_slice());
    let mut pt = x.transpose();
    factor.solve_rows(pt.as_mut_slice());
    pt.symmetrize();
    BlockMatrix::new(factor.r.n, factor.r.m, Structure::General, pt)
}

/// Everything derived from one data tensor.
#[derive(Clone, Debug)]
pub struct Rom<T> {
    pub mass: BlockMatrix<T>,
    pub stiffness: BlockMatrix<T>,
    pub lambda_min: T,
    pub factor: TriangularFactor<T>,
    pub propagator: BlockMatrix<T>,
}

impl<T: Real> Rom<T> {
    /// Assembles, clamps at `lambda_min` (or the default level), factors and projects.
    pub fn build(d: &DataTensor<T>, n: usize, lambda_min: Option<T>, noisy: bool) -> Result<Self> {
        let raw = assemble_mass(d, n)?;
        let stiffness = assemble_stiffness(d, n)?;
        let lambda_min = lambda_min.unwrap_or_else(|| default_lambda_min(&raw, noisy));
        let mass = regularize_mass(&raw, lambda_min)?;
        let r = block_cholesky(&mass)?;
        let factor = TriangularFactor::new(r)?;
        let propagator = rom_propagator(&factor, &stiffness)?;
        Ok(Self { mass, stiffness, lambda_min, factor, propagator })
    }

    /// As [`Rom::build`] with the clamp given relative to the largest eigenvalue of `M̃`.
    pub fn build_relative(d: &DataTensor<T>, n: usize, relative: Option<T>, noisy: bool) -> Result<Self> {
        let lambda_min = match relative {
            Some(rel) => {
                if !(rel > T::zero()) {
                    return Err(Error::config("relative lambda_min must be positive"));
                }
                Some(rel * largest_eigenvalue(&assemble_mass(d, n)?.mat))
            }
            None => None,
        };
        Self::build(d, n, lambda_min, noisy)
    }

    pub fn r(&self) -> &BlockMatrix<T> {
        &self.factor.r
    }
}
