//! Orthonormal reference snapshots and the internal waves estimated from the
//! Cholesky factor of the data-driven mass matrix.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::ImagingGrid;
use crate::linalg::{dot, Matrix};
use crate::medium::{ArrayGeometry, Medium};
use crate::pulse::Pulse;
use crate::rom::{row_times_upper, BlockMatrix, Rom, TriangularFactor};
use crate::scalar::Real;
use crate::solver::{simulate_data, simulate_snapshots, SnapshotFields};

/// `V_o(x) = U_o(x) R_o^{-1}` on an imaging grid.
#[derive(Clone, Debug)]
pub struct SnapshotBasis<T> {
    pub grid: ImagingGrid<T>,
    pub n: usize,
    pub m: usize,
    /// Row `p` holds the `n·m` values `v_{o,j}^{(s)}` at column `j·m + s`.
    pub values: Vec<T>,
    pub r_o: BlockMatrix<T>,
}

impl<T: Real> SnapshotBasis<T> {
    /// Orthogonalizes raw snapshots with the factor of their mass matrix.
    pub fn from_snapshots(grid: ImagingGrid<T>, snaps: &SnapshotFields<T>, factor: &TriangularFactor<T>) -> Result<Self> {
        if snaps.npts != grid.len() {
            return Err(Error::dim("snapshots do not match the imaging grid"));
        }
        if snaps.n * snaps.m != factor.size() {
            return Err(Error::dim("snapshots do not match the factor"));
        }
        let mut values = snaps.values.clone();
        factor.solve_rows(&mut values);
        Ok(Self { grid, n: snaps.n, m: snaps.m, values, r_o: factor.r.clone() })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.n * self.m
    }

    pub fn row(&self, p: usize) -> &[T] {
        let w = self.width();
        &self.values[p * w..(p + 1) * w]
    }

    /// `V_o(y)`, bilinearly interpolated between grid nodes.
    pub fn at(&self, x: T, z: T) -> Result<Vec<T>> {
        let stencil = self.grid.locate(x, z)?;
        let mut out = vec![T::zero(); self.width()];
        for (p, w) in stencil {
            if w != T::zero() {
                for (o, &v) in out.iter_mut().zip(self.row(p)) {
                    *o = *o + w * v;
                }
            }
        }
        Ok(out)
    }

    /// Snapshots `U_o = V_o R_o` reconstructed at every grid point.
    pub fn reconstruct(&self) -> Vec<T> {
        let w = self.width();
        let mut out = vec![T::zero(); self.values.len()];
        out.par_chunks_mut(w)
            .zip(self.values.par_chunks(w))
            .for_each(|(o, v)| o.copy_from_slice(&row_times_upper(&self.r_o, v)));
        out
    }

    /// `h² V_oᵀ V_o` over the grid points (a quadrature when the grid is the solver lattice).
    pub fn gram(&self) -> Matrix<T> {
        let v = Matrix::from_vec(self.grid.len(), self.width(), self.values.clone()).expect("sizes");
        v.tmatmul(&v).scale(self.grid.spacing() * self.grid.spacing())
    }
}

/// Reference snapshots, the reference ROM, and the basis built from them.
pub fn build_reference_basis<T: Real>(
    medium_ref: &Medium<T>,
    array: &ArrayGeometry<T>,
    pulse: &Pulse<T>,
    tau: T,
    n: usize,
    grid: ImagingGrid<T>,
    lambda_min: Option<T>,
) -> Result<(SnapshotBasis<T>, Rom<T>)> {
    if !medium_ref.is_reference() {
        return Err(Error::config("reference basis needs a medium with c = c_ref"));
    }
    if grid.solver != medium_ref.grid {
        return Err(Error::config("imaging grid is not a sub-lattice of the solver grid"));
    }
    let data = simulate_data(medium_ref, array, pulse, tau, n)?;
    let rom = Rom::build(&data, n, lambda_min, false)?;
    let snaps = simulate_snapshots(medium_ref, array, pulse, tau, n, &grid.solver_indices())?;
    let basis = SnapshotBasis::from_snapshots(grid, &snaps, &rom.factor)?;
    Ok((basis, rom))
}

/// `g(jτ, x_r; y)` for `j = 0..n−1`, `r = 1..m`.
#[derive(Clone, Debug, PartialEq)]
pub struct InternalWave<T> {
    pub y: (T, T),
    pub values: Matrix<T>,
}

impl<T: Real> InternalWave<T> {
    pub fn energy(&self) -> T {
        self.values.as_slice().iter().map(|&v| v * v).sum()
    }
}

/// `(g(t_j, x_1; y), …, g(t_j, x_m; y)) = V_o(y) R e_j`.
pub fn internal_wave<T: Real>(r: &BlockMatrix<T>, basis: &SnapshotBasis<T>, y: (T, T)) -> Result<InternalWave<T>> {
    if r.n != basis.n || r.m != basis.m {
        return Err(Error::dim("factor and basis sizes differ"));
    }
    let vo = basis.at(y.0, y.1)?;
    let g = row_times_upper(r, &vo);
    Ok(InternalWave { y, values: Matrix::from_vec(r.n, r.m, g)? })
}

/// `δ_y^{ROM}(x) = V(x) V_o(y)ᵀ` over the grid of `basis_true`.
pub fn rom_psf<T: Real>(basis_true: &SnapshotBasis<T>, basis_ref: &SnapshotBasis<T>, y: (T, T)) -> Result<Vec<T>> {
    if !basis_true.grid.same_lattice(&basis_ref.grid) || basis_true.width() != basis_ref.width() {
        return Err(Error::dim("bases live on different grids"));
    }
    let vo = basis_ref.at(y.0, y.1)?;
    Ok((0..basis_true.grid.len()).map(|p| dot(basis_true.row(p), &vo)).collect())
}

/// Same field from raw true snapshots: `U(x) (R^{-1} V_o(y)ᵀ)`, one backward
/// substitution instead of orthogonalizing every true snapshot.
pub fn rom_psf_from_snapshots<T: Real>(
    snaps_true: &SnapshotFields<T>,
    factor_true: &TriangularFactor<T>,
    basis_ref: &SnapshotBasis<T>,
    y: (T, T),
) -> Result<Vec<T>> {
    if snaps_true.npts != basis_ref.grid.len() || snaps_true.n * snaps_true.m != basis_ref.width() {
        return Err(Error::dim("snapshots and basis differ in shape"));
    }
    let mut z = basis_ref.at(y.0, y.1)?;
    factor_true.solve_in_place(&mut z);
    Ok((0..snaps_true.npts).map(|p| dot(snaps_true.row(p), &z)).collect())
}

/// `‖δ_y^{ROM}‖² = Σ_{j,s} (v_{o,j}^{(s)}(y))²`.
pub fn psf_norm<T: Real>(basis_ref: &SnapshotBasis<T>, y: (T, T)) -> Result<T> {
    let v = basis_ref.at(y.0, y.1)?;
    Ok(dot(&v, &v))
}
