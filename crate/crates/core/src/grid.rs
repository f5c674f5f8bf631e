//! Solver and imaging grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform node lattice; node `(i, k)` sits at `(x0 + i h, z0 + k h)`.
/// `x` is cross-range, `z` is range (depth below the array).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub nx: usize,
    pub nz: usize,
    pub h: T,
    pub x0: T,
    pub z0: T,
}

impl<T: Real> Grid<T> {
    pub fn new(nx: usize, nz: usize, h: T, x0: T, z0: T) -> Result<Self> {
        if nx < 2 || nz < 2 {
            return Err(Error::config(format!("grid {nx}x{nz} is too small")));
        }
        if !(h > T::zero()) {
            return Err(Error::config("grid spacing must be positive"));
        }
        Ok(Self { nx, nz, h, x0, z0 })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, k: usize) -> usize {
        k * self.nx + i
    }

    #[inline]
    pub fn node(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x0 + T::from_usize_lossy(i) * self.h
    }

    #[inline]
    pub fn z(&self, k: usize) -> T {
        self.z0 + T::from_usize_lossy(k) * self.h
    }

    pub fn coords(&self, idx: usize) -> (T, T) {
        let (i, k) = self.node(idx);
        (self.x(i), self.z(k))
    }

    /// Nearest node to a point, or `None` when the point lies outside the
    /// lattice by more than half a cell.
    pub fn nearest(&self, x: T, z: T) -> Option<(usize, usize)> {
        let fi = ((x - self.x0) / self.h).round();
        let fk = ((z - self.z0) / self.h).round();
        if fi < T::zero() || fk < T::zero() {
            return None;
        }
        let (i, k) = (fi.to_usize()?, fk.to_usize()?);
        (i < self.nx && k < self.nz).then_some((i, k))
    }

    /// Cell-area weight of the discrete inner product.
    pub fn cell_area(&self) -> T {
        self.h * self.h
    }
}

/// Regular sub-lattice of solver nodes on which images and bases live.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImagingGrid<T> {
    pub solver: Grid<T>,
    pub i0: usize,
    pub k0: usize,
    pub stride: usize,
    pub ni: usize,
    pub nk: usize,
}

/// Bilinear stencil: up to four (point index, weight) pairs.
pub type Stencil<T> = [(usize, T); 4];

impl<T: Real> ImagingGrid<T> {
    pub fn new(solver: Grid<T>, i0: usize, k0: usize, stride: usize, ni: usize, nk: usize) -> Result<Self> {
        if stride == 0 || ni == 0 || nk == 0 {
            return Err(Error::config("empty imaging grid"));
        }
        if i0 + (ni - 1) * stride >= solver.nx || k0 + (nk - 1) * stride >= solver.nz {
            return Err(Error::config("imaging grid outside the computational domain"));
        }
        Ok(Self { solver, i0, k0, stride, ni, nk })
    }

    /// Sub-lattice covering `[x_lo, x_hi] × [z_lo, z_hi]` with the requested spacing
    /// rounded to a multiple of the solver spacing.
    pub fn covering(solver: Grid<T>, x: (T, T), z: (T, T), spacing: T) -> Result<Self> {
        let stride = (spacing / solver.h).round().to_usize().unwrap_or(1).max(1);
        let (i0, k0) = solver
            .nearest(x.0, z.0)
            .ok_or_else(|| Error::config("imaging window starts outside the domain"))?;
        let (i1, k1) = solver
            .nearest(x.1, z.1)
            .ok_or_else(|| Error::config("imaging window ends outside the domain"))?;
        if i1 < i0 || k1 < k0 {
            return Err(Error::config("imaging window is empty"));
        }
        Self::new(solver, i0, k0, stride, (i1 - i0) / stride + 1, (k1 - k0) / stride + 1)
    }

    /// The whole solver lattice.
    pub fn full(solver: Grid<T>) -> Self {
        Self { solver, i0: 0, k0: 0, stride: 1, ni: solver.nx, nk: solver.nz }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ni * self.nk
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> T {
        self.solver.h * T::from_usize_lossy(self.stride)
    }

    /// Point index `p = a + ni * b` for column `a` (cross-range) and row `b` (range).
    #[inline]
    pub fn point(&self, a: usize, b: usize) -> usize {
        b * self.ni + a
    }

    pub fn solver_index(&self, p: usize) -> usize {
        let (a, b) = (p % self.ni, p / self.ni);
        self.solver.index(self.i0 + a * self.stride, self.k0 + b * self.stride)
    }

    pub fn solver_indices(&self) -> Vec<usize> {
        (0..self.len()).map(|p| self.solver_index(p)).collect()
    }

    pub fn coords(&self, p: usize) -> (T, T) {
        self.solver.coords(self.solver_index(p))
    }

    pub fn xs(&self) -> Vec<T> {
        (0..self.ni).map(|a| self.solver.x(self.i0 + a * self.stride)).collect()
    }

    pub fn zs(&self) -> Vec<T> {
        (0..self.nk).map(|b| self.solver.z(self.k0 + b * self.stride)).collect()
    }

    /// Bilinear interpolation stencil at `(x, z)`. Grid nodes get a single unit weight.
    pub fn locate(&self, x: T, z: T) -> Result<Stencil<T>> {
        let sp = self.spacing();
        let fa = (x - self.solver.x(self.i0)) / sp;
        let fb = (z - self.solver.z(self.k0)) / sp;
        let tol = T::lit(1e-9);
        let max_a = T::from_usize_lossy(self.ni - 1);
        let max_b = T::from_usize_lossy(self.nk - 1);
        if !(fa >= -tol && fb >= -tol && fa <= max_a + tol && fb <= max_b + tol) {
            return Err(Error::config(format!(
                "point ({}, {}) outside the imaging grid",
                x.f64(),
                z.f64()
            )));
        }
        let fa = fa.max(T::zero()).min(max_a);
        let fb = fb.max(T::zero()).min(max_b);
        let a0 = fa.floor().to_usize().unwrap_or(0).min(self.ni.saturating_sub(2));
        let b0 = fb.floor().to_usize().unwrap_or(0).min(self.nk.saturating_sub(2));
        let ta = fa - T::from_usize_lossy(a0);
        let tb = fb - T::from_usize_lossy(b0);
        let a1 = (a0 + 1).min(self.ni - 1);
        let b1 = (b0 + 1).min(self.nk - 1);
        let one = T::one();
        Ok([
            (self.point(a0, b0), (one - ta) * (one - tb)),
            (self.point(a1, b0), ta * (one - tb)),
            (self.point(a0, b1), (one - ta) * tb),
            (self.point(a1, b1), ta * tb),
        ])
    }

    pub fn same_lattice(&self, other: &Self) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_and_coords_roundtrip() {
        let g = Grid::new(10, 8, 0.5, 1.0, 0.0).unwrap();
        let idx = g.index(3, 4);
        assert_eq!(g.coords(idx), (2.5, 2.0));
        assert_eq!(g.nearest(2.6, 1.9), Some((3, 4)));
        assert_eq!(g.nearest(-1.0, 0.0), None);
    }

    #[test]
    fn bilinear_reproduces_linear_functions() {
        let g = Grid::new(20, 20, 0.25, 0.0, 0.0).unwrap();
        let ig = ImagingGrid::new(g, 2, 2, 2, 6, 5).unwrap();
        let f = |p: usize| {
            let (x, z) = ig.coords(p);
            3.0 * x - 2.0 * z + 1.0
        };
        let st = ig.locate(1.3, 1.1).unwrap();
        let v: f64 = st.iter().map(|&(p, w)| w * f(p)).sum();
        assert!((v - (3.0 * 1.3 - 2.0 * 1.1 + 1.0)).abs() < 1e-12);
        let (x, z) = ig.coords(ig.point(2, 3));
        let st = ig.locate(x, z).unwrap();
        assert_eq!(st[0], (ig.point(2, 3), 1.0));
        assert!(st[1..].iter().all(|&(_, w)| w == 0.0));
        assert!(ig.locate(10.0, 1.0).is_err());
    }
}
