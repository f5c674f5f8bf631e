//! Small-grid spectral reference built from a dense eigendecomposition of `A_h`.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{axpy, dot, symmetric_eigen, Matrix};
use crate::medium::{EdgeCondition, Medium};
use crate::pulse::{DiscretePulse, Pulse, Waveform};
use crate::scalar::Real;
use crate::solver::{DataTensor, SnapshotFields};

/// Largest oracle lattice accepted (nodes).
pub const MAX_NODES: usize = 64 * 64;

/// Time-domain model evaluated spectrally.
#[derive(Clone, Debug)]
pub enum SpectralModel<T> {
    /// `f̂^{1/2}(ω)`, `f̂(ω)` and `cos(jτω)` with `ω = √θ`.
    Continuous { pulse: Pulse<T>, tau: T },
    /// The exact transfer functions of the leapfrog solver.
    Discrete { pulse: DiscretePulse<T>, steps_per_sample: usize },
}

impl<T: Real> SpectralModel<T> {
    pub fn half(&self, lambda: T) -> T {
        match self {
            SpectralModel::Continuous { pulse, .. } => pulse.half_spectrum(lambda.sqrt()),
            SpectralModel::Discrete { pulse, .. } => pulse.transfer(Waveform::Half, lambda),
        }
    }

    pub fn full(&self, lambda: T) -> T {
        match self {
            SpectralModel::Continuous { pulse, .. } => pulse.spectrum(lambda.sqrt()),
            SpectralModel::Discrete { pulse, .. } => pulse.transfer(Waveform::Full, lambda),
        }
    }

    /// Propagator over `j` sampling intervals.
    pub fn prop(&self, lambda: T, j: usize) -> T {
        match self {
            SpectralModel::Continuous { tau, .. } => (T::from_usize_lossy(j) * *tau * lambda.sqrt()).cos(),
            SpectralModel::Discrete { pulse, steps_per_sample } => pulse.propagator(lambda, j * steps_per_sample),
        }
    }
}

/// Dense `A_h = C L C` with its clamped spectral decomposition.
#[derive(Clone, Debug)]
pub struct DiscretizedOperator<T> {
    pub grid: Grid<T>,
    pub matrix: Matrix<T>,
    /// Ascending eigenvalues, negatives clamped to zero.
    pub values: Vec<T>,
    /// Row `l` is the eigenvector of `values[l]`.
    pub vectors: Matrix<T>,
}

/// Dense matrix of `−c Δ_h (c ·)` with the medium's edge conditions.
pub fn assemble_operator<T: Real>(medium: &Medium<T>) -> Matrix<T> {
    let g = &medium.grid;
    let n = g.len();
    let inv_h2 = T::one() / (g.h * g.h);
    let c = &medium.c;
    let b = medium.boundary;
    let mut a = Matrix::zeros(n, n);
    for idx in 0..n {
        let (i, k) = g.node(idx);
        let nbrs = [
            (i.checked_sub(1).map(|ii| g.index(ii, k)), b.left),
            ((i + 1 < g.nx).then(|| g.index(i + 1, k)), b.right),
            (k.checked_sub(1).map(|kk| g.index(i, kk)), b.top),
            ((k + 1 < g.nz).then(|| g.index(i, k + 1)), b.bottom),
        ];
        let mut diag = T::zero();
        for (nb, cond) in nbrs {
            match nb {
                Some(j) => {
                    diag = diag + T::one();
                    a[(idx, j)] = -c[idx] * c[j] * inv_h2;
                }
                None if cond == EdgeCondition::SoundSoft => diag = diag + T::one(),
                None => {}
            }
        }
        a[(idx, idx)] = diag * c[idx] * c[idx] * inv_h2;
    }
    a
}

impl<T: Real> DiscretizedOperator<T> {
    pub fn new(medium: &Medium<T>) -> Result<Self> {
        if medium.grid.len() > MAX_NODES {
            return Err(Error::config(format!(
                "oracle grid has {} nodes, limit is {MAX_NODES}",
                medium.grid.len()
            )));
        }
        let matrix = assemble_operator(medium);
        let eig = symmetric_eigen(&matrix)?;
        let scale = eig.values.last().copied().unwrap_or(T::one()).abs().max(T::one());
        if let Some(&low) = eig.values.first() {
            if low < -T::lit(1e-10) * scale {
                return Err(Error::numerical(format!("operator has eigenvalue {:e}", low.f64())));
            }
        }
        let values = eig.values.iter().map(|&v| v.max(T::zero())).collect();
        Ok(Self { grid: medium.grid, matrix, values, vectors: eig.vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `‖Σ_l y_l y_lᵀ − I‖_max`.
    pub fn completeness_error(&self) -> T {
        let g = self.vectors.tmatmul(&self.vectors);
        g.sub(&Matrix::identity(self.dim())).max_abs()
    }

    /// `Σ_l φ(λ_l) y_l (y_lᵀ v)` for a function of the eigenvalue itself.
    pub fn apply_spectral(&self, phi: impl Fn(T) -> T, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim() {
            return Err(Error::dim(format!("vector of length {} for operator of size {}", v.len(), self.dim())));
        }
        let mut out = vec![T::zero(); v.len()];
        for (l, &lam) in self.values.iter().enumerate() {
            let y = self.vectors.row(l);
            let c = phi(lam) * dot(y, v);
            if c != T::zero() {
                axpy(c, y, &mut out);
            }
        }
        Ok(out)
    }

    /// `Σ_l φ(√θ_l) y_l (y_lᵀ v)`.
    pub fn apply_function(&self, phi: impl Fn(T) -> T, v: &[T]) -> Result<Vec<T>> {
        self.apply_spectral(|lam| phi(lam.sqrt()), v)
    }

    /// Grid representation of the point source at `node`: `e_node / h²`.
    pub fn dirac(&self, node: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim()];
        v[node] = T::one() / self.grid.cell_area();
        v
    }

    /// `D_j^{(r,s)} = ⟨δ^f_r, cos(jτ√A) δ^f_s⟩` for `j = 0..2n−1`.
    pub fn data_tensor(&self, sensors: &[usize], model: &SpectralModel<T>, n: usize, tau: T) -> DataTensor<T> {
        let m = sensors.len();
        let inv_area = T::one() / self.grid.cell_area();
        let full: Vec<T> = self.values.iter().map(|&l| model.full(l)).collect();
        let mats = (0..2 * n)
            .map(|j| {
                let w: Vec<T> = self.values.iter().zip(&full).map(|(&l, &f)| f * model.prop(l, j)).collect();
                Matrix::from_fn(m, m, |r, s| {
                    let mut acc = T::zero();
                    for (l, &wl) in w.iter().enumerate() {
                        let y = self.vectors.row(l);
                        acc = acc + wl * y[sensors[r]] * y[sensors[s]];
                    }
                    acc * inv_area
                })
            })
            .collect();
        DataTensor { m, tau, mats }
    }

    /// `u_j^{(s)} = cos(jτ√A) f̂^{1/2}(√A) δ_s` on every node.
    pub fn snapshots(&self, sensors: &[usize], model: &SpectralModel<T>, n: usize) -> SnapshotFields<T> {
        let m = sensors.len();
        let nm = n * m;
        let npts = self.dim();
        let inv_area = T::one() / self.grid.cell_area();
        let mut values = vec![T::zero(); npts * nm];
        let mut coeff = vec![T::zero(); nm];
        for (l, &lam) in self.values.iter().enumerate() {
            let y = self.vectors.row(l);
            let half = model.half(lam) * inv_area;
            for j in 0..n {
                let pj = half * model.prop(lam, j);
                for (s, &node) in sensors.iter().enumerate() {
                    coeff[j * m + s] = pj * y[node];
                }
            }
            for (p, &yp) in y.iter().enumerate() {
                if yp != T::zero() {
                    axpy(yp, &coeff, &mut values[p * nm..(p + 1) * nm]);
                }
            }
        }
        SnapshotFields { n, m, npts, values }
    }

    /// Applies `φ(A)` to every column of a field set.
    pub fn apply_to_fields(&self, phi: impl Fn(T) -> T, fields: &SnapshotFields<T>) -> SnapshotFields<T> {
        let nm = fields.n * fields.m;
        let npts = fields.npts;
        assert_eq!(npts, self.dim());
        let mut out = vec![T::zero(); npts * nm];
        let mut coeff = vec![T::zero(); nm];
        for (l, &lam) in self.values.iter().enumerate() {
            let y = self.vectors.row(l);
            coeff.iter_mut().for_each(|c| *c = T::zero());
            for (p, &yp) in y.iter().enumerate() {
                if yp != T::zero() {
                    axpy(yp, fields.row(p), &mut coeff);
                }
            }
            let w = phi(lam);
            coeff.iter_mut().for_each(|c| *c = *c * w);
            for (p, &yp) in y.iter().enumerate() {
                if yp != T::zero() {
                    axpy(yp, &coeff, &mut out[p * nm..(p + 1) * nm]);
                }
            }
        }
        SnapshotFields { n: fields.n, m: fields.m, npts, values: out }
    }

    /// `h² Aᵀ B` for two field sets on the full grid.
    pub fn gram(&self, a: &SnapshotFields<T>, b: &SnapshotFields<T>) -> Matrix<T> {
        let ma = a.as_matrix();
        let mb = b.as_matrix();
        ma.tmatmul(&mb).scale(self.grid.cell_area())
    }

    /// `g(t_j, x_r; y) = [f̂^{1/2}(√A) cos(t_j √A) δ_y^{ROM}](x_r)` with
    /// `δ_y^{ROM}(x) = V(x) V_o(y)ᵀ`; returns an `n × m` matrix.
    pub fn internal_wave(
        &self,
        sensors: &[usize],
        model: &SpectralModel<T>,
        n: usize,
        v_true: &SnapshotFields<T>,
        vo_at_y: &[T],
    ) -> Result<Matrix<T>> {
        let nm = v_true.n * v_true.m;
        if vo_at_y.len() != nm || v_true.npts != self.dim() {
            return Err(Error::dim("basis does not match the oracle grid"));
        }
        let delta: Vec<T> = (0..v_true.npts).map(|p| dot(v_true.row(p), vo_at_y)).collect();
        let mut g = Matrix::zeros(n, sensors.len());
        for (l, &lam) in self.values.iter().enumerate() {
            let y = self.vectors.row(l);
            let z = dot(y, &delta) * model.half(lam);
            for j in 0..n {
                let zj = z * model.prop(lam, j);
                for (r, &node) in sensors.iter().enumerate() {
                    g[(j, r)] = g[(j, r)] + zj * y[node];
                }
            }
        }
        Ok(g)
    }
}
