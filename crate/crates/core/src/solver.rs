//! Leapfrog finite-difference solver for `w_tt + A(c) w = s(t) δ`, with
//! `A(c) = −c Δ (c ·)` discretized as `C L C` on the node lattice.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::medium::{ArrayGeometry, EdgeCondition, Medium};
use crate::pulse::{DiscretePulse, Pulse, Waveform};
use crate::scalar::Real;

/// Default Courant number `c_max dt / h`.
pub const DEFAULT_COURANT: f64 = 0.5;

/// Stability limit of the 2D five-point leapfrog scheme.
pub const MAX_COURANT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Time-stepping engine bound to one medium and one sampling interval.
#[derive(Clone, Debug)]
pub struct Simulator<'a, T> {
    pub medium: &'a Medium<T>,
    pub dt: T,
    pub tau: T,
    /// Solver steps per data sample.
    pub steps_per_sample: usize,
    pub pulse: DiscretePulse<T>,
    /// `dt² c / h²` per node.
    coef: Vec<T>,
}

impl<'a, T: Real> Simulator<'a, T> {
    pub fn new(medium: &'a Medium<T>, pulse: &Pulse<T>, tau: T) -> Result<Self> {
        Self::with_courant(medium, pulse, tau, T::lit(DEFAULT_COURANT))
    }

    /// Picks the largest step `dt = τ / K` with `c_max dt / h ≤ courant`.
    pub fn with_courant(medium: &'a Medium<T>, pulse: &Pulse<T>, tau: T, courant: T) -> Result<Self> {
        if !(tau > T::zero()) {
            return Err(Error::config("sampling interval must be positive"));
        }
        if !(courant > T::zero()) || courant > T::lit(MAX_COURANT) {
            return Err(Error::config(format!(
                "Courant number {} violates the stability bound {MAX_COURANT:.4}",
                courant.f64()
            )));
        }
        let h = medium.grid.h;
        let k = (tau * medium.c_max() / (courant * h)).ceil().to_usize().unwrap_or(1).max(1);
        Self::with_steps(medium, pulse, tau, k)
    }

    /// Uses exactly `k` solver steps per sample.
    pub fn with_steps(medium: &'a Medium<T>, pulse: &Pulse<T>, tau: T, k: usize) -> Result<Self> {
        let h = medium.grid.h;
        let dt = tau / T::from_usize_lossy(k.max(1));
        if medium.c_max() * dt / h > T::lit(MAX_COURANT) {
            return Err(Error::config("time step violates the CFL condition"));
        }
        let r = dt * dt / (h * h);
        let coef = medium.c.iter().map(|&c| r * c).collect();
        Ok(Self {
            medium,
            dt,
            tau,
            steps_per_sample: k.max(1),
            pulse: DiscretePulse::new(pulse, dt)?,
            coef,
        })
    }

    pub fn courant(&self) -> T {
        self.medium.c_max() * self.dt / self.medium.grid.h
    }

    /// Number of samples before `t = 0` that can hold source activity.
    pub fn negative_samples(&self, w: Waveform) -> usize {
        self.pulse.support(w).div_ceil(self.steps_per_sample)
    }

    /// `out = A_h w`.
    pub fn apply_operator(&self, w: &[T], out: &mut [T]) {
        let g = &self.medium.grid;
        let mut pad = vec![T::zero(); (g.nx + 2) * (g.nz + 2)];
        self.load_padded(w, &mut pad);
        let inv_h2 = T::one() / (g.h * g.h);
        let nxp = g.nx + 2;
        for k in 0..g.nz {
            for i in 0..g.nx {
                let p = (k + 1) * nxp + i + 1;
                let lap = T::lit(4.0) * pad[p] - pad[p - 1] - pad[p + 1] - pad[p - nxp] - pad[p + nxp];
                let idx = g.index(i, k);
                out[idx] = self.medium.c[idx] * lap * inv_h2;
            }
        }
    }

    /// Writes `c w` into the padded buffer and fills the ghost layer.
    fn load_padded(&self, w: &[T], pad: &mut [T]) {
        let g = &self.medium.grid;
        let (nx, nz) = (g.nx, g.nz);
        let nxp = nx + 2;
        let c = &self.medium.c;
        for k in 0..nz {
            let src = &w[k * nx..(k + 1) * nx];
            let cs = &c[k * nx..(k + 1) * nx];
            let dst = &mut pad[(k + 1) * nxp + 1..(k + 1) * nxp + 1 + nx];
            for ((d, &a), &b) in dst.iter_mut().zip(src).zip(cs) {
                *d = a * b;
            }
        }
        let b = self.medium.boundary;
        if b.top == EdgeCondition::SoundHard {
            pad.copy_within(nxp + 1..nxp + 1 + nx, 1);
        }
        if b.bottom == EdgeCondition::SoundHard {
            pad.copy_within(nz * nxp + 1..nz * nxp + 1 + nx, (nz + 1) * nxp + 1);
        }
        if b.left == EdgeCondition::SoundHard {
            for k in 1..=nz {
                pad[k * nxp] = pad[k * nxp + 1];
            }
        }
        if b.right == EdgeCondition::SoundHard {
            for k in 1..=nz {
                pad[k * nxp + nx + 1] = pad[k * nxp + nx];
            }
        }
    }

    /// Advances from the quiescent state `w^{k0-1} = w^{k0} = 0` to step `k1`.
    ///
    /// `forcing(k, scale, next)` must add `scale · s^k` at the source nodes of
    /// `next`; `observe(k, w^k)` sees every state for `k0 ≤ k ≤ k1`.
    pub fn run(
        &self,
        k0: i64,
        k1: i64,
        mut forcing: impl FnMut(i64, T, &mut [T]),
        mut observe: impl FnMut(i64, &[T]),
    ) {
        let g = &self.medium.grid;
        let (nx, nz) = (g.nx, g.nz);
        let nxp = nx + 2;
        let mut prev = vec![T::zero(); g.len()];
        let mut cur = vec![T::zero(); g.len()];
        let mut pad = vec![T::zero(); (nx + 2) * (nz + 2)];
        let src_scale = self.dt * self.dt / (g.h * g.h);
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        for k in k0..k1 {
            observe(k, &cur);
            self.load_padded(&cur, &mut pad);
            for row in 0..nz {
                let base = (row + 1) * nxp + 1;
                let up = &pad[base - nxp..base - nxp + nx];
                let mid = &pad[base - 1..base + nx + 1];
                let down = &pad[base + nxp..base + nxp + nx];
                let coef = &self.coef[row * nx..(row + 1) * nx];
                let cw = &cur[row * nx..(row + 1) * nx];
                let pw = &mut prev[row * nx..(row + 1) * nx];
                for i in 0..nx {
                    let lap = four * mid[i + 1] - mid[i] - mid[i + 2] - up[i] - down[i];
                    pw[i] = two * cw[i] - pw[i] - coef[i] * lap;
                }
            }
            forcing(k, src_scale, &mut prev);
            std::mem::swap(&mut prev, &mut cur);
        }
        observe(k1, &cur);
    }

    /// Discrete energy between consecutive states, conserved by the scheme
    /// once the source is off: `‖(w¹ − w⁰)/dt‖² + ⟨A w¹, w⁰⟩`.
    pub fn energy(&self, w0: &[T], w1: &[T]) -> T {
        let mut aw = vec![T::zero(); w1.len()];
        self.apply_operator(w1, &mut aw);
        let area = self.medium.grid.cell_area();
        let kin: T = w0.iter().zip(w1).map(|(&a, &b)| ((b - a) / self.dt).powi(2)).sum();
        let pot: T = aw.iter().zip(w0).map(|(&a, &b)| a * b).sum();
        (kin + pot) * area
    }

    /// Trace of one shot sampled at `jτ` for `−j_neg ≤ j ≤ j_max`.
    pub fn shot(&self, array: &ArrayGeometry<T>, source: usize, waveform: Waveform, j_max: usize) -> Result<ShotRecord<T>> {
        if source >= array.m() {
            return Err(Error::config(format!("source index {source} out of range")));
        }
        let node = array.nodes[source];
        let kk = self.steps_per_sample as i64;
        let j_neg = self.negative_samples(waveform);
        let k_src = self.pulse.support(waveform) as i64;
        let rows = j_neg + j_max + 1;
        let mut traces = Matrix::zeros(rows, array.m());
        let k_end = j_max as i64 * kk;
        self.run(
            -k_src,
            k_end,
            |k, scale, next| next[node] = next[node] + scale * self.pulse.source(waveform, k),
            |k, w| {
                if k.rem_euclid(kk) == 0 {
                    let row = (k / kk + j_neg as i64) as usize;
                    for (r, &rn) in array.nodes.iter().enumerate() {
                        traces[(row, r)] = w[rn];
                    }
                }
            },
        );
        Ok(ShotRecord { source, traces, j_neg, tau: self.tau, dt: self.dt })
    }

    /// Even-extended fields `u_j^{(s)} = w(jτ) + w(−jτ)` of the half-pulse
    /// shots at the requested nodes, `j = 0..n−1`.
    pub fn snapshots(&self, array: &ArrayGeometry<T>, n: usize, points: &[usize]) -> Result<SnapshotFields<T>> {
        let m = array.m();
        let npts = points.len();
        if points.iter().any(|&p| p >= self.medium.grid.len()) {
            return Err(Error::config("snapshot point outside the domain"));
        }
        let columns: Vec<Vec<Vec<T>>> = (0..m)
            .into_par_iter()
            .map(|s| self.snapshot_columns(array.nodes[s], n, points))
            .collect();
        let nm = n * m;
        let mut values = vec![T::zero(); npts * nm];
        for (s, per_j) in columns.iter().enumerate() {
            for (j, col) in per_j.iter().enumerate() {
                let c = j * m + s;
                for (p, &v) in col.iter().enumerate() {
                    values[p * nm + c] = v;
                }
            }
        }
        Ok(SnapshotFields { n, m, npts, values })
    }

    fn snapshot_columns(&self, node: usize, n: usize, points: &[usize]) -> Vec<Vec<T>> {
        let kk = self.steps_per_sample as i64;
        let k_src = self.pulse.support(Waveform::Half) as i64;
        let mut out = vec![vec![T::zero(); points.len()]; n];
        let k_end = (n as i64 - 1) * kk;
        self.run(
            -k_src,
            k_end,
            |k, scale, next| next[node] = next[node] + scale * self.pulse.source(Waveform::Half, k),
            |k, w| {
                if k.rem_euclid(kk) == 0 {
                    let j = (k / kk).unsigned_abs() as usize;
                    if j < n {
                        for (o, &p) in out[j].iter_mut().zip(points) {
                            *o = *o + w[p];
                        }
                    }
                }
            },
        );
        // j = 0 was added once; the even extension counts it twice
        for o in out[0].iter_mut() {
            *o = *o + *o;
        }
        out
    }
}

/// Receiver traces of one shot at the data sampling times.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotRecord<T> {
    pub source: usize,
    /// Row `j + j_neg` holds `w^{(s)}(jτ, x_r)` for all receivers `r`.
    pub traces: Matrix<T>,
    pub j_neg: usize,
    pub tau: T,
    pub dt: T,
}

impl<T: Real> ShotRecord<T> {
    pub fn j_max(&self) -> usize {
        self.traces.rows() - 1 - self.j_neg
    }

    /// Trace value at sample `j` (zero before the recorded window).
    pub fn at(&self, j: i64, r: usize) -> T {
        let row = j + self.j_neg as i64;
        if row < 0 || row as usize >= self.traces.rows() {
            T::zero()
        } else {
            self.traces[(row as usize, r)]
        }
    }

    /// `w(jτ) + w(−jτ)`.
    pub fn even(&self, j: usize, r: usize) -> T {
        let j = j as i64;
        if j == 0 {
            T::lit(2.0) * self.at(0, r)
        } else {
            self.at(j, r) + self.at(-j, r)
        }
    }
}

/// Snapshot values; row `p` (one per point) holds the `n·m` entries `u_j^{(s)}`
/// at column `j·m + s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotFields<T> {
    pub n: usize,
    pub m: usize,
    pub npts: usize,
    pub values: Vec<T>,
}

impl<T: Real> SnapshotFields<T> {
    pub fn row(&self, p: usize) -> &[T] {
        let nm = self.n * self.m;
        &self.values[p * nm..(p + 1) * nm]
    }

    pub fn as_matrix(&self) -> Matrix<T> {
        Matrix::from_vec(self.npts, self.n * self.m, self.values.clone()).expect("consistent sizes")
    }

    /// Snapshots `j = 0, stride, 2·stride, …` (`n` of them) of the listed sources,
    /// i.e. the fields of the same experiment sampled at `stride · τ`.
    pub fn select(&self, stride: usize, n: usize, sources: &[usize]) -> Result<Self> {
        if stride == 0 || n == 0 || (n - 1) * stride >= self.n || sources.iter().any(|&s| s >= self.m) {
            return Err(Error::config("snapshot selection out of range"));
        }
        let m = sources.len();
        let nm = n * m;
        let mut values = Vec::with_capacity(self.npts * nm);
        for p in 0..self.npts {
            let row = self.row(p);
            for j in 0..n {
                values.extend(sources.iter().map(|&s| row[j * stride * self.m + s]));
            }
        }
        Ok(Self { n, m, npts: self.npts, values })
    }

    /// Field of snapshot `j`, source `s` over all points.
    pub fn field(&self, j: usize, s: usize) -> Vec<T> {
        let c = j * self.m + s;
        (0..self.npts).map(|p| self.row(p)[c]).collect()
    }
}

/// The `2n` data matrices `D_j`, entry `(r, s) = w_e^{(s)}(jτ, x_r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DataTensor<T> {
    pub m: usize,
    pub tau: T,
    pub mats: Vec<Matrix<T>>,
}

impl<T: Real> DataTensor<T> {
    pub fn new(tau: T, mats: Vec<Matrix<T>>) -> Result<Self> {
        let m = mats.first().map(|d| d.rows()).unwrap_or(0);
        if mats.iter().any(|d| d.rows() != m || d.cols() != m) {
            return Err(Error::dim("data matrices must all be m x m"));
        }
        Ok(Self { m, tau, mats })
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// Largest `n` with `2n` matrices available.
    pub fn n(&self) -> usize {
        self.mats.len() / 2
    }

    /// Largest relative asymmetry `‖D_j − D_jᵀ‖_F / ‖D_j‖_F`.
    pub fn asymmetry(&self) -> T {
        self.mats
            .iter()
            .map(|d| {
                let nd = d.frobenius();
                if nd == T::zero() {
                    T::zero()
                } else {
                    d.sub(&d.transpose()).frobenius() / nd
                }
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn symmetrized(&self) -> Self {
        let mats = self
            .mats
            .iter()
            .map(|d| {
                let mut s = d.clone();
                s.symmetrize();
                s
            })
            .collect();
        Self { m: self.m, tau: self.tau, mats }
    }

    pub fn truncated(&self, count: usize) -> Self {
        Self { m: self.m, tau: self.tau, mats: self.mats[..count.min(self.mats.len())].to_vec() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.m != other.m || self.len() != other.len() {
            return Err(Error::dim("data tensors differ in shape"));
        }
        let mats = self.mats.iter().zip(&other.mats).map(|(a, b)| a.sub(b)).collect();
        Ok(Self { m: self.m, tau: self.tau, mats })
    }

    pub fn scale(&self, a: T) -> Self {
        Self { m: self.m, tau: self.tau, mats: self.mats.iter().map(|d| d.scale(a)).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.mats.iter().map(|d| d.max_abs()).fold(T::zero(), |a, b| a.max(b))
    }

    /// Every `stride`-th matrix: the same data sampled at `stride · τ`.
    pub fn subsample(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let mats = self.mats.iter().step_by(stride).cloned().collect();
        Self { m: self.m, tau: self.tau * T::from_usize_lossy(stride), mats }
    }

    /// Keeps only the rows and columns of the listed sensors.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mats = self
            .mats
            .iter()
            .map(|d| Matrix::from_fn(keep.len(), keep.len(), |a, b| d[(keep[a], keep[b])]))
            .collect();
        Self { m: keep.len(), tau: self.tau, mats }
    }
}

/// Assembles `D_j` for `j = 0..2n−1` from one record per source.
pub fn compute_data_tensor<T: Real>(records: &[ShotRecord<T>], n: usize) -> Result<DataTensor<T>> {
    let m = records.len();
    if m == 0 {
        return Err(Error::config("no shot records"));
    }
    let r0 = &records[0];
    for (s, rec) in records.iter().enumerate() {
        if rec.source != s {
            return Err(Error::config(format!("record {s} belongs to source {}", rec.source)));
        }
        if rec.traces.cols() != m {
            return Err(Error::dim("receiver count differs from source count"));
        }
        if rec.tau != r0.tau || rec.dt != r0.dt || rec.j_neg != r0.j_neg || rec.traces.rows() != r0.traces.rows() {
            return Err(Error::config("shot records use different sampling"));
        }
    }
    if r0.j_max() + 1 < 2 * n {
        return Err(Error::config(format!("records hold {} samples, {} needed", r0.j_max() + 1, 2 * n)));
    }
    let mats = (0..2 * n)
        .map(|j| Matrix::from_fn(m, m, |r, s| records[s].even(j, r)))
        .collect();
    DataTensor::new(r0.tau, mats)
}

/// All `m` shots with the given waveform, `2n` samples each.
pub fn simulate_records<T: Real>(
    sim: &Simulator<'_, T>,
    array: &ArrayGeometry<T>,
    n: usize,
) -> Result<Vec<ShotRecord<T>>> {
    (0..array.m())
        .into_par_iter()
        .map(|s| sim.shot(array, s, Waveform::Full, 2 * n - 1))
        .collect()
}

/// Data tensor of a medium: `m` full-pulse shots.
pub fn simulate_data<T: Real>(
    medium: &Medium<T>,
    array: &ArrayGeometry<T>,
    pulse: &Pulse<T>,
    tau: T,
    n: usize,
) -> Result<DataTensor<T>> {
    if n == 0 {
        return Err(Error::config("n must be positive"));
    }
    let sim = Simulator::new(medium, pulse, tau)?;
    compute_data_tensor(&simulate_records(&sim, array, n)?, n)
}

pub fn simulate_snapshots<T: Real>(
    medium: &Medium<T>,
    array: &ArrayGeometry<T>,
    pulse: &Pulse<T>,
    tau: T,
    n: usize,
    points: &[usize],
) -> Result<SnapshotFields<T>> {
    Simulator::new(medium, pulse, tau)?.snapshots(array, n, points)
}
