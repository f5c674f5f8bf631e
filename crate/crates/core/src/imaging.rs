//! Imaging functions over an imaging grid and their postprocessing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ImagingGrid;
use crate::internal::{internal_wave, SnapshotBasis};
use crate::linalg::{dot, Matrix};
use crate::medium::{ArrayGeometry, Medium};
use crate::pulse::{Pulse, Waveform};
use crate::rom::{row_times_upper, BlockMatrix};
use crate::scalar::Real;
use crate::solver::{DataTensor, SnapshotFields, Simulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageKind {
    Norm,
    Ideal,
    Backprojection,
    Rtm,
    PixelScan,
    RangeDerivative,
    Psf,
}

impl ImageKind {
    pub fn name(&self) -> &'static str {
        match self {
            ImageKind::Norm => "norm",
            ImageKind::Ideal => "ideal",
            ImageKind::Backprojection => "bp",
            ImageKind::Rtm => "rtm",
            ImageKind::PixelScan => "ps",
            ImageKind::RangeDerivative => "range_derivative",
            ImageKind::Psf => "psf",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            ImageKind::Norm,
            ImageKind::Ideal,
            ImageKind::Backprojection,
            ImageKind::Rtm,
            ImageKind::PixelScan,
            ImageKind::RangeDerivative,
            ImageKind::Psf,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }
}

/// Provenance carried by every image.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageParams {
    pub tau: f64,
    pub n: usize,
    pub m: usize,
    pub aperture: f64,
    pub noise: f64,
    pub lambda_min: Option<f64>,
    pub seed: Option<u64>,
    pub source: Option<String>,
    pub sigma: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    pub grid: ImagingGrid<T>,
    pub values: Vec<T>,
    pub kind: ImageKind,
    pub params: ImageParams,
}

impl<T: Real> Image<T> {
    pub fn new(grid: ImagingGrid<T>, values: Vec<T>, kind: ImageKind, params: ImageParams) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::dim("image size differs from its grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("{} image has non-finite values", kind.name())));
        }
        Ok(Self { grid, values, kind, params })
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize) -> T {
        self.values[self.grid.point(a, b)]
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Divides by the largest absolute value (no-op on a zero image).
    pub fn normalized(&self) -> Self {
        let s = self.max_abs();
        let mut out = self.clone();
        if s > T::zero() {
            out.values.iter_mut().for_each(|v| *v = *v / s);
        }
        out
    }

    /// `max_{x ∈ window} |I(x, z)|` for each grid row `z`.
    pub fn range_profile(&self, x_window: (T, T)) -> Vec<(T, T)> {
        let xs = self.grid.xs();
        let zs = self.grid.zs();
        zs.iter()
            .enumerate()
            .map(|(b, &z)| {
                let v = xs
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x >= x_window.0 && x <= x_window.1)
                    .map(|(a, _)| self.at(a, b).abs())
                    .fold(T::zero(), |m, v| m.max(v));
                (z, v)
            })
            .collect()
    }

    /// Grid point with the largest absolute value.
    pub fn argmax(&self) -> (T, T) {
        let mut best = 0;
        for (p, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = p;
            }
        }
        self.grid.coords(best)
    }
}

/// Interior local maxima of a sampled profile, as `(position, value)`.
pub fn local_maxima<T: Real>(profile: &[(T, T)]) -> Vec<(T, T)> {
    (1..profile.len().saturating_sub(1))
        .filter(|&i| profile[i].1 > profile[i - 1].1 && profile[i].1 >= profile[i + 1].1)
        .map(|i| profile[i])
        .collect()
}

/// Peak over the disc of radius `inner` around `y` divided by the peak outside
/// radius `outer`.
pub fn peak_to_sidelobe<T: Real>(field: &[T], grid: &ImagingGrid<T>, y: (T, T), inner: T, outer: T) -> T {
    let mut peak = T::zero();
    let mut side = T::zero();
    for (p, &v) in field.iter().enumerate() {
        let (x, z) = grid.coords(p);
        let d = ((x - y.0).powi(2) + (z - y.1).powi(2)).sqrt();
        if d <= inner {
            peak = peak.max(v.abs());
        } else if d > outer {
            side = side.max(v.abs());
        }
    }
    if side == T::zero() {
        T::infinity()
    } else {
        peak / side
    }
}

fn check_basis<T: Real>(r: &BlockMatrix<T>, basis: &SnapshotBasis<T>) -> Result<()> {
    if r.n != basis.n || r.m != basis.m {
        return Err(Error::dim(format!(
            "ROM has n={}, m={} but basis has n={}, m={}",
            r.n, r.m, basis.n, basis.m
        )));
    }
    Ok(())
}

/// `I(y) = ‖V_o(y) R‖²`, the energy of the internal wave at the array.
pub fn image_norm<T: Real>(r: &BlockMatrix<T>, basis: &SnapshotBasis<T>, params: ImageParams) -> Result<Image<T>> {
    check_basis(r, basis)?;
    let values = (0..basis.grid.len())
        .into_par_iter()
        .map(|p| {
            let g = row_times_upper(r, basis.row(p));
            dot(&g, &g)
        })
        .collect();
    Image::new(basis.grid, values, ImageKind::Norm, params)
}

/// `I(y)` summed explicitly from the internal waves; same numbers as [`image_norm`].
pub fn image_norm_explicit<T: Real>(r: &BlockMatrix<T>, basis: &SnapshotBasis<T>, params: ImageParams) -> Result<Image<T>> {
    let values = (0..basis.grid.len())
        .map(|p| {
            let (x, z) = basis.grid.coords(p);
            internal_wave(r, basis, (x, z)).map(|g| g.energy())
        })
        .collect::<Result<Vec<_>>>()?;
    Image::new(basis.grid, values, ImageKind::Norm, params)
}

/// `I^{ideal}(y) = Σ_{r,j} |g^{ideal}(jτ, x_r; y)|²`.
///
/// By reciprocity `g^{ideal}(jτ, x_r; y) = u_j^{(r)}(y)`, the true-medium
/// snapshot at `y`, so the image is the squared norm of the true snapshots.
pub fn image_ideal<T: Real>(grid: ImagingGrid<T>, snaps_true: &SnapshotFields<T>, params: ImageParams) -> Result<Image<T>> {
    if snaps_true.npts != grid.len() {
        return Err(Error::dim("snapshots do not match the imaging grid"));
    }
    let values = (0..grid.len()).map(|p| dot(snaps_true.row(p), snaps_true.row(p))).collect();
    Image::new(grid, values, ImageKind::Ideal, params)
}

/// `g^{ideal}(jτ, x_r; y)` by a direct solve with the half pulse emitted at `y`.
pub fn ideal_internal_wave<T: Real>(
    medium: &Medium<T>,
    array: &ArrayGeometry<T>,
    pulse: &Pulse<T>,
    tau: T,
    n: usize,
    y: (T, T),
) -> Result<Matrix<T>> {
    let (i, k) = medium
        .grid
        .nearest(y.0, y.1)
        .ok_or_else(|| Error::config("point outside the domain"))?;
    let node = medium.grid.index(i, k);
    let sim = Simulator::new(medium, pulse, tau)?;
    let fields = sim.snapshots(&ArrayGeometry { positions: vec![y], nodes: vec![node], aperture: T::zero() }, n, &array.nodes)?;
    Ok(Matrix::from_fn(n, array.m(), |j, r| fields.row(r)[j]))
}

/// `I^{BP}(y) = V_o(y) (P^{ROM} − P_o^{ROM}) V_o(y)ᵀ`.
pub fn image_backprojection<T: Real>(
    p_rom: &BlockMatrix<T>,
    p_ref: &BlockMatrix<T>,
    basis: &SnapshotBasis<T>,
    params: ImageParams,
) -> Result<Image<T>> {
    check_basis(p_rom, basis)?;
    check_basis(p_ref, basis)?;
    let diff = p_rom.mat.sub(&p_ref.mat);
    let values = (0..basis.grid.len())
        .into_par_iter()
        .map(|p| {
            let v = basis.row(p);
            dot(&diff.matvec(v), v)
        })
        .collect();
    Image::new(basis.grid, values, ImageKind::Backprojection, params)
}

/// Four-point Lagrange interpolation of uniformly spaced samples at
/// fractional index `x`; samples outside `0..len` are zero.
pub fn cubic_interp<T: Real>(samples: &[T], x: T) -> T {
    let fl = x.floor();
    let i0 = fl.to_i64().unwrap_or(i64::MIN / 2);
    let t = x - fl;
    let get = |i: i64| {
        if i < 0 || i as usize >= samples.len() {
            T::zero()
        } else {
            samples[i as usize]
        }
    };
    if t == T::zero() {
        return get(i0);
    }
    let (one, two, six) = (T::one(), T::lit(2.0), T::lit(6.0));
    let (pm, p0, p1, p2) = (get(i0 - 1), get(i0), get(i0 + 1), get(i0 + 2));
    let wm = -t * (t - one) * (t - two) / six;
    let w0 = (t + one) * (t - one) * (t - two) / two;
    let w1 = -(t + one) * t * (t - two) / two;
    let w2 = (t + one) * t * (t - one) / six;
    wm * pm + w0 * p0 + w1 * p1 + w2 * p2
}

/// Reverse-time migration of (typically reference-subtracted) data in the
/// reference medium: zero-lag correlation of the forward source field with
/// the back-propagated traces, normalized to unit maximum.
pub fn image_rtm<T: Real>(
    data: &DataTensor<T>,
    medium_ref: &Medium<T>,
    array: &ArrayGeometry<T>,
    pulse: &Pulse<T>,
    grid: &ImagingGrid<T>,
    params: ImageParams,
) -> Result<Image<T>> {
    if data.m != array.m() {
        return Err(Error::dim("data and array sizes differ"));
    }
    let sim = Simulator::new(medium_ref, pulse, data.tau)?;
    let kk = sim.steps_per_sample as i64;
    let samples = data.len();
    let pts = grid.solver_indices();
    let npts = pts.len();
    let k_end = (samples as i64 - 1) * kk;
    let k_src = sim.pulse.support(Waveform::Full) as i64;
    let partial: Vec<Vec<T>> = (0..array.m())
        .into_par_iter()
        .map(|s| {
            let node = array.nodes[s];
            let mut fwd = vec![T::zero(); samples * npts];
            sim.run(
                -k_src,
                k_end,
                |k, scale, next| next[node] = next[node] + scale * sim.pulse.source(Waveform::Full, k),
                |k, w| {
                    if k >= 0 && k % kk == 0 {
                        let j = (k / kk) as usize;
                        for (o, &p) in fwd[j * npts..(j + 1) * npts].iter_mut().zip(&pts) {
                            *o = w[p];
                        }
                    }
                },
            );
            // adjoint source: traces reversed in time about the last sample
            let traces: Vec<Vec<T>> = (0..array.m())
                .map(|r| (0..samples).rev().map(|j| data.mats[j][(r, s)]).collect())
                .collect();
            let kkt = T::from_usize_lossy(sim.steps_per_sample);
            let mut img = vec![T::zero(); npts];
            sim.run(
                0,
                k_end,
                |k, scale, next| {
                    let x = T::from_i64(k).unwrap_or(T::zero()) / kkt;
                    for (r, tr) in traces.iter().enumerate() {
                        let q = cubic_interp(tr, x);
                        next[array.nodes[r]] = next[array.nodes[r]] + scale * q;
                    }
                },
                |k, w| {
                    if k % kk == 0 {
                        let j = samples - 1 - (k / kk) as usize;
                        let f = &fwd[j * npts..(j + 1) * npts];
                        for ((o, &p), &u) in img.iter_mut().zip(&pts).zip(f) {
                            *o = *o + u * w[p];
                        }
                    }
                },
            );
            img
        })
        .collect();
    let mut values = vec![T::zero(); npts];
    for img in &partial {
        for (v, &x) in values.iter_mut().zip(img) {
            *v = *v + x;
        }
    }
    Ok(Image::new(*grid, values, ImageKind::Rtm, params)?.normalized())
}

/// Outcome of the focusing experiment for one pixel.
#[derive(Clone, Debug)]
pub struct PixelScanResult<T> {
    pub y: (T, T),
    pub value: T,
    /// Internal wave used as control, `n × m`.
    pub control: Matrix<T>,
    /// `γ(iτ, x_r)` for `i = 0..2n`, `(2n+1) × m`.
    pub gamma: Matrix<T>,
    /// `γ(nτ, ·)` on the focus grid, when requested.
    pub focus: Option<Vec<T>>,
    /// Source series of each sensor at the solver step, starting at step `-1`.
    pub sources: Vec<Vec<T>>,
}

/// Time-reversed control `𝔉(t, x_s) = 1_{[0,nτ]}(t) g(nτ − t, x_s)` sampled
/// at `t = iτ`, `i = 0..n`, with `g(nτ)` taken as zero.
pub fn control_samples<T: Real>(g: &Matrix<T>, s: usize) -> Vec<T> {
    let n = g.rows();
    (0..=n).map(|i| if i == 0 { T::zero() } else { g[(n - i, s)] }).collect()
}

/// Per-sensor source series `∂_t 𝔉` at solver steps `k = −1..=nK+1`.
fn control_sources<T: Real>(g: &Matrix<T>, kk: usize, dt: T) -> Vec<Vec<T>> {
    let n = g.rows();
    let kkt = T::from_usize_lossy(kk);
    let last = (n * kk) as i64;
    (0..g.cols())
        .map(|s| {
            let samp = control_samples(g, s);
            let f = |k: i64| {
                if k < 0 || k > last {
                    T::zero()
                } else {
                    cubic_interp(&samp, T::from_i64(k).unwrap_or(T::zero()) / kkt)
                }
            };
            (-1..=last + 1).map(|k| (f(k + 1) - f(k - 1)) / (dt + dt)).collect()
        })
        .collect()
}

/// Focuses at `y` with the internal wave as control and measures the response.
#[allow(clippy::too_many_arguments)]
pub fn pixel_scan<T: Real>(
    r: &BlockMatrix<T>,
    basis: &SnapshotBasis<T>,
    medium_true: &Medium<T>,
    array: &ArrayGeometry<T>,
    pulse: &Pulse<T>,
    tau: T,
    y: (T, T),
    focus_grid: Option<&ImagingGrid<T>>,
) -> Result<PixelScanResult<T>> {
    check_basis(r, basis)?;
    let g = internal_wave(r, basis, y)?.values;
    let n = g.rows();
    let m = g.cols();
    let sim = Simulator::new(medium_true, pulse, tau)?;
    let kk = sim.steps_per_sample;
    let sources = control_sources(&g, kk, sim.dt);
    let mut gamma = Matrix::zeros(2 * n + 1, m);
    let mut focus = None;
    let focus_pts = focus_grid.map(|fg| fg.solver_indices());
    sim.run(
        -1,
        (2 * n * kk) as i64,
        |k, scale, next| {
            let idx = (k + 1) as usize;
            for (s, src) in sources.iter().enumerate() {
                if let Some(&q) = src.get(idx) {
                    next[array.nodes[s]] = next[array.nodes[s]] + scale * q;
                }
            }
        },
        |k, w| {
            if k >= 0 && k as usize % kk == 0 {
                let i = k as usize / kk;
                for (rr, &node) in array.nodes.iter().enumerate() {
                    gamma[(i, rr)] = w[node];
                }
                if i == n {
                    if let Some(pts) = &focus_pts {
                        focus = Some(pts.iter().map(|&p| w[p]).collect());
                    }
                }
            }
        },
    );
    // I^PS = Σ_r ∫_0^{nτ} γ(nτ + t, x_r) g(t, x_r) dt, trapezoid at τ; g(nτ) = 0
    let mut value = T::zero();
    for j in 0..n {
        let wgt = if j == 0 { T::lit(0.5) } else { T::one() };
        for rr in 0..m {
            value = value + wgt * gamma[(n + j, rr)] * g[(j, rr)];
        }
    }
    value = value * tau;
    Ok(PixelScanResult { y, value, control: g, gamma, focus, sources })
}

/// Rough cost of one pixel-scan solve in node updates.
pub fn pixel_scan_cost<T: Real>(medium: &Medium<T>, pulse: &Pulse<T>, tau: T, n: usize) -> Result<u64> {
    let sim = Simulator::new(medium, pulse, tau)?;
    Ok((2 * n * sim.steps_per_sample) as u64 * medium.grid.len() as u64)
}

/// Pixel-scan image over a grid; refused beyond `max_pixels` solves.
#[allow(clippy::too_many_arguments)]
pub fn image_pixel_scan<T: Real>(
    r: &BlockMatrix<T>,
    basis: &SnapshotBasis<T>,
    medium_true: &Medium<T>,
    array: &ArrayGeometry<T>,
    pulse: &Pulse<T>,
    tau: T,
    grid: &ImagingGrid<T>,
    max_pixels: usize,
    params: ImageParams,
) -> Result<Image<T>> {
    if grid.len() > max_pixels {
        let per = pixel_scan_cost(medium_true, pulse, tau, r.n)?;
        return Err(Error::config(format!(
            "pixel scan over {} pixels needs {} solves (~{:.2e} node updates); budget is {max_pixels} pixels",
            grid.len(),
            grid.len(),
            per as f64 * grid.len() as f64
        )));
    }
    let values = (0..grid.len())
        .into_par_iter()
        .map(|p| pixel_scan(r, basis, medium_true, array, pulse, tau, grid.coords(p), None).map(|o| o.value))
        .collect::<Result<Vec<_>>>()?;
    Image::new(*grid, values, ImageKind::PixelScan, params)
}

/// Receiver responses to a unit source impulse at step 0 from each sensor,
/// `G_s(k, x_r)` for `k = 0..=len`.
pub fn impulse_responses<T: Real>(sim: &Simulator<'_, T>, array: &ArrayGeometry<T>, len: usize) -> Vec<Matrix<T>> {
    (0..array.m())
        .into_par_iter()
        .map(|s| {
            let node = array.nodes[s];
            let mut out = Matrix::zeros(len + 1, array.m());
            sim.run(
                0,
                len as i64,
                |k, scale, next| {
                    if k == 0 {
                        next[node] = next[node] + scale;
                    }
                },
                |k, w| {
                    for (r, &nd) in array.nodes.iter().enumerate() {
                        out[(k as usize, r)] = w[nd];
                    }
                },
            );
            out
        })
        .collect()
}

/// `γ(iτ, x_r) = Σ_s Σ_k q_s^k G_s(iK − k, x_r)` from per-sensor impulse responses.
pub fn gamma_by_superposition<T: Real>(
    sources: &[Vec<T>],
    responses: &[Matrix<T>],
    steps_per_sample: usize,
    samples: usize,
) -> Matrix<T> {
    let m = responses.first().map(|g| g.cols()).unwrap_or(0);
    let mut gamma = Matrix::zeros(samples, m);
    for (src, resp) in sources.iter().zip(responses) {
        for i in 0..samples {
            let target = (i * steps_per_sample) as i64;
            for (idx, &q) in src.iter().enumerate() {
                if q == T::zero() {
                    continue;
                }
                let k = idx as i64 - 1;
                let lag = target - k;
                if lag < 0 || lag as usize >= resp.rows() {
                    continue;
                }
                for r in 0..m {
                    gamma[(i, r)] = gamma[(i, r)] + q * resp[(lag as usize, r)];
                }
            }
        }
    }
    gamma
}

/// Gaussian smoothing along range followed by a centered range derivative.
pub fn range_derivative<T: Real>(img: &Image<T>, sigma: T) -> Result<Image<T>> {
    if !(sigma > T::zero()) {
        return Err(Error::config("sigma must be positive"));
    }
    let grid = img.grid;
    let sp = grid.spacing();
    let mut params = img.params.clone();
    params.sigma = Some(sigma.f64());
    if sp > sigma {
        params.warnings.push(format!(
            "range spacing {:.4} exceeds smoothing width {:.4}",
            sp.f64(),
            sigma.f64()
        ));
    }
    let half = (T::lit(4.0) * sigma / sp).floor().to_usize().unwrap_or(0);
    let kernel: Vec<T> = (0..=half)
        .map(|i| {
            let d = T::from_usize_lossy(i) * sp;
            (-(d * d) / (T::lit(2.0) * sigma * sigma)).exp()
        })
        .collect();
    let (ni, nk) = (grid.ni, grid.nk);
    let mut smooth = vec![T::zero(); img.values.len()];
    for a in 0..ni {
        for b in 0..nk {
            let (mut acc, mut wsum) = (T::zero(), T::zero());
            let lo = b.saturating_sub(half);
            let hi = (b + half).min(nk - 1);
            for bb in lo..=hi {
                let w = kernel[bb.abs_diff(b)];
                acc = acc + w * img.at(a, bb);
                wsum = wsum + w;
            }
            smooth[grid.point(a, b)] = acc / wsum;
        }
    }
    let mut out = vec![T::zero(); img.values.len()];
    for a in 0..ni {
        for b in 0..nk {
            let v = if nk < 2 {
                T::zero()
            } else if b == 0 {
                (smooth[grid.point(a, 1)] - smooth[grid.point(a, 0)]) / sp
            } else if b == nk - 1 {
                (smooth[grid.point(a, b)] - smooth[grid.point(a, b - 1)]) / sp
            } else {
                (smooth[grid.point(a, b + 1)] - smooth[grid.point(a, b - 1)]) / (sp + sp)
            };
            out[grid.point(a, b)] = v;
        }
    }
    Image::new(grid, out, ImageKind::RangeDerivative, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid() -> ImagingGrid<f64> {
        ImagingGrid::full(Grid::new(6, 100, 0.01, 0.0, 0.0).unwrap())
    }

    #[test]
    fn range_derivative_of_constant_and_linear() {
        let g = grid();
        let c = Image::new(g, vec![3.0; g.len()], ImageKind::Norm, ImageParams::default()).unwrap();
        let d = range_derivative(&c, 0.05).unwrap();
        assert!(d.values.iter().all(|v| v.abs() < 1e-12));
        let lin: Vec<f64> = (0..g.len()).map(|p| 2.5 * g.coords(p).1).collect();
        let l = Image::new(g, lin, ImageKind::Norm, ImageParams::default()).unwrap();
        let d = range_derivative(&l, 0.05).unwrap();
        for b in 25..75 {
            assert!((d.at(2, b) - 2.5).abs() < 1e-9);
        }
        assert!(d.params.warnings.is_empty());
    }

    #[test]
    fn coarse_grid_records_warning() {
        let g = ImagingGrid::full(Grid::new(3, 10, 0.125, 0.0, 0.0).unwrap());
        let img = Image::new(g, vec![1.0; g.len()], ImageKind::Norm, ImageParams::default()).unwrap();
        assert_eq!(range_derivative(&img, 0.05).unwrap().params.warnings.len(), 1);
    }

    #[test]
    fn cubic_interp_is_exact_on_cubics() {
        let f = |x: f64| 0.5 * x * x * x - x * x + 2.0;
        let s: Vec<f64> = (0..10).map(|i| f(i as f64)).collect();
        for &x in &[1.5, 3.25, 6.9] {
            assert!((cubic_interp(&s, x) - f(x)).abs() < 1e-10);
        }
        assert_eq!(cubic_interp(&s, 4.0), s[4]);
        assert_eq!(cubic_interp(&s, -3.0), 0.0);
    }

    #[test]
    fn local_maxima_and_sidelobes() {
        let prof: Vec<(f64, f64)> = [0.0, 1.0, 0.5, 0.2, 2.0, 1.0].iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
        let mx = local_maxima(&prof);
        assert_eq!(mx, vec![(1.0, 1.0), (4.0, 2.0)]);
        let g = ImagingGrid::full(Grid::new(11, 11, 0.1, 0.0, 0.0).unwrap());
        let field: Vec<f64> = (0..g.len())
            .map(|p| {
                let (x, z): (f64, f64) = g.coords(p);
                (-((x - 0.5).powi(2) + (z - 0.5).powi(2)) * 20.0).exp()
            })
            .collect();
        let r = peak_to_sidelobe(&field, &g, (0.5, 0.5), 0.1, 0.31);
        assert!((r - 2.0f64.exp()).abs() < 1e-9);
    }
}
