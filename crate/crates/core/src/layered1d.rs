//! One-dimensional layered media in travel-time coordinates and waveguide
//! mode utilities.
//!
//! The even-in-time pressure `P(t, T)` solves
//! `P_tt = ζ ∂_T (ζ^{-1} ∂_T P)` on `(0, T_L)` with `∂_T P = 0` at `T = 0`,
//! `P = 0` at `T_L`, `P(0, ·) = φ` and `P_t(0, ·) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{dot, norm2, Matrix};
use crate::medium::{Boundary, Medium};
use crate::pulse::{Pulse, Waveform};
use crate::scalar::Real;
use crate::solver::Simulator;

/// `(ℜ, 𝔗)` for a jump from impedance `zeta_j` to `zeta_j1`.
pub fn reflection_transmission<T: Real>(zeta_j: T, zeta_j1: T) -> Result<(T, T)> {
    if !(zeta_j > T::zero() && zeta_j1 > T::zero()) || !zeta_j.is_finite() || !zeta_j1.is_finite() {
        return Err(Error::config("impedances must be positive and finite"));
    }
    let sum = zeta_j + zeta_j1;
    Ok(((zeta_j - zeta_j1) / sum, T::lit(2.0) * (zeta_j * zeta_j1).sqrt() / sum))
}

/// Piecewise constant impedance: `ζ = impedances[j]` on `(T_{j−1}, T_j]`,
/// with `T_{−1} = 0` and the last layer extending to `depth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeredMedium<T> {
    pub impedances: Vec<T>,
    /// Interface travel times `T_0 < T_1 < … < T_ℓ`.
    pub interfaces: Vec<T>,
    /// `T(L)`, where the Dirichlet condition sits.
    pub depth: T,
}

impl<T: Real> LayeredMedium<T> {
    pub fn new(impedances: Vec<T>, interfaces: Vec<T>, depth: T) -> Result<Self> {
        if impedances.len() != interfaces.len() + 1 {
            return Err(Error::dim(format!(
                "{} impedances for {} interfaces",
                impedances.len(),
                interfaces.len()
            )));
        }
        if impedances.iter().any(|&z| !(z > T::zero()) || !z.is_finite()) {
            return Err(Error::config("impedances must be positive and finite"));
        }
        let mut last = T::zero();
        for &t in &interfaces {
            if !(t > last) {
                return Err(Error::config("interface travel times must be positive and strictly increasing"));
            }
            last = t;
        }
        if !(depth > last) {
            return Err(Error::config("total depth must exceed the deepest interface"));
        }
        Ok(Self { impedances, interfaces, depth })
    }

    pub fn homogeneous(zeta: T, depth: T) -> Result<Self> {
        Self::new(vec![zeta], vec![], depth)
    }

    pub fn single_interface(zeta0: T, zeta1: T, t0: T, depth: T) -> Result<Self> {
        Self::new(vec![zeta0, zeta1], vec![t0], depth)
    }

    /// Layers given in range: interface depths `z_j`, per-layer speeds and
    /// impedances, total range `l`. Interface times follow from `T(z) = ∫ dz/c`.
    pub fn from_range(z_interfaces: &[T], speeds: &[T], impedances: Vec<T>, l: T) -> Result<Self> {
        if speeds.len() != z_interfaces.len() + 1 {
            return Err(Error::dim("one speed per layer required"));
        }
        let interfaces = z_interfaces
            .iter()
            .map(|&z| travel_time(z_interfaces, speeds, z))
            .collect::<Result<Vec<_>>>()?;
        let depth = travel_time(z_interfaces, speeds, l)?;
        Self::new(impedances, interfaces, depth)
    }

    pub fn layer_count(&self) -> usize {
        self.impedances.len()
    }

    /// Layer containing travel time `t`.
    pub fn layer(&self, t: T) -> usize {
        self.interfaces.iter().take_while(|&&ti| t > ti).count()
    }

    pub fn impedance_at(&self, t: T) -> T {
        self.impedances[self.layer(t)]
    }

    /// `(ℜ_j, 𝔗_j)` for every interface.
    pub fn coefficients(&self) -> Vec<(T, T)> {
        self.impedances
            .windows(2)
            .map(|w| reflection_transmission(w[0], w[1]).expect("validated impedances"))
            .collect()
    }

    /// `∫_a^b g(ζ(T)) dT` for `0 ≤ a ≤ b`.
    fn integrate(&self, a: T, b: T, g: impl Fn(T) -> T) -> T {
        let mut acc = T::zero();
        let mut lo = a;
        for (j, &z) in self.impedances.iter().enumerate() {
            let hi = self.interfaces.get(j).copied().unwrap_or_else(T::infinity).min(b);
            if hi > lo {
                acc = acc + (hi - lo) * g(z);
                lo = hi;
            }
            if lo >= b {
                break;
            }
        }
        acc
    }
}

/// `T(z) = ∫_0^z dz'/c(z')` for piecewise constant speed.
pub fn travel_time<T: Real>(z_interfaces: &[T], speeds: &[T], z: T) -> Result<T> {
    if speeds.len() != z_interfaces.len() + 1 || speeds.iter().any(|&c| !(c > T::zero())) {
        return Err(Error::config("speeds must be positive, one per layer"));
    }
    let mut acc = T::zero();
    let mut lo = T::zero();
    for (j, &c) in speeds.iter().enumerate() {
        let hi = z_interfaces.get(j).copied().unwrap_or_else(T::infinity).min(z);
        if hi > lo {
            acc = acc + (hi - lo) / c;
            lo = hi;
        }
    }
    Ok(acc)
}

/// Compactly supported initial state `φ(T) = 2 F(T/t_f) cos(ω_c T)` with
/// the smooth bump `F(s) = exp(−s²/(1 − s²))` on `|s| < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse1d<T> {
    pub omega_c: T,
    pub t_f: T,
}

impl<T: Real> Pulse1d<T> {
    pub fn new(omega_c: T, t_f: T) -> Result<Self> {
        if !(omega_c >= T::zero() && t_f > T::zero()) {
            return Err(Error::config("pulse needs ω_c ≥ 0 and t_f > 0"));
        }
        Ok(Self { omega_c, t_f })
    }

    pub fn envelope(&self, s: T) -> T {
        let s2 = s * s;
        if s2 >= T::one() {
            T::zero()
        } else {
            (-s2 / (T::one() - s2)).exp()
        }
    }

    pub fn phi(&self, t: T) -> T {
        T::lit(2.0) * self.envelope(t / self.t_f) * (self.omega_c * t).cos()
    }
}

/// `P_o(t, T) = ½ [φ(T − t) + φ(T + t)]`.
pub fn reference_solution<T: Real>(pulse: &Pulse1d<T>, t: T, x: T) -> T {
    T::lit(0.5) * (pulse.phi(x - t) + pulse.phi(x + t))
}

/// Smallest `q_max` past which every echo of the single-interface series
/// vanishes for `|t| ≤ t_max` on `(0, depth)`.
pub fn causal_q_max<T: Real>(medium: &LayeredMedium<T>, pulse: &Pulse1d<T>, t_max: T) -> usize {
    match medium.interfaces.first() {
        None => 0,
        Some(&t0) => ((t_max.abs() + medium.depth + pulse.t_f) / (t0 + t0)).ceil().to_usize().unwrap_or(0) + 1,
    }
}

/// Multiple-reflection series for a medium with at most one interface:
/// `Σ_q (−ℜ_0)^q P_o(t − 2qT_0, T)` above the interface and
/// `𝔗_0 √(ζ_1/ζ_0) Σ_q (−ℜ_0)^q ½ φ(T − t + 2qT_0)` below it.
pub fn single_layer_series<T: Real>(
    medium: &LayeredMedium<T>,
    pulse: &Pulse1d<T>,
    t: T,
    x: T,
    q_max: Option<usize>,
) -> Result<T> {
    let t = t.abs();
    let t0 = match medium.interfaces.as_slice() {
        [] => return Ok(reference_solution(pulse, t, x)),
        [t0] => *t0,
        _ => return Err(Error::config("the explicit series covers a single interface only")),
    };
    let q_max = q_max.unwrap_or_else(|| causal_q_max(medium, pulse, t));
    let (r0, tr0) = reflection_transmission(medium.impedances[0], medium.impedances[1])?;
    let half = T::lit(0.5);
    let mut acc = T::zero();
    let mut coef = T::one();
    for q in 0..=q_max {
        let shift = T::from_usize_lossy(2 * q) * t0;
        let term = if x <= t0 {
            half * (pulse.phi(x - t + shift) + pulse.phi(x + t - shift))
        } else {
            half * pulse.phi(x - t + shift)
        };
        acc = acc + coef * term;
        coef = -coef * r0;
    }
    if x > t0 {
        acc = acc * tr0 * (medium.impedances[1] / medium.impedances[0]).sqrt();
    }
    Ok(acc)
}

/// Conservative leapfrog scheme for the travel-time equation on nodes
/// `T_i = i dT`, `i = 0..=N` with `N dT = T_L`.
#[derive(Clone, Debug)]
pub struct TravelTimeSolver<T> {
    pub d_t: T,
    pub nodes: usize,
    /// `∫ ζ^{-1}` over the control cell of each node.
    mass: Vec<T>,
    /// `1 / ∫ ζ` over each segment `[T_i, T_{i+1}]`.
    conductance: Vec<T>,
}

impl<T: Real> TravelTimeSolver<T> {
    pub fn new(medium: &LayeredMedium<T>, d_t: T) -> Result<Self> {
        if !(d_t > T::zero()) {
            return Err(Error::config("travel-time spacing must be positive"));
        }
        let n = (medium.depth / d_t).round().to_usize().unwrap_or(0);
        if n < 2 {
            return Err(Error::config("travel-time grid too coarse"));
        }
        let at = |i: usize| T::from_usize_lossy(i) * d_t;
        let half = d_t * T::lit(0.5);
        let inv = |z: T| T::one() / z;
        let mass = (0..n)
            .map(|i| {
                let lo = if i == 0 { T::zero() } else { at(i) - half };
                medium.integrate(lo, at(i) + half, inv)
            })
            .collect();
        let conductance = (0..n).map(|i| T::one() / medium.integrate(at(i), at(i + 1), |z| z)).collect();
        Ok(Self { d_t, nodes: n + 1, mass, conductance })
    }

    pub fn positions(&self) -> Vec<T> {
        (0..self.nodes).map(|i| T::from_usize_lossy(i) * self.d_t).collect()
    }

    /// Gershgorin bound on the largest eigenvalue of the spatial operator.
    pub fn spectral_bound(&self) -> T {
        let n = self.mass.len();
        (0..n)
            .map(|i| {
                let left = if i == 0 { T::zero() } else { self.conductance[i - 1] };
                T::lit(2.0) * (left + self.conductance[i]) / self.mass[i]
            })
            .fold(T::zero(), T::max)
    }

    fn apply(&self, p: &[T], out: &mut [T]) {
        let n = self.mass.len();
        let mut flux_left = T::zero();
        for i in 0..n {
            let right = if i + 1 < n { p[i + 1] } else { T::zero() };
            let flux = (right - p[i]) * self.conductance[i];
            out[i] = (flux - flux_left) / self.mass[i];
            flux_left = flux;
        }
        out[n] = T::zero();
    }

    /// `P(jτ, T_i)` for `j = 0..=j_max`, with `dt = τ/K` and `dt ≤ courant · 2/√bound`.
    pub fn snapshots(&self, pulse: &Pulse1d<T>, tau: T, j_max: usize, courant: T) -> Result<Vec<Vec<T>>> {
        if !(tau > T::zero()) {
            return Err(Error::config("sampling interval must be positive"));
        }
        if !(courant > T::zero() && courant <= T::one()) {
            return Err(Error::config("Courant number must lie in (0, 1]"));
        }
        let dt_max = courant * T::lit(2.0) / self.spectral_bound().sqrt();
        let k = (tau / dt_max).ceil().to_usize().unwrap_or(1).max(1);
        let dt = tau / T::from_usize_lossy(k);
        let dt2 = dt * dt;
        let mut cur: Vec<T> = self.positions().iter().map(|&x| pulse.phi(x)).collect();
        cur[self.nodes - 1] = T::zero();
        let mut lap = vec![T::zero(); self.nodes];
        self.apply(&cur, &mut lap);
        // Even start: P^{-1} = P^{1}.
        let mut next: Vec<T> = cur.iter().zip(&lap).map(|(&p, &l)| p + T::lit(0.5) * dt2 * l).collect();
        let mut prev = cur.clone();
        std::mem::swap(&mut cur, &mut next);
        let mut out = Vec::with_capacity(j_max + 1);
        out.push(prev.clone());
        let two = T::lit(2.0);
        for step in 1..=j_max * k {
            if step % k == 0 {
                out.push(cur.clone());
            }
            if step == j_max * k {
                break;
            }
            self.apply(&cur, &mut lap);
            for i in 0..self.nodes {
                next[i] = two * cur[i] - prev[i] + dt2 * lap[i];
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(out)
    }
}

/// Relative residual of a least-squares projection onto a span.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanResidual<T> {
    pub residual: T,
    pub rank: usize,
    /// Some spanning vector was numerically dependent on the others and dropped.
    pub deficient: bool,
}

/// Projects `target` onto `span(basis)` by modified Gram-Schmidt with one
/// reorthogonalization pass.
pub fn project_residual<T: Real>(basis: &[Vec<T>], target: &[T]) -> Result<SpanResidual<T>> {
    if basis.iter().any(|b| b.len() != target.len()) {
        return Err(Error::dim("span vectors and target differ in length"));
    }
    let drop_tol = T::lit(1e-10);
    let mut q: Vec<Vec<T>> = Vec::with_capacity(basis.len());
    let mut deficient = false;
    let orth = |q: &[Vec<T>], w: &mut [T]| {
        for _ in 0..2 {
            for qi in q {
                let a = dot(qi, w);
                for (x, &y) in w.iter_mut().zip(qi) {
                    *x = *x - a * y;
                }
            }
        }
    };
    for b in basis {
        let nb = norm2(b);
        let mut w = b.clone();
        orth(&q, &mut w);
        let nw = norm2(&w);
        if nb == T::zero() || nw <= drop_tol * nb {
            deficient = true;
            continue;
        }
        q.push(w.iter().map(|&x| x / nw).collect());
    }
    let nt = norm2(target);
    let mut r = target.to_vec();
    orth(&q, &mut r);
    let residual = if nt == T::zero() { T::zero() } else { norm2(&r) / nt };
    Ok(SpanResidual { residual, rank: q.len(), deficient })
}

/// Residual of `P(jτ, ·)` against `span{P_o(j'τ, ·), j' ≤ j}` on the nodes
/// `T_i = i d_t` covering the support `[0, jτ + t_f]`. Media with at most one
/// interface use the explicit series; deeper stacks use the finite-difference solver.
pub fn span_residual<T: Real>(
    medium: &LayeredMedium<T>,
    pulse: &Pulse1d<T>,
    tau: T,
    j: usize,
    d_t: T,
) -> Result<SpanResidual<T>> {
    if !(tau > T::zero() && d_t > T::zero()) {
        return Err(Error::config("τ and the sampling step must be positive"));
    }
    let t_j = tau * T::from_usize_lossy(j);
    let reach = (t_j + pulse.t_f).min(medium.depth);
    let count = (reach / d_t).floor().to_usize().unwrap_or(0) + 1;
    let xs: Vec<T> = (0..count).map(|i| T::from_usize_lossy(i) * d_t).collect();
    let basis: Vec<Vec<T>> = (0..=j)
        .map(|jp| {
            let t = tau * T::from_usize_lossy(jp);
            xs.iter().map(|&x| reference_solution(pulse, t, x)).collect()
        })
        .collect();
    let target: Vec<T> = if medium.interfaces.len() <= 1 {
        xs.iter()
            .map(|&x| single_layer_series(medium, pulse, t_j, x, None))
            .collect::<Result<_>>()?
    } else {
        let solver = TravelTimeSolver::new(medium, d_t)?;
        let snaps = solver.snapshots(pulse, tau, j, T::lit(0.5))?;
        snaps[j][..count].to_vec()
    };
    project_residual(&basis, &target)
}

/// Propagating modes of a waveguide of width `D` with sound-soft walls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveguideModes<T> {
    pub d: T,
    pub omega_c: T,
    pub c_bar: T,
    /// `α_j = πj/D`, `j = 1..N`.
    pub alpha: Vec<T>,
    /// `β_j(ω_c) = √(ω_c²/c̄² − α_j²)`.
    pub beta: Vec<T>,
    /// Group speeds `c_{o,j} = c̄ β_j / k_c`.
    pub group_speed: Vec<T>,
}

impl<T: Real> WaveguideModes<T> {
    pub fn count(&self) -> usize {
        self.alpha.len()
    }

    /// `ψ_j(x) = √(2/D) sin(α_j x)`, `j ≥ 1`.
    pub fn profile(&self, j: usize, x: T) -> T {
        mode_profile(self.d, j, x)
    }
}

pub fn mode_profile<T: Real>(d: T, j: usize, x: T) -> T {
    let alpha = T::lit(std::f64::consts::PI) * T::from_usize_lossy(j) / d;
    (T::lit(2.0) / d).sqrt() * (alpha * x).sin()
}

/// Modes with `α_j < k_c`. When `k_c D/π` is an integer the last mode has
/// `β = 0` and is not counted.
pub fn mode_table<T: Real>(d: T, omega_c: T, c_bar: T) -> Result<WaveguideModes<T>> {
    if !(d > T::zero() && omega_c > T::zero() && c_bar > T::zero()) {
        return Err(Error::config("waveguide width, frequency and speed must be positive"));
    }
    let k = omega_c / c_bar;
    let pi = T::lit(std::f64::consts::PI);
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut group_speed = Vec::new();
    let mut j = 1usize;
    loop {
        let a = pi * T::from_usize_lossy(j) / d;
        if a >= k {
            break;
        }
        let b = (k * k - a * a).sqrt();
        alpha.push(a);
        beta.push(b);
        group_speed.push(c_bar * b / k);
        j += 1;
    }
    if alpha.is_empty() {
        return Err(Error::config("waveguide is below cutoff: no propagating modes"));
    }
    Ok(WaveguideModes { d, omega_c, c_bar, alpha, beta, group_speed })
}

/// `Q_{jl} = ∫_a^b ψ_j ψ_l dx` for `j, l = 1..N`.
pub fn mode_coupling<T: Real>(d: T, aperture: (T, T), n: usize) -> Result<Matrix<T>> {
    let (a, b) = aperture;
    if !(d > T::zero()) || a < T::zero() || b > d || !(b >= a) {
        return Err(Error::config("aperture must lie inside (0, D)"));
    }
    let pi = T::lit(std::f64::consts::PI);
    // ∫ sin(px) sin(qx) = ½∫ cos((p−q)x) − cos((p+q)x)
    let int_cos = |w: T| {
        if w == T::zero() {
            b - a
        } else {
            ((w * b).sin() - (w * a).sin()) / w
        }
    };
    let mut q = Matrix::zeros(n, n);
    for j in 0..n {
        for l in j..n {
            let p = pi * T::from_usize_lossy(j + 1) / d;
            let r = pi * T::from_usize_lossy(l + 1) / d;
            let v = (int_cos(p - r) - int_cos(p + r)) / d;
            q[(j, l)] = v;
            q[(l, j)] = v;
        }
    }
    Ok(q)
}

/// Arrival time of one waveguide mode measured in a 2D finite-difference run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeArrival<T> {
    pub mode: usize,
    pub range: T,
    /// Energy centroid of the mode-projected trace.
    pub measured: T,
    /// `z / c_{o,j}`.
    pub predicted: T,
    /// Full width at half maximum of the pulse envelope.
    pub pulse_width: T,
}

impl<T: Real> ModeArrival<T> {
    pub fn error(&self) -> T {
        (self.measured - self.predicted).abs()
    }
}

/// Excites mode `j` with a `ψ_j` line source along the sound-hard top of a
/// homogeneous waveguide (`c̄ = 1`, walls at `x = 0, D`), records the projection
/// onto `ψ_j` at range `z`, and compares the arrival with `z / c_{o,j}`.
pub fn waveguide_mode_arrival<T: Real>(d: T, h: T, j: usize, z: T, pulse: &Pulse<T>) -> Result<ModeArrival<T>> {
    let modes = mode_table(d, pulse.omega_c, T::one())?;
    if j == 0 || j > modes.count() {
        return Err(Error::config(format!("mode {j} is not propagating")));
    }
    let nx = (d / h).round().to_usize().unwrap_or(0).saturating_sub(1);
    if ((T::from_usize_lossy(nx + 1) * h) - d).abs() > T::lit(1e-9) * d {
        return Err(Error::config("waveguide width must be a multiple of the grid spacing"));
    }
    let c_j = modes.group_speed[j - 1];
    let predicted = z / c_j;
    let window = predicted + T::lit(3.0) / pulse.bandwidth;
    // Bottom echoes reach range z no earlier than (2L − z); keep them out of the window.
    let l = (window + z) * T::lit(0.5) + T::lit(2.0);
    let nz = (l / h).ceil().to_usize().unwrap_or(2).max(2);
    let grid = Grid::new(nx, nz, h, h, h * T::lit(0.5))?;
    let medium = Medium::homogeneous(grid, T::one(), Boundary::accessible_top(), T::zero())?;
    let tau = h;
    let sim = Simulator::new(&medium, pulse, tau)?;
    let profile: Vec<T> = (0..nx).map(|i| mode_profile(d, j, grid.x(i))).collect();
    let row = ((z - grid.z0) / h).round().to_usize().unwrap_or(0).min(nz - 1);
    let k_src = sim.pulse.support(Waveform::Full) as i64;
    let k_end = (window / sim.dt).ceil().to_i64().unwrap_or(0);
    let mut trace: Vec<(T, T)> = Vec::new();
    sim.run(
        -k_src,
        k_end,
        |k, scale, next| {
            let s = scale * sim.pulse.source(Waveform::Full, k);
            if s != T::zero() {
                for (w, &p) in next[..nx].iter_mut().zip(&profile) {
                    *w = *w + s * p;
                }
            }
        },
        |k, w| {
            if k >= 0 {
                let v = dot(&w[row * nx..(row + 1) * nx], &profile) * h;
                trace.push((sim.dt * T::from_i64(k).unwrap_or_else(T::zero), v));
            }
        },
    );
    let (num, den) = trace
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(t, v)| (a + t * v * v, b + v * v));
    if !(den > T::zero()) {
        return Err(Error::numerical("no energy reached the receiver range"));
    }
    let pulse_width = T::lit(2.0 * (2.0 * std::f64::consts::LN_2).sqrt()) / pulse.bandwidth;
    Ok(ModeArrival { mode: j, range: grid.z(row), measured: num / den, predicted: grid.z(row) / c_j, pulse_width })
}
