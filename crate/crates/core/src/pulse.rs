//! Probing pulse, its spectral square root, and the sampled source series
//! fed to the leapfrog solver.
//!
//! The solver is driven by `s^k`, an odd series in the step index. For such a
//! source the even extension of the discrete wave is exactly
//! `w^k + w^{-k} = cos(k θ) F(θ) δ` with `cos θ = 1 − dt² λ / 2`, where `F`
//! is the discrete transfer function of `s`. The full-pulse series is built so
//! that its transfer function is the exact square of the half-pulse one; data
//! and snapshots then agree to round-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gaussian envelope level at which the half pulse is truncated.
const TRUNCATION: f64 = 1e-12;

/// `f(t) = a (√(2π)/2) exp(−t² B²/2) cos(ω_c t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse<T> {
    pub omega_c: T,
    pub bandwidth: T,
    pub amplitude: T,
    /// Half-width of the effective support of `f`.
    pub t_f: T,
}

impl<T: Real> Pulse<T> {
    pub fn new(omega_c: T, bandwidth: T) -> Result<Self> {
        if !(omega_c > T::zero() && bandwidth > T::zero()) {
            return Err(Error::config("pulse frequency and bandwidth must be positive"));
        }
        // exp(−t_h² B²) = TRUNCATION at the half-pulse cutoff t_h = t_f / 2
        let t_h = T::lit((-TRUNCATION.ln()).sqrt()) / bandwidth;
        Ok(Self { omega_c, bandwidth, amplitude: T::one(), t_f: t_h + t_h })
    }

    /// `B = ω_c / 4`.
    pub fn standard(omega_c: T) -> Result<Self> {
        Self::new(omega_c, omega_c * T::lit(0.25))
    }

    pub fn with_amplitude(mut self, amplitude: T) -> Result<Self> {
        if amplitude < T::zero() {
            return Err(Error::config("pulse amplitude must be non-negative"));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    pub fn wavelength(&self, c: T) -> T {
        T::lit(2.0 * std::f64::consts::PI) * c / self.omega_c
    }

    pub fn half_support(&self) -> T {
        self.t_f * T::lit(0.5)
    }

    pub fn value(&self, t: T) -> T {
        let b = self.bandwidth;
        self.amplitude
            * T::lit((2.0 * std::f64::consts::PI).sqrt() / 2.0)
            * (-(t * t * b * b) * T::lit(0.5)).exp()
            * (self.omega_c * t).cos()
    }

    pub fn derivative(&self, t: T) -> T {
        let b = self.bandwidth;
        let env = (-(t * t * b * b) * T::lit(0.5)).exp();
        let w = self.omega_c;
        -self.amplitude
            * T::lit((2.0 * std::f64::consts::PI).sqrt() / 2.0)
            * env
            * (b * b * t * (w * t).cos() + w * (w * t).sin())
    }

    /// `f̂(ω) = ∫ f(t) e^{iωt} dt ≥ 0`.
    pub fn spectrum(&self, omega: T) -> T {
        let b = self.bandwidth;
        let two_b2 = T::lit(2.0) * b * b;
        let lobe = |d: T| (-(d * d) / two_b2).exp();
        self.amplitude
            * T::lit(std::f64::consts::PI)
            / (T::lit(2.0) * b)
            * (lobe(omega - self.omega_c) + lobe(omega + self.omega_c))
    }

    pub fn half_spectrum(&self, omega: T) -> T {
        self.spectrum(omega).sqrt()
    }

    /// Quadrature nodes for the inverse transform of `√f̂` (trapezoid on the
    /// even extension to the whole line, which is spectrally accurate).
    fn nodes(&self) -> (T, usize) {
        let b = self.bandwidth;
        let d_omega = b * T::lit(0.02);
        let top = self.omega_c + b * T::lit(14.0);
        let count = (top / d_omega).ceil().to_usize().unwrap_or(1);
        (d_omega, count)
    }

    /// `f̌^{1/2}(t) = (1/π) ∫_0^∞ √f̂(ω) cos(ωt) dω`.
    pub fn half_pulse(&self, t: T) -> T {
        let (dw, count) = self.nodes();
        let mut acc = self.half_spectrum(T::zero()) * T::lit(0.5);
        for i in 1..=count {
            let w = dw * T::from_usize_lossy(i);
            acc = acc + self.half_spectrum(w) * (w * t).cos();
        }
        acc * dw / T::lit(std::f64::consts::PI)
    }

    pub fn half_pulse_derivative(&self, t: T) -> T {
        let (dw, count) = self.nodes();
        let mut acc = T::zero();
        for i in 1..=count {
            let w = dw * T::from_usize_lossy(i);
            acc = acc + w * self.half_spectrum(w) * (w * t).sin();
        }
        -acc * dw / T::lit(std::f64::consts::PI)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    /// Source `f'(t)`: generates the array data.
    Full,
    /// Source `(f̌^{1/2})'(t)`: generates the snapshots.
    Half,
}

/// Source series sampled at the solver step, stored for `k ≥ 0` (entry 0 is zero).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePulse<T> {
    pub dt: T,
    half: Vec<T>,
    full: Vec<T>,
}

impl<T: Real> DiscretePulse<T> {
    pub fn new(pulse: &Pulse<T>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::config("time step must be positive"));
        }
        let kh = (pulse.half_support() / dt).ceil().to_usize().unwrap_or(0).max(1);
        let mut half = vec![T::zero(); kh + 1];
        for (k, s) in half.iter_mut().enumerate().skip(1) {
            *s = pulse.half_pulse_derivative(dt * T::from_usize_lossy(k));
        }
        let full = square_series(&half, dt);
        Ok(Self { dt, half, full })
    }

    pub fn samples(&self, w: Waveform) -> &[T] {
        match w {
            Waveform::Full => &self.full,
            Waveform::Half => &self.half,
        }
    }

    /// Last step index with a (potentially) nonzero source value.
    pub fn support(&self, w: Waveform) -> usize {
        self.samples(w).len() - 1
    }

    /// Odd extension: `s^{-k} = −s^k`.
    #[inline]
    pub fn source(&self, w: Waveform, k: i64) -> T {
        let s = self.samples(w);
        let a = k.unsigned_abs() as usize;
        if a >= s.len() {
            T::zero()
        } else if k < 0 {
            -s[a]
        } else {
            s[a]
        }
    }

    /// Transfer function at operator eigenvalue `λ`:
    /// `F = −2 dt² Σ_{k≥1} s^k U_{k−1}(1 − dt² λ/2)`.
    pub fn transfer(&self, w: Waveform, lambda: T) -> T {
        let x = T::one() - self.dt * self.dt * lambda * T::lit(0.5);
        let s = self.samples(w);
        let two_x = x + x;
        let (mut u_prev, mut u) = (T::zero(), T::one());
        let mut acc = T::zero();
        for &sk in s.iter().skip(1) {
            acc = acc + sk * u;
            let next = two_x * u - u_prev;
            u_prev = u;
            u = next;
        }
        -T::lit(2.0) * self.dt * self.dt * acc
    }

    /// `cos(k θ)` for `cos θ = 1 − dt² λ/2`, the discrete propagator over `k` steps.
    pub fn propagator(&self, lambda: T, k: usize) -> T {
        let x = T::one() - self.dt * self.dt * lambda * T::lit(0.5);
        let x = x.max(-T::one()).min(T::one());
        (T::from_usize_lossy(k) * x.acos()).cos()
    }
}

/// Series whose transfer function is the square of that of `half`.
fn square_series<T: Real>(half: &[T], dt: T) -> Vec<T> {
    let kh = half.len() - 1;
    let two_dt2 = T::lit(2.0) * dt * dt;
    let a: Vec<T> = half.iter().map(|&s| -two_dt2 * s).collect();
    // U_p U_q = Σ_{i=0}^{min(p,q)} U_{|p−q|+2i}
    let mut b = vec![T::zero(); 2 * kh - 1];
    for p in 0..kh {
        for q in 0..kh {
            let c = a[p + 1] * a[q + 1];
            let lo = p.abs_diff(q);
            for i in 0..=p.min(q) {
                b[lo + 2 * i] = b[lo + 2 * i] + c;
            }
        }
    }
    let mut full = vec![T::zero(); 2 * kh];
    for (n, &bn) in b.iter().enumerate() {
        full[n + 1] = -bn / two_dt2;
    }
    full
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pulse() -> Pulse<f64> {
        Pulse::standard(2.0 * PI).unwrap()
    }

    #[test]
    fn half_pulse_convolves_to_full_pulse() {
        let p = pulse();
        let dt = 0.01;
        let n = (p.t_f / dt) as i64;
        for &t in &[0.0, 0.3, 1.1] {
            let mut conv = 0.0;
            for k in -n..=n {
                let s = k as f64 * dt;
                conv += p.half_pulse(s) * p.half_pulse(t - s) * dt;
            }
            assert!((conv - p.value(t)).abs() < 1e-8, "t={t}: {conv} vs {}", p.value(t));
        }
    }

    #[test]
    fn spectrum_is_transform_of_value() {
        let p = pulse();
        let dt = 0.005;
        let n = (p.t_f / dt) as i64;
        for &w in &[0.0, 3.0, 2.0 * PI, 9.0] {
            let s: f64 = (-n..=n).map(|k| p.value(k as f64 * dt) * (w * k as f64 * dt).cos() * dt).sum();
            assert!((s - p.spectrum(w)).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = pulse();
        let e = 1e-6;
        for &t in &[-0.7, 0.1, 0.45] {
            let fd = (p.value(t + e) - p.value(t - e)) / (2.0 * e);
            assert!((fd - p.derivative(t)).abs() < 1e-6);
            let fdh = (p.half_pulse(t + e) - p.half_pulse(t - e)) / (2.0 * e);
            assert!((fdh - p.half_pulse_derivative(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn truncation_level_of_half_pulse() {
        let p = pulse();
        let peak = p.half_pulse(0.0);
        // √f̂ has branch points near the real axis, so the tail decays only
        // exponentially; the Gaussian part is gone long before the cutoff
        let tail = p.half_pulse(p.half_support()).abs();
        assert!(tail < 1e-3 * peak, "{tail} {peak}");
        assert!(p.value(p.t_f).abs() < 1e-20);
    }

    #[test]
    fn full_series_is_exact_square() {
        let p = pulse();
        let dp = DiscretePulse::new(&p, 0.04).unwrap();
        for &lam in &[0.0, 5.0, 39.0, 120.0, 900.0] {
            let h = dp.transfer(Waveform::Half, lam);
            let f = dp.transfer(Waveform::Full, lam);
            assert!((f - h * h).abs() < 1e-12 * (1.0 + f.abs()), "λ={lam}");
        }
    }

    #[test]
    fn discrete_full_source_approximates_derivative() {
        let p = pulse();
        let dt = 0.005;
        let dp = DiscretePulse::new(&p, dt).unwrap();
        let peak = (0..200).map(|k| p.derivative(k as f64 * dt).abs()).fold(0.0, f64::max);
        for k in 1..dp.support(Waveform::Full) {
            let err = (dp.source(Waveform::Full, k as i64) - p.derivative(k as f64 * dt)).abs();
            assert!(err < 5e-3 * peak, "k={k}");
        }
        assert_eq!(dp.source(Waveform::Full, -3), -dp.source(Waveform::Full, 3));
    }

    #[test]
    fn transfer_approximates_spectrum() {
        let p = pulse();
        let dp = DiscretePulse::new(&p, 0.005).unwrap();
        let peak = p.spectrum(p.omega_c);
        for &w in &[1.0, 5.0, 2.0 * PI, 8.0] {
            let got = dp.transfer(Waveform::Full, w * w);
            assert!((got - p.spectrum(w)).abs() < 2e-3 * peak);
        }
    }
}
