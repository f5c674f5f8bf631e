use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::solver::ShotRecord;

/// Adds i.i.d. `N(0, σ²)` samples to every recorded trace value, with
/// `σ = fraction · max |w^{(s)}(jτ, x_r)|` over `j ≥ 0`.
pub fn add_noise<T: Real>(records: &[ShotRecord<T>], fraction: T, seed: u64) -> Result<Vec<ShotRecord<T>>> {
    if !(fraction >= T::zero()) {
        return Err(Error::config("noise fraction must be non-negative"));
    }
    if fraction == T::zero() {
        return Ok(records.to_vec());
    }
    let peak = records
        .iter()
        .flat_map(|rec| (rec.j_neg..rec.traces.rows()).flat_map(move |row| rec.traces.row(row).iter()))
        .fold(T::zero(), |a, &v| a.max(v.abs()));
    let sigma = (fraction * peak).f64();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = records.to_vec();
    for rec in out.iter_mut() {
        for v in rec.traces.as_mut_slice() {
            *v = *v + T::lit(normal.sample(&mut rng));
        }
    }
    Ok(out)
}
