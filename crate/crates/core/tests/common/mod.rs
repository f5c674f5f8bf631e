#![allow(dead_code)]

use romimaging::scenario::{Reflector, Scenario, ScenarioSpec};

/// A 6 × 4 wavelength box with one slow horizontal reflector, small enough
/// to simulate in well under a second.
pub fn small_spec() -> ScenarioSpec {
    ScenarioSpec {
        name: "small".into(),
        width: 6.0,
        depth: 4.0,
        h: 0.125,
        reflectors: vec![Reflector { from: [2.0, 1.75], to: [4.0, 1.75], speed: 0.6, thickness: 0.25 }],
        m: 6,
        aperture: 4.0,
        array_start: 1.0,
        aperture_fraction: 1.0,
        tau_factor: 0.4,
        n: 10,
        bandwidth_factor: 0.25,
        strip: 0.25,
        image_x: [0.5, 5.5],
        image_z: [0.5, 3.5],
        image_spacing: 0.125,
    }
}

pub fn small() -> Scenario<f64> {
    small_spec().build().unwrap()
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
