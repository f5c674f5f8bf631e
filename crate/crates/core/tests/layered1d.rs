mod common;

use proptest::prelude::*;
use romimaging::layered1d::{
    mode_coupling, mode_table, reference_solution, reflection_transmission, span_residual, waveguide_mode_arrival,
    LayeredMedium, Pulse1d, TravelTimeSolver,
};
use romimaging::linalg::{symmetric_eigen, Matrix};
use romimaging::pulse::Pulse;
use romimaging::verify::{goupillaud_residual, series_vs_fd};

const OMEGA_C: f64 = 2.0 * std::f64::consts::PI;

proptest! {
    #[test]
    fn reflection_and_transmission_conserve_energy(a in 0.01f64..100.0, b in 0.01f64..100.0) {
        let (r, t) = reflection_transmission(a, b).unwrap();
        prop_assert!((r * r + t * t - 1.0).abs() < 1e-14);
        let (r2, t2) = reflection_transmission(b, a).unwrap();
        prop_assert!((r + r2).abs() < 1e-15);
        prop_assert!((t - t2).abs() < 1e-15);
    }
}

#[test]
fn goupillaud_medium_stays_in_the_reference_span() {
    let res = goupillaud_residual().unwrap();
    assert!(res < 1e-8, "{res:e}");
}

#[test]
fn off_lattice_interface_leaves_a_residual() {
    let pulse = Pulse1d::new(OMEGA_C, 0.5).unwrap();
    let medium = LayeredMedium::single_interface(1.0, 3.0, 2.625, 20.0).unwrap();
    let r = span_residual(&medium, &pulse, 0.5, 10, 1.0 / 200.0).unwrap();
    assert!(r.residual > 1e-2, "{:?}", r);
}

#[test]
fn residual_shrinks_with_finer_sampling() {
    let pulse = Pulse1d::new(OMEGA_C, 0.5).unwrap();
    let t0 = 31.0 / 6.0 * 0.5;
    let medium = LayeredMedium::single_interface(1.0, 3.0, t0, 20.0).unwrap();
    let residuals: Vec<f64> = [0.25, 0.125, 0.0625]
        .iter()
        .map(|&tau| {
            let j = (8.0 / tau) as usize;
            span_residual(&medium, &pulse, tau, j, 1.0 / 400.0).unwrap().residual
        })
        .collect();
    assert!(residuals[0] > residuals[1] && residuals[1] > residuals[2], "{residuals:?}");
}

#[test]
fn series_matches_finite_differences() {
    let err = series_vs_fd(1.0 / 320.0).unwrap();
    assert!(err < 1e-2, "{err}");
}

#[test]
fn transparent_stack_propagates_like_the_reference() {
    let pulse = Pulse1d::new(OMEGA_C, 0.5).unwrap();
    let medium = LayeredMedium::new(vec![2.0, 2.0, 2.0], vec![1.0, 2.0], 8.0).unwrap();
    let d_t = 1.0 / 320.0;
    let solver = TravelTimeSolver::new(&medium, d_t).unwrap();
    let snaps = solver.snapshots(&pulse, 0.5, 8, 0.5).unwrap();
    let xs = solver.positions();
    let exact: Vec<f64> = xs.iter().map(|&x| reference_solution(&pulse, 4.0, x)).collect();
    assert!(common::rel_l2(&snaps[8], &exact) < 1e-2);
}

#[test]
fn first_two_modes_arrive_on_time() {
    let pulse = Pulse::standard(OMEGA_C).unwrap();
    for j in [1, 2] {
        let a = waveguide_mode_arrival(2.25, 1.0 / 16.0, j, 8.0, &pulse).unwrap();
        assert!(a.error() < a.pulse_width, "{a:?}");
        assert!(a.measured > 8.0, "modes travel slower than the medium");
    }
    assert!(waveguide_mode_arrival(2.25, 1.0 / 16.0, 9, 8.0, &pulse).is_err());
}

#[test]
fn mode_coupling_becomes_invertible_with_aperture() {
    let d = 2.25;
    let n = mode_table(d, OMEGA_C, 1.0).unwrap().count();
    assert_eq!(n, 4);
    let full = mode_coupling(d, (0.0, d), n).unwrap();
    assert!(full.sub(&Matrix::identity(n)).max_abs() < 1e-12);
    let smallest: Vec<f64> = [0.2, 0.4, 0.6, 0.8, 1.0]
        .iter()
        .map(|f| symmetric_eigen(&mode_coupling(d, (0.0, f * d), n).unwrap()).unwrap().values[0])
        .collect();
    assert!(smallest.windows(2).all(|w| w[1] > w[0]), "{smallest:?}");
}
