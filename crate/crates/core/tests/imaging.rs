mod common;

use romimaging::grid::ImagingGrid;
use romimaging::imaging::{
    gamma_by_superposition, image_backprojection, image_norm, image_pixel_scan, image_rtm, impulse_responses,
    local_maxima, pixel_scan, range_derivative, Image, ImageKind, ImageParams,
};
use romimaging::internal::{build_reference_basis, SnapshotBasis};
use romimaging::rom::Rom;
use romimaging::scenario::Scenario;
use romimaging::solver::{simulate_data, DataTensor, Simulator};

struct Setup {
    sc: Scenario<f64>,
    data: DataTensor<f64>,
    basis: SnapshotBasis<f64>,
    rom_ref: Rom<f64>,
}

fn setup(grid: Option<ImagingGrid<f64>>) -> Setup {
    let sc = common::small();
    let reference = sc.reference();
    let grid = grid.unwrap_or(sc.image_grid);
    let (basis, rom_ref) = build_reference_basis(&reference, &sc.array, &sc.pulse, sc.tau, sc.n, grid, None).unwrap();
    let data = simulate_data(&sc.medium, &sc.array, &sc.pulse, sc.tau, sc.n).unwrap();
    Setup { sc, data, basis, rom_ref }
}

#[test]
fn images_scale_with_the_data() {
    let s = setup(Some(ImagingGrid::covering(common::small().medium.grid, (2.0, 4.0), (1.0, 2.5), 0.25).unwrap()));
    let p = ImageParams::default();
    let alpha = 3.7;
    let rom1 = Rom::build(&s.data, s.sc.n, None, false).unwrap();
    let roma = Rom::build(&s.data.scale(alpha), s.sc.n, None, false).unwrap();
    let n1 = image_norm(rom1.r(), &s.basis, p.clone()).unwrap();
    let na = image_norm(roma.r(), &s.basis, p.clone()).unwrap();
    let b1 = image_backprojection(&rom1.propagator, &s.rom_ref.propagator, &s.basis, p.clone()).unwrap();
    let ba = image_backprojection(&roma.propagator, &s.rom_ref.propagator, &s.basis, p).unwrap();
    let exponent = |a: &[f64], b: &[f64]| {
        let (num, den) = a.iter().zip(b).fold((0.0, 0.0), |(x, y), (u, v)| (x + u.abs(), y + v.abs()));
        (num / den).ln() / alpha.ln()
    };
    let e_norm = exponent(&na.values, &n1.values);
    let e_bp = exponent(&ba.values, &b1.values);
    assert!((e_norm - 1.0).abs() < 1e-8, "norm exponent {e_norm}");
    assert!(e_bp.abs() < 1e-8, "backprojection exponent {e_bp}");
    let y = (3.0, 1.5);
    let ps1 = pixel_scan(rom1.r(), &s.basis, &s.sc.medium, &s.sc.array, &s.sc.pulse, s.sc.tau, y, None).unwrap();
    let psa = pixel_scan(roma.r(), &s.basis, &s.sc.medium, &s.sc.array, &s.sc.pulse, s.sc.tau, y, None).unwrap();
    let e_ps = (psa.value / ps1.value).ln() / alpha.ln();
    assert!((e_ps - 1.0).abs() < 1e-8, "pixel-scan exponent {e_ps}");
}

#[test]
fn pixel_scan_focuses_and_superposes() {
    let s = setup(None);
    let rom = Rom::build(&s.data, s.sc.n, None, false).unwrap();
    let y = (3.0, 1.75);
    let focus = ImagingGrid::covering(s.sc.medium.grid, (0.5, 5.5), (0.25, 3.5), 0.125).unwrap();
    let res = pixel_scan(rom.r(), &s.basis, &s.sc.medium, &s.sc.array, &s.sc.pulse, s.sc.tau, y, Some(&focus)).unwrap();
    let field = res.focus.as_ref().unwrap();
    let (p, _) = field.iter().enumerate().fold((0, 0.0f64), |acc, (i, &v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
    let (fx, fz) = focus.coords(p);
    let miss = ((fx - y.0).powi(2) + (fz - y.1).powi(2)).sqrt();
    assert!(miss < 1.0, "focus at ({fx}, {fz})");

    let sim = Simulator::new(&s.sc.medium, &s.sc.pulse, s.sc.tau).unwrap();
    let kk = sim.steps_per_sample;
    let samples = res.gamma.rows();
    let responses = impulse_responses(&sim, &s.sc.array, (samples - 1) * kk + 2);
    let sup = gamma_by_superposition(&res.sources, &responses, kk, samples);
    let rel = common::rel_l2(sup.as_slice(), res.gamma.as_slice());
    assert!(rel < 0.02, "superposition {rel}");
}

#[test]
fn pixel_scan_budget_is_enforced() {
    let s = setup(None);
    let rom = Rom::build(&s.data, s.sc.n, None, false).unwrap();
    let err = image_pixel_scan(rom.r(), &s.basis, &s.sc.medium, &s.sc.array, &s.sc.pulse, s.sc.tau, &s.sc.image_grid, 10, ImageParams::default());
    assert!(err.is_err());
}

#[test]
fn rtm_of_reference_subtracted_data_sees_the_reflector() {
    // long enough for the echo to be recorded in full
    let sc = common::small_spec();
    let sc: Scenario<f64> = romimaging::scenario::ScenarioSpec { n: 20, ..sc }.build().unwrap();
    let reference = sc.reference();
    let data = simulate_data(&sc.medium, &sc.array, &sc.pulse, sc.tau, sc.n).unwrap();
    let data_ref = simulate_data(&reference, &sc.array, &sc.pulse, sc.tau, sc.n).unwrap();
    let diff = data.sub(&data_ref).unwrap();
    let img = image_rtm(&diff, &reference, &sc.array, &sc.pulse, &sc.image_grid, ImageParams::default()).unwrap();
    assert_eq!(img.kind, ImageKind::Rtm);
    assert!((img.max_abs() - 1.0).abs() < 1e-12);
    let profile = img.range_profile((2.5, 3.5));
    let best = profile.iter().fold((0.0, 0.0), |a: (f64, f64), b| if b.1 > a.1 { *b } else { a });
    assert!((best.0 - 1.75).abs() < 0.5, "RTM peak at {}", best.0);
}

#[test]
fn norm_image_range_derivative_finds_the_reflector() {
    let s = setup(None);
    let rom = Rom::build(&s.data, s.sc.n, None, false).unwrap();
    let img = image_norm(rom.r(), &s.basis, ImageParams::default()).unwrap();
    let rd = range_derivative(&img, 0.05).unwrap();
    assert_eq!(rd.kind, ImageKind::RangeDerivative);
    let profile = rd.range_profile((2.5, 3.5));
    let top = profile.iter().fold(0.0f64, |a, b| a.max(b.1));
    let peaks: Vec<f64> = local_maxima(&profile).into_iter().filter(|p| p.1 > 0.5 * top).map(|p| p.0).collect();
    assert!(peaks.iter().any(|z| (z - 1.75).abs() < 1.0), "{peaks:?}");
}

#[test]
fn range_derivative_of_a_ramp_is_constant() {
    let grid = ImagingGrid::full(common::small().medium.grid);
    let values: Vec<f64> = (0..grid.len()).map(|p| 2.0 * grid.coords(p).1).collect();
    let img = Image::new(grid, values, ImageKind::Norm, ImageParams::default()).unwrap();
    let rd = range_derivative(&img, 0.1).unwrap();
    let mid = rd.at(10, grid.nk / 2);
    assert!((mid - 2.0).abs() < 1e-9, "{mid}");
    assert!(range_derivative(&img, 0.0).is_err());
}
