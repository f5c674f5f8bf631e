//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use romimaging::grid::ImagingGrid;
use romimaging::imaging::{
    gamma_by_superposition, image_backprojection, image_norm, image_rtm, impulse_responses, local_maxima,
    peak_to_sidelobe, pixel_scan, range_derivative, ImageParams,
};
use romimaging::internal::{build_reference_basis, rom_psf_from_snapshots, SnapshotBasis};
use romimaging::layered1d::{mode_coupling, waveguide_mode_arrival};
use romimaging::linalg::{symmetric_eigen, Matrix};
use romimaging::pulse::Pulse;
use romimaging::rom::{add_noise, block_cholesky, BlockMatrix, Rom, Structure};
use romimaging::scenario::{PresetName, ScenarioSpec, OMEGA_C};
use romimaging::solver::{compute_data_tensor, simulate_data, simulate_records, simulate_snapshots, Simulator};
use romimaging::verify::{
    energy_balance, goupillaud_residual, prop1_deviation, quadrature_deviation, reference_null_deviation,
    series_vs_fd, OracleSetup,
};

/// Mesh of the waveguide runs.
const WAVEGUIDE_H: f64 = 1.0 / 16.0;
/// Test point between the two horizontal reflectors.
const PSF_POINT: (f64, f64) = (16.0, 3.125);
/// Lateral window over the horizontal reflectors for range profiles.
const RANGE_WINDOW: (f64, f64) = (11.0, 21.0);
/// Ranges of the horizontal reflectors inside the window.
const REFLECTOR_RANGES: [f64; 2] = [2.5, 3.75];
/// Noise realizations in the robustness check.
const NOISE_SEEDS: u64 = 8;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, passed: bool, detail: String) {
        if !passed {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    }

    fn err(&mut self, name: &str, e: impl std::fmt::Display) {
        self.line(name, false, format!("error: {e}"));
    }
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn oracle(rep: &mut Report) -> Res<()> {
    let setup = OracleSetup::default();
    let t = Instant::now();
    let truth = setup.run(setup.medium(true)?)?;
    let reference = setup.run(setup.medium(false)?)?;
    let p1 = prop1_deviation(&setup, &truth, &reference)?;
    let secs = t.elapsed().as_secs_f64();
    rep.line(
        "prop1_exactness",
        p1 < 1e-10 && secs < 60.0,
        format!("{}x{} grid, {} points, max rel error {p1:.2e} < 1e-10, {secs:.1} s", setup.nx, setup.nz, setup.points),
    );
    let t = Instant::now();
    let (dm, ds) = quadrature_deviation(&setup, &truth)?;
    let secs = t.elapsed().as_secs_f64();
    rep.line(
        "mass_stiffness_quadrature",
        dm < 1e-10 && ds < 1e-10 && secs < 60.0,
        format!("M {dm:.2e}, S {ds:.2e} < 1e-10"),
    );
    let (bp, wave, img) = reference_null_deviation(&setup, &reference)?;
    rep.line(
        "reference_null",
        bp < 1e-8 && wave < 1e-8 && img < 1e-8,
        format!("BP {bp:.2e}, internal wave {wave:.2e}, I vs ideal {img:.2e} < 1e-8"),
    );
    Ok(())
}

fn random_spd(n: usize, m: usize, rng: &mut ChaCha8Rng) -> BlockMatrix<f64> {
    let k = n * m;
    let a = Matrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    let mut spd = a.tmatmul(&a);
    for i in 0..k {
        spd[(i, i)] += 0.1;
    }
    spd.symmetrize();
    BlockMatrix::new(n, m, Structure::Spd, spd).unwrap()
}

fn cholesky(rep: &mut Report) -> Res<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut pattern_ok = true;
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=8);
        let mass = random_spd(n, m, &mut rng);
        let r = block_cholesky(&mass)?;
        pattern_ok &= r.is_block_upper();
        let err = r.mat.tmatmul(&r.mat).sub(&mass.mat).frobenius() / mass.mat.frobenius();
        worst = worst.max(err);
    }
    rep.line(
        "block_cholesky",
        worst < 1e-12 && pattern_ok,
        format!("100 matrices, worst rel error {worst:.2e} < 1e-12, zero pattern exact: {pattern_ok}"),
    );
    Ok(())
}

fn strongest(profile: &[(f64, f64)], k: usize) -> Vec<(f64, f64)> {
    let mut lm = local_maxima(profile);
    lm.sort_by(|a, b| b.1.total_cmp(&a.1));
    lm.truncate(k);
    lm
}

fn far_from_reflectors(z: f64, gap: f64) -> bool {
    REFLECTOR_RANGES.iter().all(|r| (z - r).abs() > gap)
}

fn waveguide(rep: &mut Report) -> Res<()> {
    let t = Instant::now();
    let spec = ScenarioSpec { h: WAVEGUIDE_H, ..ScenarioSpec::preset(PresetName::Waveguide) };
    let sc = spec.build::<f64>()?;
    let reference = sc.reference();
    let grid = sc.image_grid;
    let pts = grid.solver_indices();
    let data = simulate_data(&sc.medium, &sc.array, &sc.pulse, sc.tau, sc.n)?;
    let data_ref = simulate_data(&reference, &sc.array, &sc.pulse, sc.tau, sc.n)?;
    let snaps = simulate_snapshots(&sc.medium, &sc.array, &sc.pulse, sc.tau, sc.n, &pts)?;
    let snaps_ref = simulate_snapshots(&reference, &sc.array, &sc.pulse, sc.tau, sc.n, &pts)?;
    let all: Vec<usize> = (0..sc.array.m()).collect();

    let psf_ratio = |stride: usize, n: usize, keep: &[usize]| -> Res<f64> {
        let d = data.subsample(stride).restrict(keep);
        let d_ref = data_ref.subsample(stride).restrict(keep);
        let rom = Rom::build(&d, n, None, false)?;
        let rom_ref = Rom::build(&d_ref, n, None, false)?;
        let basis = SnapshotBasis::from_snapshots(grid, &snaps_ref.select(stride, n, keep)?, &rom_ref.factor)?;
        let psf = rom_psf_from_snapshots(&snaps.select(stride, n, keep)?, &rom.factor, &basis, PSF_POINT)?;
        Ok(peak_to_sidelobe(&psf, &grid, PSF_POINT, 0.5, 1.0))
    };

    // range-derivative image and RTM at full aperture
    let rom = Rom::build(&data, sc.n, None, false)?;
    let rom_ref = Rom::build(&data_ref, sc.n, None, false)?;
    let basis = SnapshotBasis::from_snapshots(grid, &snaps_ref, &rom_ref.factor)?;
    let img = image_norm(rom.r(), &basis, ImageParams::default())?;
    let rd = range_derivative(&img, 0.05)?;
    let rd_profile = rd.range_profile(RANGE_WINDOW);
    let top2 = strongest(&rd_profile, 2);
    let mut ranges: Vec<f64> = top2.iter().map(|p| p.0).collect();
    ranges.sort_by(f64::total_cmp);
    let located = ranges.len() == 2
        && ranges.iter().zip(REFLECTOR_RANGES).all(|(z, r)| (z - r).abs() < 1.0)
        && ranges[1] - ranges[0] >= 0.5;
    rep.line(
        "waveguide_range_derivative_maxima",
        located,
        format!("two strongest maxima at z = {ranges:.3?}, reflectors at {REFLECTOR_RANGES:?}, tolerance 1"),
    );

    let rtm = image_rtm(&data.sub(&data_ref)?, &reference, &sc.array, &sc.pulse, &grid, ImageParams::default())?;
    let rtm_profile = rtm.range_profile(RANGE_WINDOW);
    let rd_max = rd.max_abs();
    let ghosts: Vec<(f64, f64, f64)> = local_maxima(&rtm_profile)
        .into_iter()
        .filter(|p| p.1 >= 0.05 && far_from_reflectors(p.0, 0.5))
        .filter_map(|p| {
            let i = rd_profile.iter().position(|q| q.0 == p.0)?;
            let level = rd_profile[i].1 / rd_max;
            (level <= 0.2).then_some((p.0, p.1, level))
        })
        .collect();
    let detail = match ghosts.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
        Some((z, a, l)) => format!("{} RTM ghost maxima, strongest at z = {z:.3} (RTM {a:.3}, I {l:.3} of max)", ghosts.len()),
        None => "no RTM maximum away from the reflectors with I below 20%".into(),
    };
    rep.line("waveguide_rtm_ghost", !ghosts.is_empty(), detail);

    let kept = |f: f64| ScenarioSpec { aperture_fraction: f, ..spec.clone() }.kept_sensors();
    let r40 = psf_ratio(1, sc.n, &kept(0.4))?;
    let r60 = psf_ratio(1, sc.n, &kept(0.6))?;
    let r100 = psf_ratio(1, sc.n, &all)?;
    rep.line(
        "psf_aperture_monotone",
        r40 < r60 && r60 < r100,
        format!("peak-to-sidelobe 40%: {r40:.3}, 60%: {r60:.3}, 100%: {r100:.3}"),
    );
    let r_tau3 = psf_ratio(3, sc.n / 3, &all)?;
    rep.line(
        "psf_tau_degradation",
        r_tau3 < r100,
        format!("peak-to-sidelobe at 3τ: {r_tau3:.3}, at τ: {r100:.3}; waveguide block {:.0} s", t.elapsed().as_secs_f64()),
    );
    Ok(())
}

/// Range of the strongest interior maximum, and the largest maximum within
/// λ/2 of the top reflector over the largest maximum farther than λ/2 from both.
fn localization(profile: &[(f64, f64)]) -> (f64, f64) {
    let lm = local_maxima(profile);
    let best = lm.iter().fold((f64::NAN, 0.0f64), |a, b| if b.1 > a.1 { *b } else { a });
    let top = lm.iter().filter(|p| (p.0 - REFLECTOR_RANGES[0]).abs() <= 0.5).fold(0.0f64, |a, b| a.max(b.1));
    let spurious = lm.iter().filter(|p| far_from_reflectors(p.0, 0.5)).fold(0.0f64, |a, b| a.max(b.1));
    (best.0, top / spurious)
}

fn noise(rep: &mut Report) -> Res<()> {
    let t = Instant::now();
    let base = ScenarioSpec::preset(PresetName::Waveguide);
    let tau_factor = 0.67;
    let n = (base.n as f64 * base.tau_factor / tau_factor).round() as usize;
    let spec = ScenarioSpec { h: 1.0 / 8.0, tau_factor, n, ..base };
    let sc = spec.build::<f64>()?;
    let records = simulate_records(&Simulator::new(&sc.medium, &sc.pulse, sc.tau)?, &sc.array, sc.n)?;
    let (basis, rom_ref) = build_reference_basis(&sc.reference(), &sc.array, &sc.pulse, sc.tau, sc.n, sc.image_grid, None)?;
    let seeds = 1..=NOISE_SEEDS;
    let mut clamp_dev = 0.0f64;
    let (mut hits_norm, mut hits_bp) = (0, 0);
    let (mut q_norm, mut q_bp) = (0.0, 0.0);
    for seed in seeds {
        let data = compute_data_tensor(&add_noise(&records, 0.2, seed)?, sc.n)?;
        let rom = Rom::build(&data, sc.n, None, true)?;
        let min_eig = symmetric_eigen(&rom.mass.mat)?.values[0];
        clamp_dev = clamp_dev.max(((min_eig - rom.lambda_min) / rom.lambda_min).abs());
        let rd = range_derivative(&image_norm(rom.r(), &basis, ImageParams::default())?, 0.05)?;
        let (z, q) = localization(&rd.range_profile(RANGE_WINDOW));
        hits_norm += usize::from((z - REFLECTOR_RANGES[0]).abs() < 1.0);
        q_norm += q / NOISE_SEEDS as f64;
        let bp = image_backprojection(&rom.propagator, &rom_ref.propagator, &basis, ImageParams::default())?;
        let (z, q) = localization(&bp.range_profile(RANGE_WINDOW));
        hits_bp += usize::from((z - REFLECTOR_RANGES[0]).abs() < 1.0);
        q_bp += q / NOISE_SEEDS as f64;
    }
    rep.line(
        "noisy_mass_clamped",
        clamp_dev < 1e-8,
        format!("min eigenvalue equals lambda_min to {clamp_dev:.1e} over {NOISE_SEEDS} realizations"),
    );
    let majority = 2 * hits_norm > NOISE_SEEDS as usize;
    rep.line(
        "noise_robustness",
        majority && q_bp < q_norm,
        format!(
            "20% noise, {NOISE_SEEDS} realizations: I localizes top reflector in {hits_norm}, mean ratio {q_norm:.3}; BP localizes in {hits_bp}, mean ratio {q_bp:.3}; {:.0} s",
            t.elapsed().as_secs_f64()
        ),
    );
    Ok(())
}

fn pixel_scan_check(rep: &mut Report) -> Res<()> {
    let sc = common::small();
    let reference = sc.reference();
    let (basis, _) = build_reference_basis(&reference, &sc.array, &sc.pulse, sc.tau, sc.n, sc.image_grid, None)?;
    let data = simulate_data(&sc.medium, &sc.array, &sc.pulse, sc.tau, sc.n)?;
    let rom = Rom::build(&data, sc.n, None, false)?;
    let y = (3.0, 1.75);
    let focus = ImagingGrid::covering(sc.medium.grid, (0.5, 5.5), (0.25, 3.5), 0.125)?;
    let res = pixel_scan(rom.r(), &basis, &sc.medium, &sc.array, &sc.pulse, sc.tau, y, Some(&focus))?;
    let field = res.focus.as_ref().ok_or("no focus field")?;
    let p = (0..field.len()).max_by(|&a, &b| field[a].abs().total_cmp(&field[b].abs())).ok_or("empty focus grid")?;
    let (fx, fz) = focus.coords(p);
    let miss = ((fx - y.0).powi(2) + (fz - y.1).powi(2)).sqrt();
    let sim = Simulator::new(&sc.medium, &sc.pulse, sc.tau)?;
    let kk = sim.steps_per_sample;
    let samples = res.gamma.rows();
    let responses = impulse_responses(&sim, &sc.array, (samples - 1) * kk + 2);
    let sup = gamma_by_superposition(&res.sources, &responses, kk, samples);
    let rel = common::rel_l2(sup.as_slice(), res.gamma.as_slice());
    rep.line(
        "pixel_scan_focus",
        miss < 1.0 && rel < 0.02,
        format!("field max at ({fx:.3}, {fz:.3}), {miss:.3} from y < 1; superposition rel {rel:.2e} < 2e-2"),
    );
    Ok(())
}

fn one_dimensional(rep: &mut Report) -> Res<()> {
    let g = goupillaud_residual()?;
    let s = series_vs_fd(1.0 / 320.0)?;
    let e = energy_balance()?;
    rep.line(
        "layered_medium_1d",
        g < 1e-8 && s < 1e-2 && e < 1e-14,
        format!("Goupillaud residual {g:.2e} < 1e-8, series vs FD {s:.2e} < 1e-2, R²+T²−1 {e:.2e} < 1e-14"),
    );
    let pulse = Pulse::standard(OMEGA_C)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for j in [1, 2] {
        let a = waveguide_mode_arrival(2.25, 1.0 / 16.0, j, 8.0, &pulse)?;
        ok &= a.error() < a.pulse_width;
        parts.push(format!("mode {j} error {:.3} < {:.3}", a.error(), a.pulse_width));
    }
    let q = mode_coupling(2.25, (0.0, 2.25), 2)?;
    let q_dev = q.sub(&Matrix::identity(2)).max_abs();
    rep.line("waveguide_modes", ok && q_dev < 1e-12, format!("{}, |Q − I| {q_dev:.2e} < 1e-12", parts.join(", ")));
    Ok(())
}

fn main() -> ExitCode {
    let mut rep = Report { failed: 0 };
    let sections: [(&str, fn(&mut Report) -> Res<()>); 6] = [
        ("oracle", oracle),
        ("block_cholesky", cholesky),
        ("pixel_scan_focus", pixel_scan_check),
        ("one_dimensional", one_dimensional),
        ("noise_robustness", noise),
        ("waveguide", waveguide),
    ];
    for (name, f) in &sections {
        if let Err(e) = f(&mut rep) {
            rep.err(name, e);
        }
    }
    if rep.failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", rep.failed);
        ExitCode::FAILURE
    }
}
