//! Oracle-equivalence checks on small grids and the layered/waveguide
//! residuals, each reported against a threshold.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{Grid, ImagingGrid};
use crate::imaging::{image_backprojection, image_ideal, image_norm, ImageParams};
use crate::internal::{internal_wave, SnapshotBasis};
use crate::layered1d::{
    mode_coupling, reflection_transmission, single_layer_series, span_residual, waveguide_mode_arrival,
    LayeredMedium, Pulse1d, TravelTimeSolver,
};
use crate::linalg::Matrix;
use crate::medium::{ArrayGeometry, Boundary, Medium};
use crate::oracle::{DiscretizedOperator, SpectralModel};
use crate::pulse::Pulse;
use crate::rom::{assemble_mass, assemble_stiffness, Rom};
use crate::scenario::OMEGA_C;
use crate::solver::{simulate_data, SnapshotFields, Simulator};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckLine {
    /// Passes when `value < threshold`.
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value < threshold }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<34} {:>12.3e} < {:.1e}", self.name, self.value, self.threshold)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub lines: Vec<CheckLine>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckLine> {
        self.lines.iter().find(|l| l.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Small medium used by the oracle checks.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSetup {
    pub nx: usize,
    pub nz: usize,
    pub h: f64,
    pub m: usize,
    pub n: usize,
    pub tau_factor: f64,
    /// Slow inclusion `[x0, x1, z0, z1]` with its speed.
    pub inclusion: Option<([f64; 4], f64)>,
    pub points: usize,
    pub seed: u64,
}

impl Default for OracleSetup {
    fn default() -> Self {
        Self {
            nx: 31,
            nz: 24,
            h: 0.125,
            m: 4,
            n: 8,
            tau_factor: 0.4,
            inclusion: Some(([1.25, 2.75, 1.4, 1.7], 0.6)),
            points: 20,
            seed: 11,
        }
    }
}

/// Oracle-side quantities for one medium.
pub struct OracleRun {
    pub medium: Medium<f64>,
    pub op: DiscretizedOperator<f64>,
    pub model: SpectralModel<f64>,
    pub rom: Rom<f64>,
    pub snapshots: SnapshotFields<f64>,
    pub basis: SnapshotBasis<f64>,
}

impl OracleSetup {
    pub fn tau(&self) -> f64 {
        self.tau_factor * std::f64::consts::PI / OMEGA_C
    }

    pub fn grid(&self) -> Result<Grid<f64>> {
        Grid::new(self.nx, self.nz, self.h, self.h, 0.5 * self.h)
    }

    pub fn pulse(&self) -> Result<Pulse<f64>> {
        Pulse::standard(OMEGA_C)
    }

    pub fn medium(&self, with_inclusion: bool) -> Result<Medium<f64>> {
        let grid = self.grid()?;
        let mut c = vec![1.0; grid.len()];
        if let (true, Some((b, speed))) = (with_inclusion, self.inclusion) {
            for (p, v) in c.iter_mut().enumerate() {
                let (x, z) = grid.coords(p);
                if x >= b[0] && x <= b[1] && z >= b[2] && z <= b[3] {
                    *v = speed;
                }
            }
        }
        Medium::new(grid, c, vec![1.0; grid.len()], Boundary::accessible_top(), 2.0 * self.h)
    }

    pub fn array(&self, medium: &Medium<f64>) -> Result<ArrayGeometry<f64>> {
        let width = (self.nx + 1) as f64 * self.h;
        ArrayGeometry::linear(medium, self.m, 0.25 * width, 0.5 * width, 0.5 * self.h)
    }

    /// Data, ROM and orthonormal snapshots of `medium`, all computed spectrally.
    pub fn run(&self, medium: Medium<f64>) -> Result<OracleRun> {
        let pulse = self.pulse()?;
        let tau = self.tau();
        let array = self.array(&medium)?;
        let sim = Simulator::new(&medium, &pulse, tau)?;
        let model = SpectralModel::Discrete { pulse: sim.pulse.clone(), steps_per_sample: sim.steps_per_sample };
        let op = DiscretizedOperator::new(&medium)?;
        let data = op.data_tensor(&array.nodes, &model, self.n, tau);
        let rom = Rom::build(&data, self.n, None, false)?;
        let snapshots = op.snapshots(&array.nodes, &model, self.n);
        let basis = SnapshotBasis::from_snapshots(ImagingGrid::full(medium.grid), &snapshots, &rom.factor)?;
        Ok(OracleRun { medium, op, model, rom, snapshots, basis })
    }

    /// Uniform random points inside the node lattice.
    pub fn random_points(&self) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let x_hi = self.nx as f64 * self.h;
        let z_hi = (self.nz as f64 - 0.5) * self.h;
        (0..self.points)
            .map(|_| (rng.gen_range(self.h..x_hi), rng.gen_range(0.5 * self.h..z_hi)))
            .collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

/// `max |a − b| / max |b|`.
pub fn rel_max(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    d / max_abs(b).max(f64::MIN_POSITIVE)
}

fn fields_of(basis: &SnapshotBasis<f64>) -> SnapshotFields<f64> {
    SnapshotFields { n: basis.n, m: basis.m, npts: basis.grid.len(), values: basis.values.clone() }
}

/// Internal wave from the ROM factor versus direct spectral evaluation, worst
/// relative error over the random points.
pub fn prop1_deviation(setup: &OracleSetup, truth: &OracleRun, reference: &OracleRun) -> Result<f64> {
    let v_true = fields_of(&truth.basis);
    let array = setup.array(&truth.medium)?;
    let mut worst = 0.0f64;
    for y in setup.random_points() {
        let g = internal_wave(truth.rom.r(), &reference.basis, y)?;
        let vo = reference.basis.at(y.0, y.1)?;
        let direct = truth.op.internal_wave(&array.nodes, &truth.model, setup.n, &v_true, &vo)?;
        worst = worst.max(rel_max(g.values.as_slice(), direct.as_slice()));
    }
    Ok(worst)
}

/// Data-formula mass and stiffness versus snapshot quadrature.
pub fn quadrature_deviation(setup: &OracleSetup, run: &OracleRun) -> Result<(f64, f64)> {
    let array = setup.array(&run.medium)?;
    let data = run.op.data_tensor(&array.nodes, &run.model, setup.n, setup.tau());
    let mass = assemble_mass(&data, setup.n)?;
    let stiff = assemble_stiffness(&data, setup.n)?;
    let m_quad = run.op.gram(&run.snapshots, &run.snapshots);
    let model = run.model.clone();
    let pu = run.op.apply_to_fields(|l| model.prop(l, 1), &run.snapshots);
    let s_quad = run.op.gram(&run.snapshots, &pu);
    Ok((rel_max(mass.mat.as_slice(), m_quad.as_slice()), rel_max(stiff.mat.as_slice(), s_quad.as_slice())))
}

/// `P^{ROM}` versus the Galerkin projection `h² Vᵀ 𝒫 V` of the orthonormal snapshots.
pub fn projection_deviation(run: &OracleRun) -> Result<f64> {
    let v = fields_of(&run.basis);
    let model = run.model.clone();
    let pv = run.op.apply_to_fields(|l| model.prop(l, 1), &v);
    let direct: Matrix<f64> = run.op.gram(&v, &pv);
    Ok(rel_max(run.rom.propagator.mat.as_slice(), direct.as_slice()))
}

/// Null tests in the reference medium: backprojection relative to `‖P‖`,
/// internal wave versus reference snapshots at grid nodes, and `I` versus `I^{ideal}`.
pub fn reference_null_deviation(setup: &OracleSetup, reference: &OracleRun) -> Result<(f64, f64, f64)> {
    let pulse = setup.pulse()?;
    let array = setup.array(&reference.medium)?;
    // the "true" ROM comes from the time-stepping solver, the reference one from the oracle
    let fd = simulate_data(&reference.medium, &array, &pulse, setup.tau(), setup.n)?;
    let fd_rom = Rom::build(&fd, setup.n, None, false)?;
    let params = ImageParams::default();
    let bp = image_backprojection(&fd_rom.propagator, &reference.rom.propagator, &reference.basis, params.clone())?;
    let p_norm = max_abs(reference.rom.propagator.mat.as_slice());
    let bp_dev = bp.max_abs() / p_norm;

    let grid = reference.basis.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed ^ 0x5eed);
    let mut wave_dev = 0.0f64;
    for _ in 0..setup.points {
        let p = rng.gen_range(0..grid.len());
        let y = grid.coords(p);
        let g = internal_wave(reference.rom.r(), &reference.basis, y)?;
        wave_dev = wave_dev.max(rel_max(g.values.as_slice(), reference.snapshots.row(p)));
    }

    let norm = image_norm(reference.rom.r(), &reference.basis, params.clone())?;
    let ideal = image_ideal(grid, &reference.snapshots, params)?;
    let img_dev = rel_max(&norm.values, &ideal.values);
    Ok((bp_dev, wave_dev, img_dev))
}

/// Time-stepped data versus the oracle's discrete model.
pub fn solver_deviation(setup: &OracleSetup, run: &OracleRun) -> Result<f64> {
    let pulse = setup.pulse()?;
    let array = setup.array(&run.medium)?;
    let fd = simulate_data(&run.medium, &array, &pulse, setup.tau(), setup.n)?;
    let or = run.op.data_tensor(&array.nodes, &run.model, setup.n, setup.tau());
    let a: Vec<f64> = fd.mats.iter().flat_map(|m| m.as_slice().to_vec()).collect();
    let b: Vec<f64> = or.mats.iter().flat_map(|m| m.as_slice().to_vec()).collect();
    Ok(rel_max(&a, &b))
}

/// Layered medium whose interface delay is an even number of samples, and a
/// pulse no wider than one sample.
pub fn goupillaud_residual() -> Result<f64> {
    let pulse = Pulse1d::new(OMEGA_C, 0.5)?;
    let medium = LayeredMedium::single_interface(1.0, 3.0, 2.5, 20.0)?;
    let mut worst = 0.0f64;
    for j in [3usize, 6, 10, 14] {
        worst = worst.max(span_residual(&medium, &pulse, 0.5, j, 1.0 / 200.0)?.residual);
    }
    Ok(worst)
}

/// Worst relative L2 error of the travel-time FD solver against the
/// single-interface series over a few sampling instants.
pub fn series_vs_fd(d_t: f64) -> Result<f64> {
    let pulse = Pulse1d::new(OMEGA_C, 0.5)?;
    let tau = 0.5;
    // interface between two nodes so no node sits on the jump
    let medium = LayeredMedium::single_interface(1.0, 3.0, 3.0 + 0.5 * d_t, 12.0)?;
    let solver = TravelTimeSolver::new(&medium, d_t)?;
    let snaps = solver.snapshots(&pulse, tau, 16, 0.5)?;
    let xs = solver.positions();
    let mut worst = 0.0f64;
    for j in [4usize, 8, 12, 16] {
        let t = tau * j as f64;
        let exact = xs
            .iter()
            .map(|&x| single_layer_series(&medium, &pulse, t, x, None))
            .collect::<Result<Vec<_>>>()?;
        worst = worst.max(crate::linalg::rel_l2(&snaps[j], &exact));
    }
    Ok(worst)
}

/// `max |ℜ² + 𝔗² − 1|` over a spread of impedance pairs.
pub fn energy_balance() -> Result<f64> {
    let mut worst = 0.0f64;
    for a in [0.1, 0.5, 1.0, 2.0, 7.5] {
        for b in [0.2, 1.0, 3.0, 40.0] {
            let (r, t): (f64, f64) = reflection_transmission(a, b)?;
            worst = worst.max((r * r + t * t - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Runs every check.
pub fn verify(setup: &OracleSetup, include_modes: bool) -> Result<VerifyReport> {
    let mut lines = Vec::new();
    let truth = setup.run(setup.medium(true)?)?;
    let reference = setup.run(setup.medium(false)?)?;
    lines.push(CheckLine::below("solver_vs_oracle_data", solver_deviation(setup, &truth)?, 1e-10));
    lines.push(CheckLine::below("prop1_internal_wave", prop1_deviation(setup, &truth, &reference)?, 1e-10));
    let (dm, ds) = quadrature_deviation(setup, &truth)?;
    lines.push(CheckLine::below("mass_quadrature", dm, 1e-10));
    lines.push(CheckLine::below("stiffness_quadrature", ds, 1e-10));
    lines.push(CheckLine::below("propagator_projection", projection_deviation(&truth)?, 1e-10));
    let (bp, wave, img) = reference_null_deviation(setup, &reference)?;
    lines.push(CheckLine::below("reference_backprojection_null", bp, 1e-8));
    lines.push(CheckLine::below("reference_internal_wave", wave, 1e-8));
    lines.push(CheckLine::below("reference_norm_vs_ideal", img, 1e-8));
    lines.push(CheckLine::below("goupillaud_span_residual", goupillaud_residual()?, 1e-8));
    lines.push(CheckLine::below("series_vs_fd_1d", series_vs_fd(1.0 / 320.0)?, 1e-2));
    lines.push(CheckLine::below("reflection_energy_balance", energy_balance()?, 1e-14));
    let q = mode_coupling(2.25, (0.0, 2.25), 2)?;
    let q_dev = q.sub(&Matrix::identity(2)).max_abs();
    lines.push(CheckLine::below("full_aperture_coupling", q_dev, 1e-12));
    if include_modes {
        let pulse = Pulse::standard(OMEGA_C)?;
        for j in [1, 2] {
            let a = waveguide_mode_arrival(2.25, 1.0 / 16.0, j, 8.0, &pulse)?;
            lines.push(CheckLine::below(&format!("mode_{j}_arrival"), a.error(), a.pulse_width));
        }
    }
    Ok(VerifyReport { lines })
}
