use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use romimaging::config::{ExperimentConfig, Method};
use romimaging::imaging::{
    image_backprojection, image_ideal, image_norm, image_pixel_scan, image_rtm, range_derivative, ImageParams,
};
use romimaging::internal::{build_reference_basis, internal_wave};
use romimaging::io::{self, Header};
use romimaging::layered1d::{
    mode_coupling, mode_table, reflection_transmission, span_residual, waveguide_mode_arrival, LayeredMedium,
    Pulse1d,
};
use romimaging::linalg::symmetric_eigen;
use romimaging::pipeline::{experiment_hash, run_pipeline, simulate_pair, sweep, SweepKind};
use romimaging::pulse::Pulse;
use romimaging::rom::{Rom, Structure};
use romimaging::scenario::{PresetName, Scenario, OMEGA_C};
use romimaging::solver::simulate_snapshots;
use romimaging::verify::{series_vs_fd, verify, OracleSetup};
use romimaging::Error;

const THREADS_VAR: &str = "ROMIMG_THREADS";

#[derive(Parser)]
#[command(name = "romimg", version, about = "Reduced order model wave imaging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate true and reference data tensors.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the ROM (mass, stiffness, factor, propagator) from a data tensor.
    BuildRom {
        /// Directory holding data.bin, or the file itself.
        #[arg(long)]
        data: PathBuf,
        /// Clamp level relative to the largest mass eigenvalue.
        #[arg(long)]
        lambda_min: Option<f64>,
        /// Use the default clamp level for noisy data.
        #[arg(long)]
        noisy: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Orthonormal reference snapshots on the imaging grid.
    Basis {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Internal wave g(t_j, x_r; y) at the array.
    InternalWave {
        #[arg(long)]
        rom: PathBuf,
        #[arg(long)]
        basis: PathBuf,
        /// Point as `x,z`.
        #[arg(long, value_parser = parse_point)]
        y: (f64, f64),
        #[arg(long)]
        out: PathBuf,
    },
    /// Form one image.
    Image {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        rom: Option<PathBuf>,
        #[arg(long)]
        basis: Option<PathBuf>,
        /// Directory with data.bin and data_ref.bin (rtm).
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Pixel budget for the pixel-scan image.
        #[arg(long, default_value_t = 64)]
        ps_max_pixels: usize,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Postprocess an image file.
    Postprocess {
        #[arg(long)]
        input: PathBuf,
        /// Smoothed range derivative.
        #[arg(long)]
        range_derivative: bool,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Residual tables for the layered medium (a1) and waveguide (a2) analyses, as CSV.
    Validate {
        #[arg(long, value_enum)]
        appendix: Appendix,
    },
    /// Oracle-equivalence suite with deviations against thresholds.
    Verify {
        /// Only the small-grid oracle checks.
        #[arg(long)]
        oracle: bool,
    },
    /// Full pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pipeline once per parameter value, one subdirectory each.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: SweepArg,
        /// Aperture fractions or τ multiples; defaults to the standard study.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct ScenarioArgs {
    /// Preset name: waveguide, halfspace or homogeneous.
    #[arg(long)]
    scenario: Option<String>,
    /// Experiment config file; its scenario section is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    /// Fraction of the full aperture kept.
    #[arg(long)]
    aperture: Option<f64>,
    #[arg(long)]
    tau_factor: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Grid spacing in wavelengths.
    #[arg(long)]
    h: Option<f64>,
    /// Noise fraction added to the true traces.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Norm,
    Ideal,
    Bp,
    Rtm,
    Ps,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Norm => Method::Norm,
            MethodArg::Ideal => Method::Ideal,
            MethodArg::Bp => Method::Bp,
            MethodArg::Rtm => Method::Rtm,
            MethodArg::Ps => Method::Ps,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Appendix {
    A1,
    A2,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Aperture,
    Tau,
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (x, z) = s.split_once(',').ok_or("expected x,z")?;
    Ok((x.trim().parse().map_err(|e| format!("{e}"))?, z.trim().parse().map_err(|e| format!("{e}"))?))
}

impl ScenarioArgs {
    fn experiment(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.scenario) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name.parse::<PresetName>()?),
            (None, None) => return Err(Error::config("give --scenario or --config").into()),
        };
        let s = &mut cfg.scenario;
        s.m = self.m.or(s.m);
        s.aperture_fraction = self.aperture.or(s.aperture_fraction);
        s.tau_factor = self.tau_factor.or(s.tau_factor);
        s.n = self.n.or(s.n);
        s.h = self.h.or(s.h);
        if let Some(v) = self.noise {
            cfg.noise.fraction = v;
        }
        if let Some(v) = self.seed {
            cfg.noise.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn file_in(path: &Path, name: &str) -> PathBuf {
    if path.is_dir() {
        path.join(name)
    } else {
        path.to_path_buf()
    }
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn base_header(cfg: &ExperimentConfig, sc: &Scenario<f64>) -> anyhow::Result<Header> {
    let mut h = Header::new("", vec![]);
    h.tau = sc.tau;
    h.n = sc.n;
    h.m = sc.array.m();
    h.omega_c = OMEGA_C;
    h.config_hash = experiment_hash(cfg)?;
    Ok(h)
}

fn simulate(args: &ScenarioArgs, out: &Path) -> anyhow::Result<()> {
    let cfg = args.experiment()?;
    let sc: Scenario<f64> = cfg.scenario_spec()?.build()?;
    create_dir(out)?;
    let (data, data_ref) = simulate_pair(&sc, cfg.noise.fraction, cfg.noise.seed)?;
    let hash = experiment_hash(&cfg)?;
    let h = io::data_header(&data, OMEGA_C, &hash);
    io::write_data(&out.join("data.bin"), &data, &h)?;
    let mut h_ref = io::data_header(&data_ref, OMEGA_C, &hash);
    h_ref.kind = "data_ref".into();
    io::write_data(&out.join("data_ref.bin"), &data_ref, &h_ref)?;
    std::fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    println!("wrote {} data matrices of size {}x{} to {}", data.len(), data.m, data.m, out.display());
    Ok(())
}

fn build_rom(data: &Path, lambda_min: Option<f64>, noisy: bool, out: &Path) -> anyhow::Result<()> {
    let (h, d) = io::read_data(&file_in(data, "data.bin"))?;
    let n = d.n();
    let rom = Rom::build_relative(&d, n, lambda_min, noisy)?;
    create_dir(out)?;
    let mut base = h.clone();
    base.params = serde_json::Value::Null;
    for (name, kind, b) in [
        ("M.bin", "rom_mass", &rom.mass),
        ("S.bin", "rom_stiffness", &rom.stiffness),
        ("R.bin", "rom_factor", &rom.factor.r),
        ("P.bin", "rom_propagator", &rom.propagator),
    ] {
        let mut hh = base.clone();
        hh.kind = kind.into();
        io::write_block(&out.join(name), b, hh)?;
    }
    println!("n = {n}, m = {}, lambda_min = {:.3e}", d.m, rom.lambda_min);
    Ok(())
}

fn basis(args: &ScenarioArgs, out: &Path) -> anyhow::Result<()> {
    let cfg = args.experiment()?;
    let sc: Scenario<f64> = cfg.scenario_spec()?.build()?;
    let (basis, rom_ref) =
        build_reference_basis(&sc.reference(), &sc.array, &sc.pulse, sc.tau, sc.n, sc.image_grid, None)?;
    create_dir(out)?;
    let h = base_header(&cfg, &sc)?;
    let mut hb = h.clone();
    hb.kind = "basis".into();
    io::write_basis(&out.join("basis.bin"), &basis, hb)?;
    for (name, kind, b) in [("R_ref.bin", "rom_factor_ref", &rom_ref.factor.r), ("P_ref.bin", "rom_propagator_ref", &rom_ref.propagator)] {
        let mut hh = h.clone();
        hh.kind = kind.into();
        io::write_block(&out.join(name), b, hh)?;
    }
    println!("basis of {} fields on {} points", basis.width(), basis.grid.len());
    Ok(())
}

fn load_basis(dir: &Path) -> anyhow::Result<romimaging::SnapshotBasis> {
    let (_, r_ref) = io::read_block(&dir.join("R_ref.bin")).context("reading R_ref.bin next to the basis")?;
    Ok(io::read_basis(&file_in(dir, "basis.bin"), r_ref)?.1)
}

fn load_block(path: &Path, name: &str, structure: Structure) -> anyhow::Result<romimaging::BlockMatrix> {
    let (_, b) = io::read_block(&file_in(path, name))?;
    if b.structure != structure {
        bail!("{} holds a {:?} matrix, expected {:?}", name, b.structure, structure);
    }
    Ok(b)
}

fn internal_wave_cmd(rom: &Path, basis_dir: &Path, y: (f64, f64), out: &Path) -> anyhow::Result<()> {
    let r = load_block(rom, "R.bin", Structure::BlockUpperTriangular)?;
    let basis = load_basis(basis_dir)?;
    let g = internal_wave(&r, &basis, y)?;
    let mut h = Header::new("internal_wave", vec![g.values.rows(), g.values.cols()]);
    h.n = r.n;
    h.m = r.m;
    h.omega_c = OMEGA_C;
    h.params = serde_json::json!({ "y": [y.0, y.1] });
    io::write_array(out, &h, g.values.as_slice())?;
    println!("energy {:.6e}", g.energy());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn image(
    method: Method,
    rom: Option<&Path>,
    basis_dir: Option<&Path>,
    data: Option<&Path>,
    args: &ScenarioArgs,
    ps_max_pixels: usize,
    csv: bool,
    out: &Path,
) -> anyhow::Result<()> {
    let cfg = args.experiment()?;
    let sc: Scenario<f64> = cfg.scenario_spec()?.build()?;
    let need = |p: Option<&Path>, what: &str| p.map(Path::to_path_buf).ok_or_else(|| Error::config(format!("--{what} is required for this method")));
    let params = ImageParams {
        tau: sc.tau,
        n: sc.n,
        m: sc.array.m(),
        aperture: sc.array.aperture,
        noise: cfg.noise.fraction,
        source: Some(sc.spec.name.clone()),
        ..Default::default()
    };
    let img = match method {
        Method::Norm => {
            let r = load_block(&need(rom, "rom")?, "R.bin", Structure::BlockUpperTriangular)?;
            image_norm(&r, &load_basis(&need(basis_dir, "basis")?)?, params)?
        }
        Method::Bp => {
            let p = load_block(&need(rom, "rom")?, "P.bin", Structure::General)?;
            let bdir = need(basis_dir, "basis")?;
            let p_ref = load_block(&bdir, "P_ref.bin", Structure::General)?;
            image_backprojection(&p, &p_ref, &load_basis(&bdir)?, params)?
        }
        Method::Ideal => {
            let pts = sc.image_grid.solver_indices();
            let snaps = simulate_snapshots(&sc.medium, &sc.array, &sc.pulse, sc.tau, sc.n, &pts)?;
            image_ideal(sc.image_grid, &snaps, params)?
        }
        Method::Rtm => {
            let dir = need(data, "data")?;
            let (_, d) = io::read_data(&dir.join("data.bin"))?;
            let (_, d_ref) = io::read_data(&dir.join("data_ref.bin"))?;
            image_rtm(&d.sub(&d_ref)?, &sc.reference(), &sc.array, &sc.pulse, &sc.image_grid, params)?
        }
        Method::Ps => {
            let r = load_block(&need(rom, "rom")?, "R.bin", Structure::BlockUpperTriangular)?;
            let basis = load_basis(&need(basis_dir, "basis")?)?;
            image_pixel_scan(&r, &basis, &sc.medium, &sc.array, &sc.pulse, sc.tau, &basis.grid, ps_max_pixels, params)?
        }
    };
    let h = base_header(&cfg, &sc)?;
    io::write_image(out, &img, h)?;
    if csv {
        io::write_image_csv(&out.with_extension("csv"), &img)?;
    }
    let (x, z) = img.argmax();
    println!("{} image, max |I| = {:.4e} at ({x:.3}, {z:.3})", img.kind.name(), img.max_abs());
    Ok(())
}

fn postprocess(input: &Path, rd: bool, sigma: f64, csv: bool, out: &Path) -> anyhow::Result<()> {
    if !rd {
        bail!(Error::config("nothing to do: pass --range-derivative"));
    }
    let header = io::read_header(input)?;
    let img = io::read_image(input)?;
    let derived = range_derivative(&img, sigma)?;
    for w in &derived.params.warnings {
        eprintln!("warning: {w}");
    }
    io::write_image(out, &derived, header)?;
    if csv {
        io::write_image_csv(&out.with_extension("csv"), &derived)?;
    }
    Ok(())
}

fn validate(appendix: Appendix) -> anyhow::Result<()> {
    match appendix {
        Appendix::A1 => {
            let pulse = Pulse1d::new(OMEGA_C, 0.5)?;
            println!("table,tau,t0,j,residual,rank,deficient");
            for (tau, t0) in [(0.5, 2.5), (0.6, 3.0), (0.5, 2.75), (0.5, 2.625)] {
                let medium = LayeredMedium::single_interface(1.0, 3.0, t0, 20.0)?;
                for j in [3usize, 6, 10, 14] {
                    let r = span_residual(&medium, &pulse, tau, j, 1.0 / 200.0)?;
                    println!("span,{tau},{t0},{j},{:.6e},{},{}", r.residual, r.rank, r.deficient);
                }
            }
            let t0 = 31.0 / 6.0 * 0.5;
            let medium = LayeredMedium::single_interface(1.0, 3.0, t0, 20.0)?;
            for tau in [0.25, 0.125, 0.0625] {
                let j = (8.0 / tau) as usize;
                let r = span_residual(&medium, &pulse, tau, j, 1.0 / 400.0)?;
                println!("tau_sweep,{tau},{t0:.6},{j},{:.6e},{},{}", r.residual, r.rank, r.deficient);
            }
            println!();
            println!("table,d_t,rel_l2");
            for d_t in [1.0 / 80.0, 1.0 / 160.0, 1.0 / 320.0] {
                println!("series_vs_fd,{d_t},{:.6e}", series_vs_fd(d_t)?);
            }
            println!();
            println!("table,zeta0,zeta1,reflection,transmission,energy_defect");
            for (a, b) in [(1.0, 3.0), (1.0, 0.5), (2.0, 2.0), (1.0, 40.0)] {
                let (r, t): (f64, f64) = reflection_transmission(a, b)?;
                println!("coefficients,{a},{b},{r:.15},{t:.15},{:.3e}", r * r + t * t - 1.0);
            }
        }
        Appendix::A2 => {
            let d = 2.25;
            let modes = mode_table(d, OMEGA_C, 1.0)?;
            let pulse = Pulse::standard(OMEGA_C)?;
            println!("table,mode,alpha,beta,group_speed,range,predicted,measured,pulse_width");
            for j in 1..=modes.count().min(2) {
                let a = waveguide_mode_arrival(d, 1.0 / 16.0, j, 8.0, &pulse)?;
                println!(
                    "arrival,{j},{:.6},{:.6},{:.6},{},{:.4},{:.4},{:.4}",
                    modes.alpha[j - 1], modes.beta[j - 1], modes.group_speed[j - 1], a.range, a.predicted, a.measured, a.pulse_width
                );
            }
            println!();
            println!("table,aperture_fraction,smallest_eigenvalue");
            for f in [0.2, 0.4, 0.6, 0.8, 1.0] {
                let q = mode_coupling(d, (0.0, f * d), modes.count())?;
                println!("coupling,{f},{:.6e}", symmetric_eigen(&q)?.values[0]);
            }
        }
    }
    Ok(())
}

fn run_verify(oracle_only: bool) -> anyhow::Result<bool> {
    let report = verify(&OracleSetup::default(), !oracle_only)?;
    print!("{report}");
    Ok(report.passed())
}

fn load_with_out(config: &Path, out: Option<&PathBuf>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(o) = out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate { scenario, out } => simulate(&scenario, &out)?,
        Command::BuildRom { data, lambda_min, noisy, out } => build_rom(&data, lambda_min, noisy, &out)?,
        Command::Basis { scenario, out } => basis(&scenario, &out)?,
        Command::InternalWave { rom, basis, y, out } => internal_wave_cmd(&rom, &basis, y, &out)?,
        Command::Image { method, rom, basis, data, scenario, ps_max_pixels, csv, out } => image(
            method.into(),
            rom.as_deref(),
            basis.as_deref(),
            data.as_deref(),
            &scenario,
            ps_max_pixels,
            csv,
            &out,
        )?,
        Command::Postprocess { input, range_derivative, sigma, csv, out } => {
            postprocess(&input, range_derivative, sigma, csv, &out)?
        }
        Command::Validate { appendix } => validate(appendix)?,
        Command::Verify { oracle } => {
            if !run_verify(oracle)? {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Run { config, out } => {
            let cfg = load_with_out(&config, out.as_ref())?;
            let manifest = run_pipeline(&cfg)?;
            for a in &manifest.artifacts {
                println!("{}  {}", a.sha256, a.path.display());
            }
        }
        Command::Sweep { config, kind, values, out } => {
            let cfg = load_with_out(&config, out.as_ref())?;
            let kind = match kind {
                SweepArg::Aperture => SweepKind::Aperture,
                SweepArg::Tau => SweepKind::Tau,
            };
            let values = if values.is_empty() { kind.default_values() } else { values };
            for (dir, manifest) in sweep(&cfg, kind, &values)? {
                println!("{}: {} artifacts", dir.display(), manifest.artifacts.len());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Numerical(_)) | Some(Error::Dimension(_)) => 3,
        _ => 2,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.parse().map_err(|_| anyhow!("{THREADS_VAR} must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| dispatch(cli));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
