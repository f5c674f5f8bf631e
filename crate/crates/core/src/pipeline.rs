//! End-to-end runs: simulate, build ROMs, build the basis, image, postprocess.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::grid::ImagingGrid;
use crate::imaging::{
    image_backprojection, image_ideal, image_norm, image_pixel_scan, image_rtm, range_derivative, Image, ImageParams,
};
use crate::internal::SnapshotBasis;
use crate::io::{self, Header, Manifest, PARTIAL_MARKER};
use crate::rom::{add_noise, Rom};
use crate::scenario::{Scenario, OMEGA_C};
use crate::solver::{compute_data_tensor, simulate_records, simulate_snapshots, DataTensor, Simulator};

/// Hash of everything that determines the payloads; the output directory is excluded.
pub fn experiment_hash(cfg: &ExperimentConfig) -> Result<String> {
    #[derive(Serialize)]
    struct Hashed<'a> {
        scenario: crate::scenario::ScenarioSpec,
        noise: &'a crate::config::NoiseConfig,
        regularization: &'a crate::config::RegularizationConfig,
        imaging: &'a crate::config::ImagingConfig,
    }
    io::config_hash(&Hashed {
        scenario: cfg.scenario_spec()?,
        noise: &cfg.noise,
        regularization: &cfg.regularization,
        imaging: &cfg.imaging,
    })
}

/// True and reference data tensors; noise is added to the true traces only.
pub fn simulate_pair(sc: &Scenario<f64>, noise: f64, seed: u64) -> Result<(DataTensor<f64>, DataTensor<f64>)> {
    let reference = sc.reference();
    let sim = Simulator::new(&sc.medium, &sc.pulse, sc.tau)?;
    let records = simulate_records(&sim, &sc.array, sc.n)?;
    let records = add_noise(&records, noise, seed)?;
    let data = compute_data_tensor(&records, sc.n)?;
    let sim_ref = Simulator::new(&reference, &sc.pulse, sc.tau)?;
    let data_ref = compute_data_tensor(&simulate_records(&sim_ref, &sc.array, sc.n)?, sc.n)?;
    Ok((data, data_ref))
}

/// Everything a pipeline run computes, kept in memory.
pub struct PipelineProducts {
    pub data: DataTensor<f64>,
    pub data_ref: DataTensor<f64>,
    pub rom: Rom<f64>,
    pub rom_ref: Rom<f64>,
    pub basis: SnapshotBasis<f64>,
    pub images: Vec<Image<f64>>,
}

fn stage<R>(name: &str, r: Result<R>) -> Result<R> {
    r.map_err(|e| e.in_stage(name))
}

fn params_for(cfg: &ExperimentConfig, sc: &Scenario<f64>, rom: &Rom<f64>) -> ImageParams {
    ImageParams {
        tau: sc.tau,
        n: sc.n,
        m: sc.array.m(),
        aperture: sc.array.aperture,
        noise: cfg.noise.fraction,
        lambda_min: Some(rom.lambda_min),
        seed: (cfg.noise.fraction > 0.0).then_some(cfg.noise.seed),
        source: Some(sc.spec.name.clone()),
        sigma: None,
        warnings: Vec::new(),
    }
}

/// Runs every stage in memory.
pub fn compute(cfg: &ExperimentConfig) -> Result<PipelineProducts> {
    let spec = stage("config", cfg.scenario_spec())?;
    let sc: Scenario<f64> = stage("config", spec.build())?;
    let noisy = cfg.noise.fraction > 0.0;
    let (data, data_ref) = stage("simulate", simulate_pair(&sc, cfg.noise.fraction, cfg.noise.seed))?;
    let rel = cfg.regularization.lambda_min;
    let rom = stage("build-rom", Rom::build_relative(&data, sc.n, rel, noisy))?;
    let rom_ref = stage("build-rom", Rom::build_relative(&data_ref, sc.n, None, false))?;
    let reference = sc.reference();
    let pts = sc.image_grid.solver_indices();
    let snaps_ref = stage("basis", simulate_snapshots(&reference, &sc.array, &sc.pulse, sc.tau, sc.n, &pts))?;
    let basis = stage("basis", SnapshotBasis::from_snapshots(sc.image_grid, &snaps_ref, &rom_ref.factor))?;
    drop(snaps_ref);

    let params = params_for(cfg, &sc, &rom);
    let mut images = Vec::new();
    for method in &cfg.imaging.methods {
        let img = stage(&format!("image/{}", method.kind().name()), image_method(*method, cfg, &sc, &data, &data_ref, &rom, &rom_ref, &basis, params.clone()))?;
        images.push(img);
    }
    if let Some(sigma) = cfg.imaging.sigma {
        let derived = images
            .iter()
            .map(|img| range_derivative(img, sigma))
            .collect::<Result<Vec<_>>>();
        images.extend(stage("postprocess", derived)?);
    }
    Ok(PipelineProducts { data, data_ref, rom, rom_ref, basis, images })
}

#[allow(clippy::too_many_arguments)]
fn image_method(
    method: Method,
    cfg: &ExperimentConfig,
    sc: &Scenario<f64>,
    data: &DataTensor<f64>,
    data_ref: &DataTensor<f64>,
    rom: &Rom<f64>,
    rom_ref: &Rom<f64>,
    basis: &SnapshotBasis<f64>,
    params: ImageParams,
) -> Result<Image<f64>> {
    match method {
        Method::Norm => image_norm(rom.r(), basis, params),
        Method::Ideal => {
            let pts = sc.image_grid.solver_indices();
            let snaps = simulate_snapshots(&sc.medium, &sc.array, &sc.pulse, sc.tau, sc.n, &pts)?;
            image_ideal(sc.image_grid, &snaps, params)
        }
        Method::Bp => image_backprojection(&rom.propagator, &rom_ref.propagator, basis, params),
        Method::Rtm => image_rtm(&data.sub(data_ref)?, &sc.reference(), &sc.array, &sc.pulse, &sc.image_grid, params),
        Method::Ps => {
            let grid = match cfg.imaging.ps_window {
                Some([x0, x1, z0, z1, sp]) => ImagingGrid::covering(sc.medium.grid, (x0, x1), (z0, z1), sp)?,
                None => sc.image_grid,
            };
            image_pixel_scan(rom.r(), basis, &sc.medium, &sc.array, &sc.pulse, sc.tau, &grid, cfg.imaging.ps_max_pixels, params)
        }
    }
}

fn image_file_name(img: &Image<f64>, derived_from: Option<&str>) -> String {
    match derived_from {
        Some(base) => format!("image_{base}_rd"),
        None => format!("image_{}", img.kind.name()),
    }
}

/// Runs the pipeline and writes every artifact plus `manifest.json` to the
/// configured output directory. A `.partial` marker stays behind when a stage fails.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    let marker = dir.join(PARTIAL_MARKER);
    fs::write(&marker, "")?;
    let manifest = run_into(cfg, &dir)?;
    fs::remove_file(&marker)?;
    Ok(manifest)
}

fn run_into(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    let hash = experiment_hash(cfg)?;
    let mut manifest = Manifest::new(&hash);
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    manifest.add(dir, "config.toml", "config")?;

    let products = compute(cfg)?;
    let omega = OMEGA_C;
    let write = |manifest: &mut Manifest, name: &str, kind: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        stage("write", f(&dir.join(name)))?;
        manifest.add(dir, name, kind)
    };
    let base = io::data_header(&products.data, omega, &hash);
    write(&mut manifest, "data.bin", "data", &|p| io::write_data(p, &products.data, &base))?;
    let mut h_ref = io::data_header(&products.data_ref, omega, &hash);
    h_ref.kind = "data_ref".into();
    write(&mut manifest, "data_ref.bin", "data_ref", &|p| io::write_data(p, &products.data_ref, &h_ref))?;
    for (name, kind, b) in [
        ("R.bin", "rom_factor", &products.rom.factor.r),
        ("P.bin", "rom_propagator", &products.rom.propagator),
        ("R_ref.bin", "rom_factor_ref", &products.rom_ref.factor.r),
        ("P_ref.bin", "rom_propagator_ref", &products.rom_ref.propagator),
    ] {
        let mut h = base.clone();
        h.kind = kind.into();
        write(&mut manifest, name, kind, &|p| io::write_block(p, b, h.clone()))?;
    }
    let mut h = base.clone();
    h.kind = "basis".into();
    write(&mut manifest, "basis.bin", "basis", &|p| io::write_basis(p, &products.basis, h.clone()))?;

    let n_primary = cfg.imaging.methods.len();
    for (i, img) in products.images.iter().enumerate() {
        let derived_from = (i >= n_primary).then(|| products.images[i - n_primary].kind.name());
        let stem = image_file_name(img, derived_from);
        let name = format!("{stem}.bin");
        write(&mut manifest, &name, &format!("image/{}", img.kind.name()), &|p| io::write_image(p, img, base.clone()))?;
        if cfg.output.csv {
            let csv = format!("{stem}.csv");
            write(&mut manifest, &csv, "image_csv", &|p| io::write_image_csv(p, img))?;
        }
    }
    manifest.write(&dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Parameter swept by [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepKind {
    /// Fractions of the full aperture.
    Aperture,
    /// Multiples of the configured `τ`; `n` is scaled to keep the recording duration.
    Tau,
}

impl std::str::FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aperture" => Ok(SweepKind::Aperture),
            "tau" => Ok(SweepKind::Tau),
            other => Err(Error::config(format!("unknown sweep '{other}'"))),
        }
    }
}

impl SweepKind {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepKind::Aperture => vec![0.4, 0.6, 1.0],
            SweepKind::Tau => vec![3.0, 1.8, 1.0, 0.8],
        }
    }
}

/// Config of one sweep member, writing into `<dir>/<kind>_<value>`.
pub fn sweep_member(cfg: &ExperimentConfig, kind: SweepKind, value: f64) -> Result<ExperimentConfig> {
    let spec = cfg.scenario_spec()?;
    let mut out = cfg.clone();
    let label = match kind {
        SweepKind::Aperture => {
            out.scenario.aperture_fraction = Some(value);
            format!("aperture_{value}")
        }
        SweepKind::Tau => {
            if !(value > 0.0) {
                return Err(Error::config("tau multiple must be positive"));
            }
            out.scenario.tau_factor = Some(spec.tau_factor * value);
            out.scenario.n = Some(((spec.n as f64) / value).round().max(1.0) as usize);
            format!("tau_{value}")
        }
    };
    out.output.dir = cfg.output.dir.join(label);
    out.validate()?;
    Ok(out)
}

/// Runs the pipeline once per value, one subdirectory each.
pub fn sweep(cfg: &ExperimentConfig, kind: SweepKind, values: &[f64]) -> Result<Vec<(PathBuf, Manifest)>> {
    values
        .iter()
        .map(|&v| {
            let member = sweep_member(cfg, kind, v)?;
            let manifest = run_pipeline(&member)?;
            Ok((member.output.dir, manifest))
        })
        .collect()
}

/// Header of an image written by the pipeline, for consumers that only need metadata.
pub fn image_header(path: &Path) -> Result<Header> {
    let h = io::read_header(path)?;
    if !h.kind.starts_with("image/") {
        return Err(Error::Format(format!("{} is not an image", path.display())));
    }
    Ok(h)
}
