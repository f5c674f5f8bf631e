//! Preset and user-defined experiment geometries, in units where the central
//! wavelength and the background speed are 1 (so `ω_c = 2π`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ImagingGrid};
use crate::medium::{ArrayGeometry, Boundary, Medium};
use crate::pulse::Pulse;
use crate::scalar::Real;

pub const OMEGA_C: f64 = 2.0 * std::f64::consts::PI;

/// Default reflector speed relative to the background.
pub const REFLECTOR_SPEED: f64 = 0.8;
/// Default reflector thickness in wavelengths.
pub const REFLECTOR_THICKNESS: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Waveguide,
    Halfspace,
    Homogeneous,
}

impl std::str::FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "waveguide" => Ok(Self::Waveguide),
            "halfspace" => Ok(Self::Halfspace),
            "homogeneous" => Ok(Self::Homogeneous),
            other => Err(Error::config(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Low-velocity inclusion: every node within `thickness/2` of the segment
/// `from → to` gets speed `speed` (relative to the background).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reflector {
    pub from: [f64; 2],
    pub to: [f64; 2],
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default = "default_thickness")]
    pub thickness: f64,
}

fn default_speed() -> f64 {
    REFLECTOR_SPEED
}

fn default_thickness() -> f64 {
    REFLECTOR_THICKNESS
}

impl Reflector {
    pub fn segment(from: [f64; 2], to: [f64; 2]) -> Self {
        Self { from, to, speed: REFLECTOR_SPEED, thickness: REFLECTOR_THICKNESS }
    }

    pub fn distance(&self, x: f64, z: f64) -> f64 {
        let (ax, az) = (self.from[0], self.from[1]);
        let (dx, dz) = (self.to[0] - ax, self.to[1] - az);
        let len2 = dx * dx + dz * dz;
        let s = if len2 == 0.0 { 0.0 } else { (((x - ax) * dx + (z - az) * dz) / len2).clamp(0.0, 1.0) };
        ((x - ax - s * dx).powi(2) + (z - az - s * dz).powi(2)).sqrt()
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        self.distance(x, z) <= 0.5 * self.thickness + 1e-9
    }

    /// Range interval covered by the centerline.
    pub fn ranges(&self) -> (f64, f64) {
        (self.from[1].min(self.to[1]), self.from[1].max(self.to[1]))
    }
}

/// Fully resolved geometry and acquisition parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Domain `[0, width] × [0, depth]`; the sound-hard face is `z = 0`,
    /// the sound-soft walls are `x = 0`, `x = width` and `z = depth`.
    pub width: f64,
    pub depth: f64,
    pub h: f64,
    pub reflectors: Vec<Reflector>,
    pub m: usize,
    pub aperture: f64,
    /// Left end of the full array.
    pub array_start: f64,
    /// Fraction of the full aperture kept, centered; sensor spacing is unchanged.
    #[serde(default = "one")]
    pub aperture_fraction: f64,
    /// `τ = tau_factor · π / ω_c`.
    pub tau_factor: f64,
    pub n: usize,
    /// `B / ω_c`.
    #[serde(default = "quarter")]
    pub bandwidth_factor: f64,
    /// Depth of the strip below the array where `c = c_ref`.
    pub strip: f64,
    pub image_x: [f64; 2],
    pub image_z: [f64; 2],
    pub image_spacing: f64,
}

fn one() -> f64 {
    1.0
}

fn quarter() -> f64 {
    0.25
}

impl ScenarioSpec {
    pub fn preset(name: PresetName) -> Self {
        match name {
            PresetName::Waveguide => Self {
                name: "waveguide".into(),
                width: 32.0,
                depth: 11.0,
                h: 1.0 / 16.0,
                reflectors: vec![
                    Reflector::segment([11.0, 2.5], [21.0, 2.5]),
                    Reflector::segment([7.0, 3.75], [25.0, 3.75]),
                    Reflector::segment([3.0, 2.5], [6.0, 4.5]),
                    Reflector::segment([28.0, 2.5], [28.0, 4.5]),
                ],
                m: 49,
                aperture: 30.0,
                array_start: 1.0,
                aperture_fraction: 1.0,
                tau_factor: 0.4,
                n: 46,
                bandwidth_factor: 0.25,
                strip: 0.5,
                image_x: [0.5, 31.5],
                image_z: [1.5, 6.0],
                image_spacing: 0.125,
            },
            PresetName::Halfspace => Self {
                name: "halfspace".into(),
                width: 38.0,
                depth: 11.0,
                h: 1.0 / 16.0,
                reflectors: vec![
                    Reflector::segment([13.0, 3.0], [17.0, 3.4]),
                    Reflector::segment([19.0, 4.0], [24.0, 4.0]),
                    Reflector::segment([15.0, 5.0], [17.5, 5.5]),
                ],
                m: 49,
                aperture: 18.0,
                array_start: 10.0,
                aperture_fraction: 1.0,
                tau_factor: 0.42,
                n: 53,
                bandwidth_factor: 0.25,
                strip: 0.5,
                image_x: [8.0, 30.0],
                image_z: [1.5, 7.0],
                image_spacing: 0.125,
            },
            PresetName::Homogeneous => Self {
                reflectors: vec![],
                name: "homogeneous".into(),
                ..Self::preset(PresetName::Waveguide)
            },
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau_factor * std::f64::consts::PI / OMEGA_C
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{what} must be positive, got {v}")))
            }
        };
        pos(self.width, "width")?;
        pos(self.depth, "depth")?;
        pos(self.h, "grid spacing")?;
        pos(self.tau_factor, "tau_factor")?;
        pos(self.bandwidth_factor, "bandwidth_factor")?;
        pos(self.image_spacing, "image spacing")?;
        if self.m == 0 || self.n == 0 {
            return Err(Error::config("m and n must be positive"));
        }
        if !(self.aperture_fraction > 0.0 && self.aperture_fraction <= 1.0) {
            return Err(Error::config("aperture_fraction must lie in (0, 1]"));
        }
        if self.array_start < 0.0 || self.array_start + self.aperture > self.width {
            return Err(Error::config("array does not fit inside the domain"));
        }
        for r in &self.reflectors {
            pos(r.speed, "reflector speed")?;
            pos(r.thickness, "reflector thickness")?;
            if r.ranges().0 - 0.5 * r.thickness <= self.strip {
                return Err(Error::config("reflector intrudes into the sensor strip"));
            }
        }
        Ok(())
    }

    /// Indices of the centered sensor subset spanning `aperture_fraction` of the array.
    pub fn kept_sensors(&self) -> Vec<usize> {
        let intervals = self.m.saturating_sub(1);
        let keep = ((intervals as f64) * self.aperture_fraction).round() as usize;
        let first = (intervals - keep) / 2;
        (first..=first + keep).collect()
    }

    pub fn build<T: Real>(&self) -> Result<Scenario<T>> {
        self.validate()?;
        let h = self.h;
        let nx = (self.width / h).round() as usize;
        let nz = (self.depth / h).round() as usize;
        if ((nx as f64) * h - self.width).abs() > 1e-9 || ((nz as f64) * h - self.depth).abs() > 1e-9 {
            return Err(Error::config("domain size must be a multiple of the grid spacing"));
        }
        // x nodes at h..width−h, z nodes at h/2..depth−h/2: walls land where configured.
        let grid = Grid::new(nx - 1, nz, T::lit(h), T::lit(h), T::lit(0.5 * h))?;
        let mut c = vec![T::one(); grid.len()];
        for (idx, v) in c.iter_mut().enumerate() {
            let (x, z) = grid.coords(idx);
            for r in &self.reflectors {
                if r.contains(x.f64(), z.f64()) {
                    *v = T::lit(r.speed);
                }
            }
        }
        let medium = Medium::new(grid, c, vec![T::one(); grid.len()], Boundary::accessible_top(), T::lit(self.strip))?;
        let full = ArrayGeometry::linear(
            &medium,
            self.m,
            T::lit(self.array_start),
            T::lit(self.aperture),
            T::lit(0.5 * h),
        )?;
        let kept = self.kept_sensors();
        let mut array = full.subset(&kept);
        let step = if self.m > 1 { self.aperture / (self.m - 1) as f64 } else { 0.0 };
        array.aperture = T::lit(step * (kept.len() - 1) as f64);
        let pulse = Pulse::new(T::lit(OMEGA_C), T::lit(self.bandwidth_factor * OMEGA_C))?;
        let image_grid = ImagingGrid::covering(
            grid,
            (T::lit(self.image_x[0]), T::lit(self.image_x[1])),
            (T::lit(self.image_z[0]), T::lit(self.image_z[1])),
            T::lit(self.image_spacing),
        )?;
        Ok(Scenario { spec: self.clone(), medium, array, pulse, tau: T::lit(self.tau()), n: self.n, image_grid })
    }
}

/// Everything a pipeline run needs, discretized.
#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub spec: ScenarioSpec,
    pub medium: Medium<T>,
    pub array: ArrayGeometry<T>,
    pub pulse: Pulse<T>,
    pub tau: T,
    pub n: usize,
    pub image_grid: ImagingGrid<T>,
}

impl<T: Real> Scenario<T> {
    pub fn reference(&self) -> Medium<T> {
        self.medium.reference()
    }
}

pub fn preset_scenario<T: Real>(name: &str) -> Result<Scenario<T>> {
    ScenarioSpec::preset(name.parse()?).build()
}
