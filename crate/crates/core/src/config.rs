//! TOML experiment configuration. Lengths are in central wavelengths and
//! times in units of `π/ω_c`, so every config is scale free.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::ImageKind;
use crate::scenario::{PresetName, ScenarioSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Norm,
    Ideal,
    Bp,
    Rtm,
    Ps,
}

impl Method {
    pub fn kind(self) -> ImageKind {
        match self {
            Method::Norm => ImageKind::Norm,
            Method::Ideal => ImageKind::Ideal,
            Method::Bp => ImageKind::Backprojection,
            Method::Rtm => ImageKind::Rtm,
            Method::Ps => ImageKind::PixelScan,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" => Ok(Method::Norm),
            "ideal" => Ok(Method::Ideal),
            "bp" => Ok(Method::Bp),
            "rtm" => Ok(Method::Rtm),
            "ps" => Ok(Method::Ps),
            other => Err(Error::config(format!("unknown imaging method '{other}'"))),
        }
    }
}

/// Either a preset name or a full inline spec, plus optional overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: Option<PresetName>,
    pub spec: Option<ScenarioSpec>,
    pub h: Option<f64>,
    pub m: Option<usize>,
    pub aperture_fraction: Option<f64>,
    pub tau_factor: Option<f64>,
    pub n: Option<usize>,
    pub bandwidth_factor: Option<f64>,
    /// Applied to every reflector.
    pub reflector_speed: Option<f64>,
    pub reflector_thickness: Option<f64>,
    pub image_spacing: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation as a fraction of the largest recorded value.
    #[serde(default)]
    pub fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationConfig {
    /// Clamp level relative to the largest mass eigenvalue; defaults depend on noise.
    pub lambda_min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagingConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Smoothing width of the range-derivative postprocessing; none skips it.
    #[serde(default = "default_sigma")]
    pub sigma: Option<f64>,
    /// Largest number of pixels a pixel-scan image may have.
    #[serde(default = "default_ps_budget")]
    pub ps_max_pixels: usize,
    /// Pixel-scan grid `[x0, x1, z0, z1, spacing]`; defaults to the imaging grid.
    pub ps_window: Option<[f64; 5]>,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Norm, Method::Bp, Method::Rtm]
}

fn default_sigma() -> Option<f64> {
    Some(0.05)
}

fn default_ps_budget() -> usize {
    64
}

impl Default for ImagingConfig {
    fn default() -> Self {
        Self { methods: default_methods(), sigma: default_sigma(), ps_max_pixels: default_ps_budget(), ps_window: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub csv: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub regularization: RegularizationConfig,
    #[serde(default)]
    pub imaging: ImagingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn preset(name: PresetName) -> Self {
        Self {
            scenario: ScenarioConfig { preset: Some(name), ..Default::default() },
            output: OutputConfig { dir: default_dir(), csv: false },
            ..Default::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    /// The scenario after applying overrides.
    pub fn scenario_spec(&self) -> Result<ScenarioSpec> {
        let s = &self.scenario;
        let mut spec = match (&s.preset, &s.spec) {
            (Some(_), Some(_)) => return Err(Error::config("give either scenario.preset or scenario.spec, not both")),
            (Some(p), None) => ScenarioSpec::preset(*p),
            (None, Some(spec)) => spec.clone(),
            (None, None) => return Err(Error::config("scenario.preset or scenario.spec is required")),
        };
        if let Some(v) = s.h {
            spec.h = v;
        }
        if let Some(v) = s.m {
            spec.m = v;
        }
        if let Some(v) = s.aperture_fraction {
            spec.aperture_fraction = v;
        }
        if let Some(v) = s.tau_factor {
            spec.tau_factor = v;
        }
        if let Some(v) = s.n {
            spec.n = v;
        }
        if let Some(v) = s.bandwidth_factor {
            spec.bandwidth_factor = v;
        }
        if let Some(v) = s.image_spacing {
            spec.image_spacing = v;
        }
        for r in spec.reflectors.iter_mut() {
            if let Some(v) = s.reflector_speed {
                r.speed = v;
            }
            if let Some(v) = s.reflector_thickness {
                r.thickness = v;
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario_spec()?;
        if !(self.noise.fraction >= 0.0 && self.noise.fraction.is_finite()) {
            return Err(Error::config("noise fraction must be non-negative"));
        }
        if let Some(l) = self.regularization.lambda_min {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::config("relative lambda_min must lie in (0, 1)"));
            }
        }
        if let Some(s) = self.imaging.sigma {
            if !(s > 0.0) {
                return Err(Error::config("sigma must be positive"));
            }
        }
        if self.imaging.methods.is_empty() {
            return Err(Error::config("no imaging methods requested"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [scenario]
            preset = "waveguide"
            h = 0.125
            [imaging]
            methods = ["norm", "rtm"]
            "#,
        )
        .unwrap();
        let spec = cfg.scenario_spec().unwrap();
        assert_eq!(spec.h, 0.125);
        assert_eq!(cfg.imaging.methods, vec![Method::Norm, Method::Rtm]);
        assert_eq!(cfg.imaging.sigma, Some(0.05));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml("[scenario]\npreset = \"waveguide\"\ntau_factor = -1.0\n").is_err());
        assert!(ExperimentConfig::from_toml("[scenario]\npreset = \"waveguide\"\n[imaging]\nmethods = [\"fancy\"]\n").is_err());
        assert!(ExperimentConfig::from_toml("[scenario]\n").is_err());
        assert!(ExperimentConfig::from_toml("[scenario]\npreset = \"waveguide\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::preset(PresetName::Halfspace);
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }
}
