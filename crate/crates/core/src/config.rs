//! Generation configuration, loaded from TOML.
//!
//! Every field has a default, so an empty file is a valid config. Unknown keys
//! are rejected to catch typos.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::PolypParams;
use crate::render::{scaled_min_pixels, MaterialParams, DEFAULT_MIN_POLYP_PIXELS, REFERENCE_RESOLUTION};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("config schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub schema_version: u32,
    /// Accepted samples to produce.
    pub count: usize,
    /// Square image side in pixels.
    pub resolution: u32,
    pub seed: u64,
    /// Minimum polyp pixels at 500x500; rescaled for other resolutions.
    pub min_polyp_pixels: usize,
    /// Attempts per sample index before generation gives up.
    pub max_retries: usize,
    /// Thread count. Never recorded in the manifest since it cannot change the output.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    pub colon: ColonConfig,
    pub polyp: PolypConfig,
    pub material: MaterialParams,
    pub lighting: LightingConfig,
    pub camera: CameraConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            count: 20_000,
            resolution: REFERENCE_RESOLUTION,
            seed: 0,
            min_polyp_pixels: DEFAULT_MIN_POLYP_PIXELS,
            max_retries: 50,
            workers: None,
            colon: ColonConfig::default(),
            polyp: PolypConfig::default(),
            material: MaterialParams::default(),
            lighting: LightingConfig::default(),
            camera: CameraConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColonConfig {
    pub radial_segments: usize,
    pub rings: usize,
    pub base_radius: f64,
    pub tip_radius: f64,
    pub length: f64,
    pub displacement_sigma: f64,
    /// Each bend offset component is drawn uniformly from `[-m, m]`.
    pub bend_magnitude: f64,
}

impl Default for ColonConfig {
    fn default() -> Self {
        Self {
            radial_segments: 30,
            rings: 41,
            base_radius: 1.0,
            tip_radius: 0.8,
            length: 6.0,
            displacement_sigma: 0.05,
            bend_magnitude: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolypConfig {
    pub radius_min: f64,
    pub radius_max: f64,
    pub longitude_bands: usize,
    pub latitude_rings: usize,
    pub distortion_amplitude: f64,
    pub distortion_frequency: f64,
    /// Probability of wall placement; the rest go in the lumen.
    pub wall_probability: f64,
}

impl Default for PolypConfig {
    fn default() -> Self {
        let p = PolypParams::default();
        Self {
            radius_min: 0.4,
            radius_max: 0.7,
            longitude_bands: p.longitude_bands,
            latitude_rings: p.latitude_rings,
            distortion_amplitude: p.distortion_amplitude,
            distortion_frequency: p.distortion_frequency,
            wall_probability: 0.5,
        }
    }
}

impl PolypConfig {
    pub fn params(&self, radius: f64) -> PolypParams {
        PolypParams {
            radius,
            longitude_bands: self.longitude_bands,
            latitude_rings: self.latitude_rings,
            distortion_amplitude: self.distortion_amplitude,
            distortion_frequency: self.distortion_frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightingConfig {
    pub ambient: f64,
    pub glare_intensity: f64,
    /// Lateral distance of each glare light from the camera, in base radii.
    pub glare_lateral: f64,
    /// Per-sample positional jitter of the glare lights.
    pub glare_jitter: f64,
    pub specular_strength: f64,
    pub shininess: f64,
    /// Intensity of each of the three negative lights (must be < 0).
    pub negative_intensity: f64,
    /// Axial position of the negative lights as a fraction of tube length.
    pub negative_depth_fraction: f64,
    /// Distance of each negative light from the centerline.
    pub negative_spread: f64,
    pub min_distance: f64,
}

impl Default for LightingConfig {
    fn default() -> Self {
        Self {
            ambient: 0.3,
            glare_intensity: 1.2,
            glare_lateral: 0.5,
            glare_jitter: 0.1,
            specular_strength: 0.5,
            shininess: 24.0,
            negative_intensity: -1.0,
            negative_depth_fraction: 0.95,
            negative_spread: 0.3,
            min_distance: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub vertical_fov_deg: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            vertical_fov_deg: 70.0,
            near: 0.05,
            far: 12.0,
        }
    }
}

impl GenerationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        // check the version before field-level parsing so old files fail clearly
        let raw: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if let Some(v) = raw.get("schema_version") {
            let found = v
                .as_integer()
                .ok_or_else(|| ConfigError::Parse("schema_version must be an integer".into()))?;
            if found != CONFIG_SCHEMA_VERSION as i64 {
                return Err(ConfigError::SchemaVersion {
                    found: found.clamp(0, u32::MAX as i64) as u32,
                    expected: CONFIG_SCHEMA_VERSION,
                });
            }
        }
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// Threshold in pixels at the configured resolution.
    pub fn effective_min_pixels(&self) -> usize {
        scaled_min_pixels(self.min_polyp_pixels, self.resolution)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion {
                found: self.schema_version,
                expected: CONFIG_SCHEMA_VERSION,
            });
        }
        if self.count == 0 {
            return invalid("count must be > 0".into());
        }
        if self.count > 100_000 {
            return invalid("count must fit five-digit file names (<= 100000)".into());
        }
        if self.resolution == 0 {
            return invalid("resolution must be > 0".into());
        }
        if self.max_retries == 0 {
            return invalid("max_retries must be > 0".into());
        }
        if self.workers == Some(0) {
            return invalid("workers must be > 0".into());
        }
        let pixels = self.resolution as usize * self.resolution as usize;
        if self.effective_min_pixels() > pixels {
            return invalid(format!(
                "min_polyp_pixels {} (scaled to {} at {}x{}) exceeds the {} pixels in an image",
                self.min_polyp_pixels,
                self.effective_min_pixels(),
                self.resolution,
                self.resolution,
                pixels
            ));
        }
        let p = &self.polyp;
        if !(p.radius_min > 0.0 && p.radius_min <= p.radius_max && p.radius_max.is_finite()) {
            return invalid(format!("need 0 < radius_min <= radius_max, got {} and {}", p.radius_min, p.radius_max));
        }
        if !(0.0..=1.0).contains(&p.wall_probability) {
            return invalid("wall_probability must be in [0, 1]".into());
        }
        self.polyp.params(p.radius_min).validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.colon.bend_magnitude >= 0.0 && self.colon.bend_magnitude.is_finite()) {
            return invalid("bend_magnitude must be >= 0".into());
        }
        crate::scene::colon_params(&self.colon, vec![nalgebra::Vector2::zeros(); crate::mesh::SEGMENT_COUNT])
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let l = &self.lighting;
        if !(l.negative_intensity < 0.0 && l.negative_intensity.is_finite()) {
            return invalid("negative_intensity must be < 0".into());
        }
        if !(l.glare_intensity > 0.0 && l.glare_intensity.is_finite()) {
            return invalid("glare_intensity must be > 0".into());
        }
        if !(l.ambient >= 0.0 && l.min_distance > 0.0 && l.shininess >= 0.0 && l.specular_strength >= 0.0) {
            return invalid("ambient, specular_strength and shininess must be >= 0 and min_distance > 0".into());
        }
        let c = &self.camera;
        if !(c.near > 0.0 && c.near < c.far && c.far.is_finite()) {
            return invalid(format!("need 0 < near < far, got near={} far={}", c.near, c.far));
        }
        if !(c.vertical_fov_deg > 0.0 && c.vertical_fov_deg < 180.0) {
            return invalid("vertical_fov_deg must be in (0, 180)".into());
        }
        let m = &self.material;
        if m.base_color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return invalid("base_color channels must be in [0, 1]".into());
        }
        if [m.hue_jitter_deg, m.saturation_jitter, m.value_jitter].iter().any(|j| !(j.is_finite() && *j >= 0.0)) {
            return invalid("jitter ranges must be >= 0".into());
        }
        Ok(())
    }
}
