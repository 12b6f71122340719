use serde::{Deserialize, Serialize};

use super::{DatasetLayout, ExportError};
use crate::config::GenerationConfig;
use crate::mesh::PlacementMode;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const DEPTH_FORMAT: &str = "png-gray16-linear";

/// How depth PNGs map back to scene units: `near + code / max_code * (far - near)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthEncoding {
    pub format: String,
    pub near: f64,
    pub far: f64,
    pub max_code: u16,
}

impl DepthEncoding {
    pub fn new(near: f64, far: f64) -> Self {
        Self {
            format: DEPTH_FORMAT.to_string(),
            near,
            far,
            max_code: u16::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub image: String,
    pub mask: String,
    pub depth: String,
    pub colon_obj: String,
    pub polyp_obj: String,
    /// Filled in by the domain-adaptation stage.
    pub realistic: Option<String>,
    pub polyp_pixel_count: usize,
    pub placement_mode: PlacementMode,
    pub colon_faces: usize,
    pub polyp_faces: usize,
    pub rejected_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub generator: String,
    pub global_seed: u64,
    pub resolution: u32,
    pub config: GenerationConfig,
    pub depth_encoding: DepthEncoding,
    pub samples: Vec<SampleRecord>,
    /// Version stamp of the tool that filled `realistic`, if any.
    pub bridge_version: Option<String>,
}

impl Manifest {
    pub fn new(config: &GenerationConfig, samples: Vec<SampleRecord>) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            generator: format!("colonforge {}", env!("CARGO_PKG_VERSION")),
            global_seed: config.seed,
            resolution: config.resolution,
            config: config.clone(),
            depth_encoding: DepthEncoding::new(config.camera.near, config.camera.far),
            samples,
            bridge_version: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn record(&self, index: usize) -> Result<&SampleRecord, ExportError> {
        self.samples.get(index).ok_or(ExportError::IndexOutOfRange {
            index,
            count: self.samples.len(),
        })
    }

    /// Pretty JSON with object keys sorted, ending in a newline.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or("missing schema_version")?;
        if version != MANIFEST_SCHEMA_VERSION as u64 {
            return Err(format!("schema version {version} is not supported (expected {MANIFEST_SCHEMA_VERSION})"));
        }
        let manifest: Manifest = serde_json::from_value(value).map_err(|e| e.to_string())?;
        for (i, r) in manifest.samples.iter().enumerate() {
            if r.index != i {
                return Err(format!("sample indices are not dense: position {i} holds index {}", r.index));
            }
        }
        Ok(manifest)
    }
}

/// Serializes through `serde_json::Value`, whose maps are key-sorted.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("serializable");
    let mut text = serde_json::to_string_pretty(&value).expect("serializable");
    text.push('\n');
    text
}

pub fn write_manifest(layout: &DatasetLayout, manifest: &Manifest) -> Result<(), ExportError> {
    let path = layout.manifest_path();
    std::fs::write(&path, manifest.to_canonical_json()).map_err(|source| ExportError::Write { path, source })
}

pub fn read_manifest(layout: &DatasetLayout) -> Result<Manifest, ExportError> {
    let path = layout.manifest_path();
    let text = std::fs::read_to_string(&path).map_err(|e| ExportError::Read {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    Manifest::from_json(&text).map_err(|reason| {
        if reason.starts_with("schema version") {
            let found = serde_json::from_str::<serde_json::Value>(&text)
                .ok()
                .and_then(|v| v.get("schema_version")?.as_u64())
                .unwrap_or(0);
            ExportError::SchemaVersion {
                found: found.min(u32::MAX as u64) as u32,
                expected: MANIFEST_SCHEMA_VERSION,
            }
        } else {
            ExportError::Read { path, reason }
        }
    })
}
