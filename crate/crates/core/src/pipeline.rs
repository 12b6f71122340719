//! Batch generation: build → render → accept or retry → export, then the manifest.

use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, GenerationConfig};
use crate::export::{self, read_manifest, read_sample, write_manifest, DatasetLayout, ExportError, Manifest, SampleRecord};
use crate::mesh::MeshError;
use crate::render::accept_sample;
use crate::scene::build_scene;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("output directory {0} is not empty")]
    OutputNotEmpty(PathBuf),
    #[error(
        "sample {index}: no attempt accepted after {attempts} tries; last attempt had {}{last_polyp_pixels} polyp pixels, need {min_pixels}",
        if *.last_is_bound { "at most " } else { "" }
    )]
    RetriesExhausted {
        index: usize,
        attempts: usize,
        last_polyp_pixels: usize,
        /// The last attempt was rejected from its bounding-sphere footprint without a full render.
        last_is_bound: bool,
        min_pixels: usize,
    },
    #[error("sample {index}: {source}")]
    Mesh {
        index: usize,
        #[source]
        source: MeshError,
    },
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("cannot start worker pool: {0}")]
    Workers(String),
}

/// Generates `config.count` accepted samples under `layout` and writes the manifest last.
///
/// Sample `i` tries attempts `0, 1, ...` in order and keeps the first one whose
/// polyp covers enough pixels, so the output does not depend on worker count.
pub fn generate_dataset(config: &GenerationConfig, layout: &DatasetLayout) -> Result<Manifest, GenerateError> {
    config.validate()?;
    if let Ok(mut entries) = std::fs::read_dir(layout.root()) {
        if entries.next().is_some() {
            return Err(GenerateError::OutputNotEmpty(layout.root().to_path_buf()));
        }
    }
    layout.create_dirs()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| GenerateError::Workers(e.to_string()))?;
    let results: Vec<Result<SampleRecord, GenerateError>> =
        pool.install(|| (0..config.count).into_par_iter().map(|i| generate_sample(config, layout, i)).collect());
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let manifest = Manifest::new(config, records);
    write_manifest(layout, &manifest)?;
    Ok(manifest)
}

/// Runs the attempt loop for one index and writes the accepted sample.
pub fn generate_sample(config: &GenerationConfig, layout: &DatasetLayout, index: usize) -> Result<SampleRecord, GenerateError> {
    let min_pixels = config.effective_min_pixels();
    let mut last = (0, false);
    for attempt in 0..config.max_retries {
        let scene = match build_scene(config, index as u64, attempt as u32) {
            Ok(scene) => scene,
            Err(MeshError::Placement(_)) => {
                last = (0, false);
                continue;
            }
            Err(source) => return Err(GenerateError::Mesh { index, source }),
        };
        let bound = scene.polyp_pixel_bound();
        if bound < min_pixels {
            last = (bound, true);
            continue;
        }
        let output = scene.render();
        if accept_sample(&output, min_pixels) {
            let mut record = export::write_sample(layout, index, &output, &scene)?;
            record.rejected_attempts = attempt;
            return Ok(record);
        }
        last = (output.polyp_pixel_count(), false);
    }
    Err(GenerateError::RetriesExhausted {
        index,
        attempts: config.max_retries,
        last_polyp_pixels: last.0,
        last_is_bound: last.1,
        min_pixels,
    })
}

/// What `inspect` reports about one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub root: PathBuf,
    pub record: SampleRecord,
    pub resolution: u32,
    /// Nearest depth in the image.
    pub depth_min: f64,
    /// Farthest depth among pixels that hit geometry; `None` if nothing was hit.
    pub depth_max_hit: Option<f64>,
    pub far: f64,
}

impl fmt::Display for SampleSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.record;
        writeln!(f, "index: {}", r.index)?;
        writeln!(f, "root: {}", self.root.display())?;
        writeln!(f, "image: {}", r.image)?;
        writeln!(f, "mask: {}", r.mask)?;
        writeln!(f, "depth: {}", r.depth)?;
        writeln!(f, "colon_obj: {}", r.colon_obj)?;
        writeln!(f, "polyp_obj: {}", r.polyp_obj)?;
        writeln!(f, "realistic: {}", r.realistic.as_deref().unwrap_or("none"))?;
        writeln!(f, "resolution: {}x{}", self.resolution, self.resolution)?;
        writeln!(f, "polyp_pixel_count: {}", r.polyp_pixel_count)?;
        writeln!(f, "placement_mode: {}", r.placement_mode)?;
        writeln!(f, "colon_faces: {}", r.colon_faces)?;
        writeln!(f, "polyp_faces: {}", r.polyp_faces)?;
        writeln!(f, "rejected_attempts: {}", r.rejected_attempts)?;
        match self.depth_max_hit {
            Some(max) => writeln!(f, "depth_range: {:.4} .. {:.4} (far plane {})", self.depth_min, max, self.far),
            None => writeln!(f, "depth_range: none (far plane {})", self.far),
        }
    }
}

pub fn inspect(layout: &DatasetLayout, index: usize) -> Result<SampleSummary, ExportError> {
    let sample = read_sample(layout, index)?;
    let far = read_manifest(layout)?.depth_encoding.far;
    let depth = sample.output.depth();
    let depth_min = depth.values().iter().copied().fold(f64::INFINITY, f64::min);
    let depth_max_hit = sample
        .depth_codes
        .iter()
        .zip(depth.values())
        .filter(|(&code, _)| code < u16::MAX)
        .map(|(_, &d)| d)
        .reduce(f64::max);
    Ok(SampleSummary {
        root: layout.root().to_path_buf(),
        record: sample.record,
        resolution: sample.output.resolution(),
        depth_min,
        depth_max_hit,
        far,
    })
}
