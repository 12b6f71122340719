//! On-disk dataset layout.
//!
//! ```text
//! root/
//!   manifest.json
//!   images/00000.png      8-bit RGB render
//!   masks/00000.png       8-bit gray, polyp = 255
//!   depth/00000.png       16-bit gray, near..far -> 0..65535
//!   meshes/00000_colon.obj
//!   meshes/00000_polyp.obj
//!   realistic/            written by the domain-adaptation stage
//! ```

mod manifest;
mod obj;

use std::collections::BTreeSet;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use thiserror::Error;

pub use manifest::{canonical_json, read_manifest, write_manifest, DepthEncoding, Manifest, SampleRecord, DEPTH_FORMAT, MANIFEST_SCHEMA_VERSION};
pub use obj::{obj_string, parse_obj, read_obj, write_obj, ObjMesh};

use crate::mask::Mask;
use crate::render::{DepthMap, RenderOutput};
use crate::scene::SceneSample;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("invalid sample data: {0}")]
    Data(String),
    #[error("manifest schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("sample index {index} is out of range (dataset has {count} samples)")]
    IndexOutOfRange { index: usize, count: usize },
}

pub const SUBDIRS: [&str; 5] = ["images", "masks", "depth", "meshes", "realistic"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetLayout {
    root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn create_dirs(&self) -> Result<(), ExportError> {
        for dir in std::iter::once(self.root.clone()).chain(SUBDIRS.iter().map(|d| self.root.join(d))) {
            std::fs::create_dir_all(&dir).map_err(|source| ExportError::Write { path: dir, source })?;
        }
        Ok(())
    }

    pub fn stem(index: usize) -> String {
        format!("{index:05}")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    /// Root-relative paths, always with forward slashes.
    pub fn relative_paths(index: usize) -> SamplePaths {
        let stem = Self::stem(index);
        SamplePaths {
            image: format!("images/{stem}.png"),
            mask: format!("masks/{stem}.png"),
            depth: format!("depth/{stem}.png"),
            colon_obj: format!("meshes/{stem}_colon.obj"),
            polyp_obj: format!("meshes/{stem}_polyp.obj"),
            realistic: format!("realistic/{stem}.png"),
        }
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        relative.split('/').fold(self.root.clone(), |p, part| p.join(part))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePaths {
    pub image: String,
    pub mask: String,
    pub depth: String,
    pub colon_obj: String,
    pub polyp_obj: String,
    pub realistic: String,
}

pub fn quantize_depth(depth: f64, near: f64, far: f64) -> u16 {
    let s = ((depth - near) / (far - near)).clamp(0.0, 1.0);
    (s * u16::MAX as f64).round() as u16
}

pub fn dequantize_depth(code: u16, near: f64, far: f64) -> f64 {
    near + (code as f64 / u16::MAX as f64) * (far - near)
}

fn encode_png(image: DynamicImage, path: &Path) -> Result<(), ExportError> {
    let mut bytes = Vec::new();
    image
        .write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .map_err(|e| ExportError::Write {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
    std::fs::write(path, bytes).map_err(|source| ExportError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn decode_png(path: &Path) -> Result<DynamicImage, ExportError> {
    image::open(path).map_err(|e| ExportError::Read {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn depth_to_image(depth: &DepthMap) -> Result<ImageBuffer<Luma<u16>, Vec<u16>>, ExportError> {
    if let Some(bad) = depth.values().iter().position(|d| !d.is_finite()) {
        return Err(ExportError::Data(format!("non-finite depth at pixel {bad}")));
    }
    let codes = depth
        .values()
        .iter()
        .map(|&d| quantize_depth(d, depth.near(), depth.far()))
        .collect();
    Ok(ImageBuffer::from_raw(depth.width(), depth.height(), codes).expect("buffer sized from the map"))
}

/// Writes image, mask, depth and both meshes for one accepted sample.
/// The returned record has `rejected_attempts = 0`; the caller fills it in.
pub fn write_sample(layout: &DatasetLayout, index: usize, output: &RenderOutput, scene: &SceneSample) -> Result<SampleRecord, ExportError> {
    let paths = DatasetLayout::relative_paths(index);
    let depth = depth_to_image(output.depth())?;
    encode_png(DynamicImage::ImageRgb8(output.color().clone()), &layout.resolve(&paths.image))?;
    encode_png(DynamicImage::ImageLuma8(output.mask().to_image()), &layout.resolve(&paths.mask))?;
    encode_png(DynamicImage::ImageLuma16(depth), &layout.resolve(&paths.depth))?;
    write_obj(scene.colon.mesh(), "colon", &layout.resolve(&paths.colon_obj))?;
    write_obj(scene.polyp.mesh(), "polyp", &layout.resolve(&paths.polyp_obj))?;
    Ok(SampleRecord {
        index,
        image: paths.image,
        mask: paths.mask,
        depth: paths.depth,
        colon_obj: paths.colon_obj,
        polyp_obj: paths.polyp_obj,
        realistic: None,
        polyp_pixel_count: output.polyp_pixel_count(),
        placement_mode: scene.placement,
        colon_faces: scene.colon.mesh().triangle_count(),
        polyp_faces: scene.polyp.mesh().triangle_count(),
        rejected_attempts: 0,
    })
}

/// A sample read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedSample {
    pub record: SampleRecord,
    pub output: RenderOutput,
    /// Raw 16-bit depth codes.
    pub depth_codes: Vec<u16>,
    pub colon: ObjMesh,
    pub polyp: ObjMesh,
}

pub fn read_sample(layout: &DatasetLayout, index: usize) -> Result<LoadedSample, ExportError> {
    let manifest = read_manifest(layout)?;
    let record = manifest.record(index)?.clone();
    let enc = &manifest.depth_encoding;

    let image_path = layout.resolve(&record.image);
    let color = match decode_png(&image_path)? {
        DynamicImage::ImageRgb8(img) => img,
        other => return Err(wrong_type(&image_path, "8-bit RGB", &other)),
    };
    let mask_path = layout.resolve(&record.mask);
    let mask = match decode_png(&mask_path)? {
        DynamicImage::ImageLuma8(img) => Mask::from_image(&img).map_err(|reason| ExportError::Read {
            path: mask_path.clone(),
            reason,
        })?,
        other => return Err(wrong_type(&mask_path, "8-bit grayscale", &other)),
    };
    let depth_path = layout.resolve(&record.depth);
    let depth_codes = match decode_png(&depth_path)? {
        DynamicImage::ImageLuma16(img) => img.into_raw(),
        other => return Err(wrong_type(&depth_path, "16-bit grayscale", &other)),
    };
    let depth = DepthMap::new(
        color.width(),
        color.height(),
        enc.near,
        enc.far,
        depth_codes.iter().map(|&c| dequantize_depth(c, enc.near, enc.far)).collect(),
    )
    .ok_or_else(|| ExportError::Read {
        path: depth_path.clone(),
        reason: "depth size differs from image size".into(),
    })?;
    let output = RenderOutput::from_parts(color, mask, depth).map_err(|reason| ExportError::Read {
        path: mask_path.clone(),
        reason,
    })?;
    let colon = read_obj(&layout.resolve(&record.colon_obj))?;
    let polyp = read_obj(&layout.resolve(&record.polyp_obj))?;
    Ok(LoadedSample {
        record,
        output,
        depth_codes,
        colon,
        polyp,
    })
}

fn wrong_type(path: &Path, expected: &str, found: &DynamicImage) -> ExportError {
    ExportError::Read {
        path: path.to_path_buf(),
        reason: format!("expected {expected} PNG, found {:?}", found.color()),
    }
}

/// Checks that the files under the layout are exactly those the manifest names.
pub fn verify_layout(layout: &DatasetLayout, manifest: &Manifest) -> Result<(), ExportError> {
    let mut expected = BTreeSet::new();
    for r in &manifest.samples {
        expected.extend([&r.image, &r.mask, &r.depth, &r.colon_obj, &r.polyp_obj].map(String::clone));
        if let Some(real) = &r.realistic {
            expected.insert(real.clone());
        }
    }
    let mut found = BTreeSet::new();
    for dir in SUBDIRS {
        let path = layout.root.join(dir);
        let entries = std::fs::read_dir(&path).map_err(|e| ExportError::Read {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        for entry in entries {
            let entry = entry.map_err(|e| ExportError::Read {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            found.insert(format!("{dir}/{}", entry.file_name().to_string_lossy()));
        }
    }
    if let Some(missing) = expected.difference(&found).next() {
        return Err(ExportError::Data(format!("manifest names {missing} but it is not on disk")));
    }
    if let Some(extra) = found.difference(&expected).next() {
        return Err(ExportError::Data(format!("{extra} is on disk but not in the manifest")));
    }
    Ok(())
}
