//! Dice and IoU over binary masks, and directory-level evaluation.
//!
//! When prediction and ground truth are both empty there is nothing to
//! disagree on, and both scores are 1.0.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::export::canonical_json;
use crate::mask::Mask;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const EMPTY_MASK_CONVENTION: &str = "both masks empty scores 1.0";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{name}: prediction is {pred:?} but ground truth is {gt:?}")]
    Shape { name: String, pred: (u32, u32), gt: (u32, u32) },
    #[error("unpaired files: {}", .orphans.join(", "))]
    Pairing { orphans: Vec<String> },
    #[error("no images found in {0}")]
    Empty(PathBuf),
    #[error("cannot read {path}: {reason}")]
    Read { path: PathBuf, reason: String },
}

/// Pixel tallies for one prediction / ground-truth pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn dice(&self) -> f64 {
        dice(self)
    }

    pub fn iou(&self) -> f64 {
        iou(self)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Counts with prediction and ground truth exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            fp: self.fn_,
            fn_: self.fp,
            ..*self
        }
    }
}

/// `2 tp / (2 tp + fp + fn)`
pub fn dice(c: &ConfusionCounts) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    }
}

/// `tp / (tp + fp + fn)`
pub fn iou(c: &ConfusionCounts) -> f64 {
    let denom = c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        c.tp as f64 / denom as f64
    }
}

/// Pixel is set iff its normalized gray value is `>= threshold`.
/// 16-bit images normalize by 65535, everything else by 255 after conversion to gray.
pub fn binarize(image: &DynamicImage, threshold: f64) -> Mask {
    use image::ColorType::*;
    let (w, h) = (image.width(), image.height());
    match image.color() {
        L16 | La16 | Rgb16 | Rgba16 => {
            let gray = image.to_luma16();
            let bits = gray.pixels().map(|p| p.0[0] as f64 / 65535.0 >= threshold).collect();
            Mask::from_bits(w, h, bits).expect("sized from image")
        }
        _ => {
            let gray = image.to_luma8();
            let bits = gray.pixels().map(|p| p.0[0] as f64 / 255.0 >= threshold).collect();
            Mask::from_bits(w, h, bits).expect("sized from image")
        }
    }
}

pub fn confusion(pred: &Mask, gt: &Mask) -> Result<ConfusionCounts, MetricsError> {
    if pred.dimensions() != gt.dimensions() {
        return Err(MetricsError::Shape {
            name: String::new(),
            pred: pred.dimensions(),
            gt: gt.dimensions(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub name: String,
    pub dice: f64,
    pub iou: f64,
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub images: Vec<ImageScore>,
    pub mean_dice: f64,
    pub mean_iou: f64,
    pub image_count: usize,
    pub threshold: f64,
    pub empty_mask_convention: String,
}

impl MetricsReport {
    /// Unweighted per-image means; `scores` are sorted by name first.
    pub fn from_scores(mut scores: Vec<ImageScore>, threshold: f64) -> Self {
        scores.sort_by(|a, b| a.name.cmp(&b.name));
        let n = scores.len();
        let mean = |f: fn(&ImageScore) -> f64| if n == 0 { 0.0 } else { compensated_sum(scores.iter().map(f)) / n as f64 };
        Self {
            mean_dice: mean(|s| s.dice),
            mean_iou: mean(|s| s.iou),
            image_count: n,
            images: scores,
            threshold,
            empty_mask_convention: EMPTY_MASK_CONVENTION.to_string(),
        }
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }

    /// Aligned text table with one mDice/mIoU column pair for `dataset`.
    pub fn to_table(&self, method: &str, dataset: &str) -> String {
        let width = method.len().max(6);
        let col = dataset.len().max(15);
        let mut out = String::new();
        out.push_str(&format!("{:width$}  {:^col$}\n", "", dataset));
        out.push_str(&format!("{:width$}  {:^col$}\n", "", format!("{:<7} {:<7}", "mDice", "mIoU")));
        out.push_str(&format!("{:width$}  {:^col$}\n", method, format!("{:<7.3} {:<7.3}", self.mean_dice, self.mean_iou)));
        out.push_str(&format!("({} images, threshold {}, {})\n", self.image_count, self.threshold, self.empty_mask_convention));
        out
    }
}

/// Neumaier summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

const IMAGE_EXTENSIONS: [&str; 6] = ["png", "jpg", "jpeg", "bmp", "tif", "tiff"];

fn list_images(dir: &Path) -> Result<BTreeMap<String, PathBuf>, MetricsError> {
    let entries = std::fs::read_dir(dir).map_err(|e| MetricsError::Read {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| MetricsError::Read {
            path: dir.to_path_buf(),
            reason: e.to_string(),
        })?;
        let path = entry.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if path.is_file() && is_image {
            out.insert(entry.file_name().to_string_lossy().into_owned(), path);
        }
    }
    Ok(out)
}

fn load(path: &Path) -> Result<DynamicImage, MetricsError> {
    image::open(path).map_err(|e| MetricsError::Read {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Scores every same-named image pair in the two directories.
pub fn evaluate_dirs(pred_dir: &Path, gt_dir: &Path, threshold: f64) -> Result<MetricsReport, MetricsError> {
    let preds = list_images(pred_dir)?;
    let gts = list_images(gt_dir)?;
    let mut orphans: Vec<String> = preds
        .keys()
        .filter(|k| !gts.contains_key(*k))
        .map(|k| format!("{} (prediction only)", k))
        .chain(gts.keys().filter(|k| !preds.contains_key(*k)).map(|k| format!("{} (ground truth only)", k)))
        .collect();
    if !orphans.is_empty() {
        orphans.sort();
        return Err(MetricsError::Pairing { orphans });
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty(gt_dir.to_path_buf()));
    }

    let scores = preds
        .par_iter()
        .map(|(name, pred_path)| {
            let pred = binarize(&load(pred_path)?, threshold);
            let gt = binarize(&load(&gts[name])?, threshold);
            let counts = confusion(&pred, &gt).map_err(|e| match e {
                MetricsError::Shape { pred, gt, .. } => MetricsError::Shape { name: name.clone(), pred, gt },
                other => other,
            })?;
            Ok(ImageScore {
                name: name.clone(),
                dice: counts.dice(),
                iou: counts.iou(),
                counts,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    Ok(MetricsReport::from_scores(scores, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage, ImageBuffer, Luma};

    fn counts(tp: u64, fp: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, fn_, tn: 0 }
    }

    #[test]
    fn worked_values() {
        assert_eq!(dice(&counts(2, 1, 1)), 2.0 / 3.0);
        assert_eq!(iou(&counts(2, 1, 1)), 0.5);
        assert_eq!(dice(&counts(0, 0, 0)), 1.0);
        assert_eq!(iou(&counts(0, 0, 0)), 1.0);
        assert_eq!(dice(&counts(0, 5, 0)), 0.0);
    }

    #[test]
    fn binarize_thresholds() {
        let zeros = DynamicImage::ImageLuma8(GrayImage::new(4, 4));
        assert_eq!(binarize(&zeros, 0.5).count(), 0);
        let full = DynamicImage::ImageLuma8(GrayImage::from_pixel(4, 4, Luma([255])));
        assert_eq!(binarize(&full, 0.5).count(), 16);
        let mid = DynamicImage::ImageLuma8(GrayImage::from_pixel(1, 1, Luma([128])));
        assert_eq!(binarize(&mid, 0.5).count(), 1);
        let below = DynamicImage::ImageLuma8(GrayImage::from_pixel(1, 1, Luma([127])));
        assert_eq!(binarize(&below, 0.5).count(), 0);
        let wide: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_pixel(2, 2, Luma([32768]));
        assert_eq!(binarize(&DynamicImage::ImageLuma16(wide), 0.5).count(), 4);
    }

    #[test]
    fn confusion_extremes() {
        let ones = Mask::from_fn(5, 4, |_, _| true);
        let zeros = Mask::empty(5, 4);
        assert_eq!(confusion(&ones, &ones).unwrap(), ConfusionCounts { tp: 20, fp: 0, fn_: 0, tn: 0 });
        assert_eq!(confusion(&ones, &zeros).unwrap().fp, 20);
        assert_eq!(confusion(&zeros, &ones).unwrap().fn_, 20);
    }

    #[test]
    fn shape_mismatch_names_both_sizes() {
        let err = confusion(&Mask::empty(3, 4), &Mask::empty(4, 3)).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("(3, 4)") && text.contains("(4, 3)"));
    }

    #[test]
    fn compensated_sum_is_order_independent() {
        let values: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64).powf(1.3)).collect();
        let forward = compensated_sum(values.iter().copied());
        let backward = compensated_sum(values.iter().rev().copied());
        assert!((forward - backward).abs() < 1e-15);
    }

    #[test]
    fn report_table_mentions_means() {
        let report = MetricsReport::from_scores(
            vec![
                ImageScore { name: "b.png".into(), dice: 0.5, iou: 1.0 / 3.0, counts: counts(1, 1, 1) },
                ImageScore { name: "a.png".into(), dice: 1.0, iou: 1.0, counts: counts(3, 0, 0) },
            ],
            0.5,
        );
        assert_eq!(report.images[0].name, "a.png");
        assert_eq!(report.mean_dice, 0.75);
        let table = report.to_table("model", "CVC-T");
        assert!(table.contains("mDice") && table.contains("0.750") && table.contains("CVC-T"));
    }
}
