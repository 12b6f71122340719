use std::path::Path;
use std::process::{Command, Output};

use colonforge::export::{read_manifest, DatasetLayout};
use colonforge::metrics::MetricsReport;
use colonforge::GenerationConfig;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colonforge"))
        .args(args)
        .env_remove("COLONFORGE_WORKERS")
        .output()
        .unwrap()
}

fn small_dataset(out: &Path) {
    let o = run(&["generate", "--out", out.to_str().unwrap(), "--count", "2", "--seed", "3", "--resolution", "80"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn inspect_reports_manifest_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    small_dataset(&out);
    let manifest = read_manifest(&DatasetLayout::new(&out)).unwrap();
    assert_eq!(manifest.len(), 2);

    let o = run(&["inspect", "--dataset", out.to_str().unwrap(), "--index", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let record = &manifest.samples[1];
    assert!(text.contains("index: 1\n"));
    assert!(text.contains(&format!("polyp_pixel_count: {}\n", record.polyp_pixel_count)));
    assert!(text.contains(&format!("placement_mode: {}\n", record.placement_mode)));
    assert!(text.contains(&format!("colon_faces: {}\n", record.colon_faces)));
    assert!(text.contains("polyp_faces: 16384\n"));
    assert!(text.contains("resolution: 80x80\n"));
    assert!(text.contains(&format!("mask: {}\n", record.mask)));

    let o = run(&["inspect", "--dataset", out.to_str().unwrap(), "--index", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of range"));
}

#[test]
fn evaluate_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    small_dataset(&out);
    let masks = out.join("masks");
    let report = dir.path().join("report.json");
    let o = run(&[
        "evaluate",
        "--pred",
        masks.to_str().unwrap(),
        "--gt",
        masks.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--dataset-name",
        "synthetic",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let parsed: MetricsReport = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed.image_count, 2);
    assert_eq!(parsed.mean_dice, 1.0);
    assert_eq!(parsed.mean_iou, 1.0);
    let table = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), table);
    assert!(table.contains("synthetic"));
}

#[test]
fn evaluate_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred");
    let gt = dir.path().join("gt");
    std::fs::create_dir_all(&pred).unwrap();
    std::fs::create_dir_all(&gt).unwrap();
    image::GrayImage::new(4, 4).save(pred.join("a.png")).unwrap();
    let report = dir.path().join("r.json");
    let o = run(&["evaluate", "--pred", pred.to_str().unwrap(), "--gt", gt.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a.png"));
    assert!(!report.exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["generate"]).status.code(), Some(2));
    assert_eq!(run(&["inspect", "--dataset", "x", "--index", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["evaluate", "--pred", "a", "--gt", "b", "--report", "c", "--threshold", "1.5"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nbogus = 3\n").unwrap();
    let o = run(&["generate", "--config", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn non_empty_output_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("keep.txt"), "x").unwrap();
    let o = run(&["generate", "--out", dir.path().to_str().unwrap(), "--count", "1", "--resolution", "64"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("keep.txt").exists());
}

#[test]
fn default_config_round_trips() {
    let o = run(&["default-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(GenerationConfig::from_toml_str(&text).unwrap(), GenerationConfig::default());
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "schema_version = 1\nseed = 5\nresolution = 64\n[colon]\nradial_segments = 20\nrings = 12\n").unwrap();
    let out = dir.path().join("ds");
    let o = run(&["generate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--count", "1", "--workers", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = read_manifest(&DatasetLayout::new(&out)).unwrap();
    assert_eq!(manifest.global_seed, 5);
    assert_eq!(manifest.resolution, 64);
    assert_eq!(manifest.samples[0].colon_faces, 2 * 20 * 12);
    assert!(!std::fs::read_to_string(out.join("manifest.json")).unwrap().contains("workers"));
}
