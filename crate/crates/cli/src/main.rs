//! `colonforge` command-line tool.
//!
//! Exit codes: 0 success, 1 generation or evaluation failure, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use colonforge::config::GenerationConfig;
use colonforge::export::{DatasetLayout, ExportError};
use colonforge::metrics::{evaluate_dirs, DEFAULT_THRESHOLD};
use colonforge::pipeline::{generate_dataset, inspect};

const WORKERS_ENV: &str = "COLONFORGE_WORKERS";

#[derive(Parser)]
#[command(name = "colonforge", version, about = "Synthetic colonoscopy dataset generator and mask evaluator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset of renders, masks, depth maps and meshes.
    Generate {
        /// TOML config; defaults are used for anything it leaves out.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (must be empty or absent).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        resolution: Option<u32>,
        /// Worker threads. Falls back to the config, then $COLONFORGE_WORKERS, then all cores.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print a summary of one generated sample.
    Inspect {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        index: usize,
    },
    /// Score predicted masks against ground truth with mean Dice and IoU.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = parse_threshold)]
        threshold: f64,
        /// JSON report path; a text table is written next to it with a .txt extension.
        #[arg(long)]
        report: PathBuf,
        /// Column heading for the table (defaults to the ground-truth directory name).
        #[arg(long)]
        dataset_name: Option<String>,
    },
    /// Print the default generation config as TOML.
    DefaultConfig,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&t) {
        Ok(t)
    } else {
        Err(format!("threshold must be in [0, 1], got {t}"))
    }
}

enum Failure {
    Usage(anyhow::Error),
    Failed(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Failed(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            config,
            out,
            count,
            seed,
            resolution,
            workers,
        } => {
            let mut cfg = match &config {
                Some(path) => GenerationConfig::load(path).map_err(|e| Failure::Usage(e.into()))?,
                None => GenerationConfig::default(),
            };
            if let Some(n) = count {
                cfg.count = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = resolution {
                cfg.resolution = r;
            }
            cfg.workers = workers.or(cfg.workers).or(workers_from_env().map_err(Failure::Usage)?);
            let layout = DatasetLayout::new(&out);
            let manifest = generate_dataset(&cfg, &layout).with_context(|| format!("generating into {}", out.display()))?;
            let rejected: usize = manifest.samples.iter().map(|r| r.rejected_attempts).sum();
            println!(
                "wrote {} samples at {}x{} to {} ({} rejected attempts)",
                manifest.len(),
                manifest.resolution,
                manifest.resolution,
                out.display(),
                rejected
            );
            Ok(())
        }
        Command::Inspect { dataset, index } => {
            let layout = DatasetLayout::new(&dataset);
            match inspect(&layout, index) {
                Ok(summary) => {
                    print!("{summary}");
                    Ok(())
                }
                Err(e @ ExportError::IndexOutOfRange { .. }) => Err(Failure::Usage(e.into())),
                Err(e) => Err(Failure::Failed(e.into())),
            }
        }
        Command::Evaluate {
            pred,
            gt,
            threshold,
            report,
            dataset_name,
        } => {
            let result = evaluate_dirs(&pred, &gt, threshold)?;
            let dataset = dataset_name.unwrap_or_else(|| dir_label(&gt));
            let table = result.to_table(&dir_label(&pred), &dataset);
            std::fs::write(&report, result.to_canonical_json()).with_context(|| format!("writing {}", report.display()))?;
            let table_path = report.with_extension("txt");
            std::fs::write(&table_path, &table).with_context(|| format!("writing {}", table_path.display()))?;
            print!("{table}");
            Ok(())
        }
        Command::DefaultConfig => {
            print!("{}", GenerationConfig::default().to_toml_string());
            Ok(())
        }
    }
}

fn workers_from_env() -> Result<Option<usize>, anyhow::Error> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("{WORKERS_ENV}={v:?} is not a count"))?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn dir_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
