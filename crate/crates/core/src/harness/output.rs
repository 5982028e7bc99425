use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentConfig, ExperimentResult, SweepSummary};
use crate::Result;

const SEED_RULE: &str = "trial t of sweep point s uses ChaCha8Rng::seed_from_u64(master_seed + t) on stream s";

/// JSON sidecar path for a main CSV path.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("json")
}

fn companion(output: &Path, suffix: &str) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    output.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a, S: Serialize> {
    config: &'a ExperimentConfig,
    seed_rule: &'a str,
    files: Vec<String>,
    summary: S,
}

#[derive(Serialize)]
struct CdfRow<'a> {
    arm: &'a str,
    eps: f64,
    cdf: f64,
}

fn sweep_rows(summary: &SweepSummary, axis_name: &str) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["solver".to_string(), axis_name.to_string(), "probability".to_string()]];
    for curve in &summary.curves {
        for (x, p) in summary.axis.iter().zip(&curve.probability) {
            rows.push(vec![curve.solver.clone(), x.to_string(), p.to_string()]);
        }
    }
    rows
}

fn write_rows(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write the main CSV, any companion CSVs and the JSON sidecar. Returns
/// the paths written, main CSV first and sidecar last.
pub fn write_outputs(config: &ExperimentConfig, result: &ExperimentResult) -> Result<Vec<PathBuf>> {
    let main = config.output.clone();
    if let Some(dir) = main.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut files = vec![main.clone()];
    let summary = match result {
        ExperimentResult::Spark { records, summary } => {
            write_csv(&main, records)?;
            serde_json::to_value(summary)?
        }
        ExperimentResult::Mip { records, summary } => {
            write_csv(&main, records)?;
            let mut rows = Vec::new();
            for arm in &summary.arms {
                for (&eps, &cdf) in summary.eps_grid.iter().zip(&arm.cdf) {
                    rows.push(CdfRow { arm: &arm.name, eps, cdf });
                }
            }
            for (&eps, &cdf) in summary.eps_grid.iter().zip(&summary.theoretical_cdf) {
                rows.push(CdfRow { arm: "union_bound", eps, cdf });
            }
            let path = companion(&main, "cdf");
            write_csv(&path, &rows)?;
            files.push(path);
            serde_json::to_value(summary)?
        }
        ExperimentResult::PhaseTransition { records, summary } => {
            write_csv(&main, records)?;
            let path = companion(&main, "summary");
            write_rows(&path, &sweep_rows(summary, "K"))?;
            files.push(path);
            serde_json::to_value(summary)?
        }
        ExperimentResult::NoisyRecovery { records, summary } => {
            write_csv(&main, records)?;
            let path = companion(&main, "summary");
            write_rows(&path, &sweep_rows(summary, "sigma2_db"))?;
            files.push(path);
            serde_json::to_value(summary)?
        }
        ExperimentResult::Bounds { records, union_curves } => {
            write_csv(&main, records)?;
            let path = companion(&main, "union");
            write_csv(&path, union_curves)?;
            files.push(path);
            serde_json::Value::Null
        }
    };
    let side = sidecar_path(&main);
    files.push(side.clone());
    let sidecar = Sidecar {
        config,
        seed_rule: SEED_RULE,
        files: files.iter().map(|p| p.display().to_string()).collect(),
        summary,
    };
    let mut w = BufWriter::new(File::create(&side)?);
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(files)
}
