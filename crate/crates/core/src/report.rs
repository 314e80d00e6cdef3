//! On-disk report artifacts: `report.json` plus flat CSV views.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! CSV value parses back to the exact `f64` held in the report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::experiment::{ExperimentReport, REPORT_SCHEMA_VERSION};

pub const REPORT_FILE: &str = "report.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const SIMILARITIES_FILE: &str = "similarities.csv";
pub const STATS_FILE: &str = "stats.csv";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: schema version {found}, expected {expected}", path.display())]
    Schema {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
}

pub type Result<T> = std::result::Result<T, ReportError>;

/// Writes `report.json`, `predictions.csv`, `similarities.csv` and
/// `stats.csv` into `dir` (created if missing). Returns the written paths.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let json = report_json(report).map_err(|source| ReportError::Json {
        path: dir.join(REPORT_FILE),
        source,
    })?;
    let files = [
        (REPORT_FILE, json),
        (PREDICTIONS_FILE, predictions_csv(report)),
        (SIMILARITIES_FILE, similarities_csv(report)),
        (STATS_FILE, stats_csv(report)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

pub fn report_json(report: &ExperimentReport) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| ReportError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if found != REPORT_SCHEMA_VERSION {
        return Err(ReportError::Schema {
            path: path.to_path_buf(),
            found,
            expected: REPORT_SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|source| ReportError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `sim_seed,input,correct,predicted`, one row per simulation and input.
pub fn predictions_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("sim_seed,input,correct,predicted\n");
    for sim in &report.simulations {
        for (input, p) in sim.predictions.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", sim.seed, input, input + 1, p);
        }
    }
    out
}

/// `sim_seed,n,cosine`; the cosine is left empty where it is undefined.
pub fn similarities_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("sim_seed,n,cosine\n");
    for sim in &report.simulations {
        for point in &sim.similarities {
            match point.cosine {
                Some(c) => writeln!(out, "{},{},{}", sim.seed, point.n, c),
                None => writeln!(out, "{},{},", sim.seed, point.n),
            }
            .unwrap();
        }
    }
    out
}

/// Flat aggregate table backing `stats.csv`.
pub fn stats_table(report: &ExperimentReport) -> Vec<(String, f64)> {
    let mut rows: Vec<(String, f64)> = Vec::new();
    let mut push = |k: &str, v: f64| rows.push((k.to_string(), v));
    push("n_sims", report.simulations.len() as f64);
    push("n_excluded", report.excluded.len() as f64);
    push("learning_rate", report.config.learning_rate);
    push("train_accuracy_mean", report.accuracy.train.mean);
    push("train_accuracy_sd", report.accuracy.train.sd);
    push("test_accuracy_mean", report.accuracy.test.mean);
    push("test_accuracy_sd", report.accuracy.test.sd);
    let r = &report.regression;
    push("b0", r.intercept);
    push("b1", r.slope);
    push("r_squared", r.r_squared);
    let p = &report.regression_pooled;
    push("pooled_b0", p.intercept);
    push("pooled_b1", p.slope);
    push("pooled_r_squared", p.r_squared);
    let s = &report.similarity;
    push("similarity_mean", s.per_sim_mean.mean);
    push("similarity_sd", s.per_sim_mean.sd);
    push("boundary_mean", s.boundary.mean);
    push("boundary_sd", s.boundary.sd);
    push("nonboundary_mean", s.nonboundary.mean);
    push("nonboundary_sd", s.nonboundary.sd);
    push("boundary_t", s.boundary_test.t);
    push("boundary_df", s.boundary_test.df as f64);
    push("boundary_p", s.boundary_test.p);
    push("undefined_similarities", s.undefined as f64);
    let g = &report.geometry;
    push("angle_sd_mean", g.angle_sd.mean);
    push("angle_sd_sd", g.angle_sd.sd);
    push("magnitude_mean", g.mean_magnitude.mean);
    push("magnitude_sd", g.mean_magnitude.sd);
    if let Some(cur) = &report.curriculum {
        for (stage, row) in cur.stages.iter().zip(&cur.correlations) {
            push(
                &format!("stage{}_train_accuracy", stage.stage_index),
                stage.train_accuracy.mean,
            );
            for (range, corr) in cur.ranges.iter().zip(row) {
                if let Some(c) = corr {
                    push(
                        &format!("stage{}_r_{}", stage.stage_index, range.label()),
                        *c,
                    );
                }
            }
        }
    }
    rows
}

pub fn stats_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in stats_table(report) {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}
