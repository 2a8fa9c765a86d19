//! CSV and manifest emission. Numeric formatting uses Rust's shortest
//! round-trip representation, so identical results serialize identically.

use crate::config::render_config;
use crate::AppError;
use hybrid_precoding::evaluation::{CurvePoint, GainHistogram, ScenarioConfig};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub fn write_file(path: &Path, contents: &str) -> Result<(), AppError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| AppError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| AppError::Internal(format!("cannot write {}: {e}", path.display())))
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("snr_db,algorithm,mean_sum_rate_bpcu,std_error,runs_used,failures\n");
    for point in curve {
        for stat in &point.stats {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                point.snr_db,
                stat.algorithm,
                stat.mean_sum_rate,
                stat.std_error,
                stat.runs_used,
                stat.failures
            ));
        }
    }
    out
}

pub fn histogram_csv(hist: &GainHistogram) -> String {
    let mut out = String::new();
    out.push_str(&format!("# snr_db = {}\n", hist.snr_db));
    out.push_str(&format!("# bin_width = {}\n", hist.bin_width));
    out.push_str("# bin i covers [bin_low, bin_high); gains are amplitude gains of the scalar subchannels\n");
    for (alg, failed) in &hist.failures {
        if *failed > 0 {
            out.push_str(&format!("# failures {alg} = {failed}\n"));
        }
    }
    out.push_str("algorithm,bin_low,bin_high,count\n");
    for (alg, counts) in &hist.counts {
        for (i, count) in counts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                alg, hist.edges[i], hist.edges[i + 1], count
            ));
        }
    }
    out
}

pub struct BenchRow {
    pub algorithm: String,
    pub n_bs: usize,
    pub n_ms: usize,
    pub users: usize,
    pub paths: usize,
    pub median_ms: f64,
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("algorithm,n_bs,n_ms,k,l,median_ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.algorithm, r.n_bs, r.n_ms, r.users, r.paths, r.median_ms
        ));
    }
    out
}

/// Writes the run manifest next to the outputs: the resolved configuration
/// in replayable form plus provenance comments.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: &ScenarioConfig,
    outputs: &[PathBuf],
) -> Result<(), AppError> {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text = String::new();
    text.push_str("# run manifest: feed this file back via --config to reproduce the run\n");
    text.push_str(&format!("# tool_version = {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("# command = {command}\n"));
    text.push_str(&format!("# timestamp_unix = {timestamp}\n"));
    for path in outputs {
        text.push_str(&format!("# output = {}\n", path.display()));
    }
    text.push_str(&render_config(config));
    write_file(&out_dir.join("manifest.txt"), &text)
}
