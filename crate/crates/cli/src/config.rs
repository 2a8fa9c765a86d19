//! Config file parsing, figure presets, and command-line overrides.
//!
//! The config format is plain `key = value` lines; `#` starts a comment.
//! Keys:
//!
//! ```text
//! users          = 8            # number of mobile stations
//! paths_per_user = 3            # propagation paths per user
//! bs_rows        = 8            # base-station array rows
//! bs_cols        = 8            # base-station array columns
//! ms_rows        = 1            # mobile-station array rows
//! ms_cols        = 1            # mobile-station array columns
//! bs_rf_chains   = 8            # transmit RF chains (max streams)
//! ms_rf_chains   = 2            # optional; receive RF chains for the
//!                               # analog-MS variants (default: ms antennas)
//! snr_db         = -10:5:40     # start:step:stop range, or a comma list
//! runs           = 1000         # Monte-Carlo runs
//! seed           = 1            # master seed
//! algorithms     = 2SMUHPA, 2SMUHPA-WF, LISA, H-LISA
//! ```

use hybrid_precoding::channel::ArrayGeometry;
use hybrid_precoding::evaluation::{Algorithm, ScenarioConfig};
use std::path::Path;

use crate::AppError;

/// Default SNR grid: -10 dB to 40 dB in 5 dB steps.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=10).map(|i| -10.0 + 5.0 * i as f64).collect()
}

/// Built-in experiment presets mirroring the simulated figures.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let base = ScenarioConfig {
        users: 8,
        paths_per_user: 3,
        bs_geometry: ArrayGeometry::new(8, 8),
        ms_geometry: ArrayGeometry::linear(1),
        bs_rf_chains: 8,
        ms_rf_chains: None,
        snr_grid_db: default_snr_grid(),
        runs: 1000,
        seed: 1,
        algorithms: vec![
            "2SMUHPA".parse().unwrap(),
            "2SMUHPA-WF".parse().unwrap(),
            "LISA".parse().unwrap(),
            "LC-LISA".parse().unwrap(),
            "H-LISA".parse().unwrap(),
            "LC-H-LISA".parse().unwrap(),
            "capacity".parse().unwrap(),
        ],
    };
    let config = match name {
        "fig3a" => ScenarioConfig { paths_per_user: 1, ..base },
        "fig3b" => base,
        "fig4" => ScenarioConfig {
            snr_grid_db: vec![0.0],
            algorithms: vec!["LISA".parse().unwrap(), "H-LISA".parse().unwrap()],
            ..base
        },
        "fig6" => ScenarioConfig {
            ms_geometry: ArrayGeometry::linear(2),
            ms_rf_chains: Some(2),
            algorithms: {
                let mut algs = base.algorithms.clone();
                algs.push("BD".parse().unwrap());
                // keep capacity last
                let cap = algs.remove(6);
                algs.push(cap);
                algs
            },
            ..base
        },
        "fig7" => ScenarioConfig {
            ms_geometry: ArrayGeometry::new(4, 4),
            ms_rf_chains: Some(2),
            algorithms: vec![
                "2SMUHPA".parse().unwrap(),
                "2SMUHPA-WF".parse().unwrap(),
                "LISA".parse().unwrap(),
                "LC-LISA".parse().unwrap(),
                "H-LISA".parse().unwrap(),
                "LC-H-LISA".parse().unwrap(),
                "H-LISA-AMS".parse().unwrap(),
                "LC-H-LISA-AMS".parse().unwrap(),
                "capacity".parse().unwrap(),
            ],
            ..base
        },
        _ => return None,
    };
    Some(config)
}

pub const PRESET_NAMES: [&str; 5] = ["fig3a", "fig3b", "fig4", "fig6", "fig7"];

/// Parses an SNR grid override: either `start:step:stop` or a comma list.
pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>, AppError> {
    let bad = |msg: String| AppError::Config(msg);
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("SNR range must be start:step:stop, got '{spec}'")));
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad(format!("bad SNR start '{}'", parts[0])))?;
        let step: f64 = parts[1].trim().parse().map_err(|_| bad(format!("bad SNR step '{}'", parts[1])))?;
        let stop: f64 = parts[2].trim().parse().map_err(|_| bad(format!("bad SNR stop '{}'", parts[2])))?;
        if !(step > 0.0) || stop < start {
            return Err(bad(format!("SNR range '{spec}' must ascend with a positive step")));
        }
        let mut grid = Vec::new();
        let mut v = start;
        while v <= stop + 1e-9 {
            grid.push(v);
            v += step;
        }
        Ok(grid)
    } else {
        spec.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("bad SNR value '{t}'"))))
            .collect()
    }
}

pub fn parse_algorithms(spec: &str) -> Result<Vec<Algorithm>, AppError> {
    let algs: Result<Vec<Algorithm>, String> =
        spec.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.parse()).collect();
    let algs = algs.map_err(AppError::Config)?;
    if algs.is_empty() {
        return Err(AppError::Config("the algorithm list must not be empty".into()));
    }
    Ok(algs)
}

/// Parses a config file; errors carry `file:line` positions.
pub fn parse_config_file(path: &Path) -> Result<ScenarioConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    let name = path.display();

    let mut users = None;
    let mut paths_per_user = None;
    let mut bs_rows = None;
    let mut bs_cols = None;
    let mut ms_rows = None;
    let mut ms_cols = None;
    let mut bs_rf_chains = None;
    let mut ms_rf_chains = None;
    let mut snr_grid = None;
    let mut runs = None;
    let mut seed = None;
    let mut algorithms = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(AppError::Config(format!("{name}:{line_no}: expected 'key = value'")));
        };
        let key = key.trim();
        let value = value.trim();
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| AppError::Config(format!("{name}:{line_no}: '{v}' is not a count")))
        };
        match key {
            "users" => users = Some(parse_usize(value)?),
            "paths_per_user" => paths_per_user = Some(parse_usize(value)?),
            "bs_rows" => bs_rows = Some(parse_usize(value)?),
            "bs_cols" => bs_cols = Some(parse_usize(value)?),
            "ms_rows" => ms_rows = Some(parse_usize(value)?),
            "ms_cols" => ms_cols = Some(parse_usize(value)?),
            "bs_rf_chains" => bs_rf_chains = Some(parse_usize(value)?),
            "ms_rf_chains" => ms_rf_chains = Some(parse_usize(value)?),
            "runs" => runs = Some(parse_usize(value)?),
            "seed" => {
                seed = Some(value.parse::<u64>().map_err(|_| {
                    AppError::Config(format!("{name}:{line_no}: '{value}' is not a seed"))
                })?)
            }
            "snr_db" => {
                snr_grid = Some(parse_snr_grid(value).map_err(|e| match e {
                    AppError::Config(msg) => AppError::Config(format!("{name}:{line_no}: {msg}")),
                    other => other,
                })?)
            }
            "algorithms" => {
                algorithms = Some(parse_algorithms(value).map_err(|e| match e {
                    AppError::Config(msg) => AppError::Config(format!("{name}:{line_no}: {msg}")),
                    other => other,
                })?)
            }
            _ => {
                return Err(AppError::Config(format!("{name}:{line_no}: unknown key '{key}'")));
            }
        }
    }

    let require = |field: Option<usize>, key: &str| {
        field.ok_or_else(|| AppError::Config(format!("{name}: missing required key '{key}'")))
    };
    let users = require(users, "users")?;
    let paths_per_user = require(paths_per_user, "paths_per_user")?;
    let bs_rows = require(bs_rows, "bs_rows")?;
    let bs_cols = require(bs_cols, "bs_cols")?;
    let ms_rows = require(ms_rows, "ms_rows")?;
    let ms_cols = require(ms_cols, "ms_cols")?;
    let bs_rf_chains = require(bs_rf_chains, "bs_rf_chains")?;
    if bs_rows == 0 || bs_cols == 0 || ms_rows == 0 || ms_cols == 0 {
        return Err(AppError::Config(format!("{name}: array dimensions must be at least 1")));
    }
    let algorithms = algorithms
        .ok_or_else(|| AppError::Config(format!("{name}: missing required key 'algorithms'")))?;

    Ok(ScenarioConfig {
        users,
        paths_per_user,
        bs_geometry: ArrayGeometry::new(bs_rows, bs_cols),
        ms_geometry: ArrayGeometry::new(ms_rows, ms_cols),
        bs_rf_chains,
        ms_rf_chains,
        snr_grid_db: snr_grid.unwrap_or_else(default_snr_grid),
        runs: runs.unwrap_or(1000),
        seed: seed.unwrap_or(1),
        algorithms,
    })
}

/// Serializes a resolved config in the same `key = value` format the parser
/// accepts, so a manifest can be replayed as a config file.
pub fn render_config(config: &ScenarioConfig) -> String {
    let algs: Vec<String> = config.algorithms.iter().map(|a| a.to_string()).collect();
    let snrs: Vec<String> = config.snr_grid_db.iter().map(|v| v.to_string()).collect();
    let mut out = String::new();
    out.push_str(&format!("users = {}\n", config.users));
    out.push_str(&format!("paths_per_user = {}\n", config.paths_per_user));
    out.push_str(&format!("bs_rows = {}\n", config.bs_geometry.rows()));
    out.push_str(&format!("bs_cols = {}\n", config.bs_geometry.cols()));
    out.push_str(&format!("ms_rows = {}\n", config.ms_geometry.rows()));
    out.push_str(&format!("ms_cols = {}\n", config.ms_geometry.cols()));
    out.push_str(&format!("bs_rf_chains = {}\n", config.bs_rf_chains));
    if let Some(ms_rf) = config.ms_rf_chains {
        out.push_str(&format!("ms_rf_chains = {ms_rf}\n"));
    }
    out.push_str(&format!("snr_db = {}\n", snrs.join(", ")));
    out.push_str(&format!("runs = {}\n", config.runs));
    out.push_str(&format!("seed = {}\n", config.seed));
    out.push_str(&format!("algorithms = {}\n", algs.join(", ")));
    out
}
