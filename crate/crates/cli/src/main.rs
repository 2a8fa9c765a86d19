//! Command-line front end: experiment orchestration and CSV/plot emission.
//!
//! Exit codes: 0 success, 2 configuration error, 3 internal numerical
//! failure.

mod config;
mod output;
mod plot;

use clap::{Args, Parser, Subcommand};
use config::{parse_algorithms, parse_config_file, parse_snr_grid, preset, PRESET_NAMES};
use hybrid_precoding::channel::{run_rng, sample_scenario_with_rng, synthesize_channel};
use hybrid_precoding::evaluation::{
    execute_algorithm, gain_histogram, run_monte_carlo, Algorithm, EvalError, ScenarioConfig,
    ScenarioData,
};
use hybrid_precoding::mat::CMat;
use output::{bench_csv, curve_csv, histogram_csv, write_file, write_manifest, BenchRow};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Internal(String),
}

impl From<EvalError> for AppError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(msg) => AppError::Config(msg),
            other => AppError::Internal(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "hpsim",
    version,
    about = "Multiuser hybrid precoding simulator: sum-rate curves, gain histograms, runtime benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate average sum-rate curves over an SNR grid and write them as CSV.
    Simulate(SimulateArgs),
    /// Collect a histogram of the per-stream effective channel gains.
    Histogram(HistogramArgs),
    /// Measure median solver wall time per algorithm.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Built-in experiment preset: fig3a, fig3b, fig4, fig6, fig7.
    #[arg(long)]
    preset: Option<String>,
    /// Config file (key = value format); see the README for the schema.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo run count override.
    #[arg(long)]
    runs: Option<usize>,
    /// Comma-separated algorithm list override.
    #[arg(long)]
    algorithms: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// SNR grid override: 'start:step:stop' or a comma list (dB).
    #[arg(long)]
    snr: Option<String>,
    /// Also render the curves as an SVG plot.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct HistogramArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// SNR point in dB (default: first entry of the config's grid).
    #[arg(long)]
    snr: Option<f64>,
    /// Gain bin width.
    #[arg(long, default_value_t = 0.5)]
    bin_width: f64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// SNR point in dB the solvers run at (default: first grid entry).
    #[arg(long)]
    snr: Option<f64>,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(AppError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            2
        }
        Err(AppError::Internal(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Histogram(args) => cmd_histogram(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn resolve_config(common: &CommonArgs) -> Result<ScenarioConfig, AppError> {
    let mut config = match (&common.preset, &common.config) {
        (Some(name), None) => preset(name).ok_or_else(|| {
            AppError::Config(format!(
                "unknown preset '{name}'; available: {}",
                PRESET_NAMES.join(", ")
            ))
        })?,
        (None, Some(path)) => parse_config_file(path)?,
        (Some(_), Some(_)) => {
            return Err(AppError::Config("give either --preset or --config, not both".into()))
        }
        (None, None) => {
            return Err(AppError::Config(
                "a scenario is required: pass --preset NAME or --config FILE".into(),
            ))
        }
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(runs) = common.runs {
        config.runs = runs;
    }
    if let Some(spec) = &common.algorithms {
        config.algorithms = parse_algorithms(spec)?;
    }
    Ok(config)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), AppError> {
    let mut config = resolve_config(&args.common)?;
    if let Some(spec) = &args.snr {
        config.snr_grid_db = parse_snr_grid(spec)?;
    }
    config.validate().map_err(AppError::from)?;

    let curve = run_monte_carlo(&config)?;
    let out_dir = &args.common.out;
    let csv_path = out_dir.join("sum_rate.csv");
    write_file(&csv_path, &curve_csv(&curve))?;
    let mut outputs = vec![csv_path];
    if args.plot {
        let svg_path = out_dir.join("sum_rate.svg");
        let title = format!(
            "K={} L={} N_BS={} N_MS={} N_RF={}",
            config.users,
            config.paths_per_user,
            config.bs_geometry.elements(),
            config.ms_geometry.elements(),
            config.bs_rf_chains
        );
        write_file(&svg_path, &plot::curve_svg(&curve, &title))?;
        outputs.push(svg_path);
    }
    write_manifest(out_dir, "simulate", &config, &outputs)?;
    for path in &outputs {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_histogram(args: HistogramArgs) -> Result<(), AppError> {
    let config = resolve_config(&args.common)?;
    config.validate().map_err(AppError::from)?;
    let snr_db = args.snr.unwrap_or(config.snr_grid_db[0]);

    let hist = gain_histogram(&config, snr_db, args.bin_width)?;
    let out_dir = &args.common.out;
    let csv_path = out_dir.join("gain_histogram.csv");
    write_file(&csv_path, &histogram_csv(&hist))?;
    write_manifest(out_dir, "histogram", &config, std::slice::from_ref(&csv_path))?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), AppError> {
    let mut config = resolve_config(&args.common)?;
    // Benchmark default: at least 20 timed runs per algorithm.
    if args.common.runs.is_none() {
        config.runs = 20;
    }
    config.validate().map_err(AppError::from)?;
    let snr_db = args.snr.unwrap_or(config.snr_grid_db[0]);
    let power = 10f64.powf(snr_db / 10.0);

    let mut rows = Vec::new();
    for &alg in &config.algorithms {
        if alg == Algorithm::Capacity {
            // The capacity bound is an iterative solver, not a precoder;
            // timing it against the precoders would compare unlike things.
            continue;
        }
        let mut times_ms = Vec::with_capacity(config.runs);
        for run in 0..config.runs as u64 {
            let mut rng = run_rng(config.seed, run);
            let path_sets =
                sample_scenario_with_rng(&mut rng, config.users, config.paths_per_user);
            let channels: Vec<CMat> = path_sets
                .iter()
                .map(|set| synthesize_channel(set, config.bs_geometry, config.ms_geometry))
                .collect();
            let data = ScenarioData {
                path_sets: &path_sets,
                channels: &channels,
                bs_geometry: config.bs_geometry,
                ms_geometry: config.ms_geometry,
            };
            let start = Instant::now();
            let result = execute_algorithm(
                alg,
                &data,
                power,
                config.bs_rf_chains,
                config.ms_rf_chains(),
            );
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            if result.is_ok() {
                times_ms.push(elapsed);
            }
        }
        if times_ms.is_empty() {
            return Err(AppError::Internal(format!("all benchmark runs of {alg} failed")));
        }
        times_ms.sort_by(f64::total_cmp);
        let median_ms = times_ms[times_ms.len() / 2];
        rows.push(BenchRow {
            algorithm: alg.to_string(),
            n_bs: config.bs_geometry.elements(),
            n_ms: config.ms_geometry.elements(),
            users: config.users,
            paths: config.paths_per_user,
            median_ms,
        });
    }

    let out_dir = &args.common.out;
    let csv_path = out_dir.join("bench.csv");
    write_file(&csv_path, &bench_csv(&rows))?;
    write_manifest(out_dir, "bench", &config, std::slice::from_ref(&csv_path))?;
    println!("wrote {}", csv_path.display());
    Ok(())
}
