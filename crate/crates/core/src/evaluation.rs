//! Monte-Carlo evaluation: scenario configuration, the shared sum-rate
//! formula every scheme is audited through, curve aggregation, and gain
//! histograms.
//!
//! One run samples one scenario; every configured algorithm sees the same
//! channel realizations (paired comparison) and its reported rate is always
//! the independent sum-rate evaluation of the precoders and equalizers it
//! returned, never its own internal accounting. Runs draw their RNG stream
//! from (master seed, run index), so results do not depend on the parallel
//! schedule.

use crate::baselines::{
    build_path_codebooks, dpc_sum_capacity, run_2smuhpa, run_bd, BaselineError, PowerMode,
};
use crate::channel::{run_rng, sample_scenario_with_rng, synthesize_channel, ArrayGeometry, PathSet};
use crate::mat::CMat;
use crate::numerics::{logdet2_hermitian_pd, NumericsError};
use crate::precoding::{
    run_h_lisa, run_h_lisa_ms_analog, run_lc_h_lisa, run_lc_h_lisa_ms_analog, run_lc_lisa,
    run_lisa, PrecodingError, PrecodingSolution,
};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

const DPC_TOL: f64 = 1e-6;
const DPC_MAX_ITERS: usize = 1000;

/// Everything a precoding scheme needs from one scenario realization.
pub struct ScenarioData<'a> {
    pub path_sets: &'a [PathSet],
    pub channels: &'a [CMat],
    pub bs_geometry: ArrayGeometry,
    pub ms_geometry: ArrayGeometry,
}

/// The schemes the engine can run and compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    TwoStage(PowerMode),
    Lisa,
    HLisa,
    LcLisa,
    LcHLisa,
    /// Hybrid variant with analog processing at the mobile stations.
    HLisaMsAnalog,
    LcHLisaMsAnalog,
    BlockDiagonalization,
    /// Dirty-paper-coding sum capacity; an upper bound, not a precoder.
    Capacity,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::TwoStage(PowerMode::Equal),
        Algorithm::TwoStage(PowerMode::Waterfilling),
        Algorithm::Lisa,
        Algorithm::HLisa,
        Algorithm::LcLisa,
        Algorithm::LcHLisa,
        Algorithm::HLisaMsAnalog,
        Algorithm::LcHLisaMsAnalog,
        Algorithm::BlockDiagonalization,
        Algorithm::Capacity,
    ];

    /// Whether the scheme produces precoders (the capacity bound does not).
    pub fn is_precoder(&self) -> bool {
        !matches!(self, Algorithm::Capacity)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::TwoStage(PowerMode::Equal) => "2SMUHPA",
            Algorithm::TwoStage(PowerMode::Waterfilling) => "2SMUHPA-WF",
            Algorithm::Lisa => "LISA",
            Algorithm::HLisa => "H-LISA",
            Algorithm::LcLisa => "LC-LISA",
            Algorithm::LcHLisa => "LC-H-LISA",
            Algorithm::HLisaMsAnalog => "H-LISA-AMS",
            Algorithm::LcHLisaMsAnalog => "LC-H-LISA-AMS",
            Algorithm::BlockDiagonalization => "BD",
            Algorithm::Capacity => "capacity",
        };
        f.write_str(name)
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let token = s.trim().to_ascii_uppercase();
        let alg = match token.as_str() {
            "2SMUHPA" => Algorithm::TwoStage(PowerMode::Equal),
            "2SMUHPA-WF" | "2SMUHPA+WF" => Algorithm::TwoStage(PowerMode::Waterfilling),
            "LISA" => Algorithm::Lisa,
            "H-LISA" | "HLISA" => Algorithm::HLisa,
            "LC-LISA" | "LCLISA" => Algorithm::LcLisa,
            "LC-H-LISA" | "LCHLISA" => Algorithm::LcHLisa,
            "H-LISA-AMS" | "HLISA-AMS" => Algorithm::HLisaMsAnalog,
            "LC-H-LISA-AMS" | "LCHLISA-AMS" => Algorithm::LcHLisaMsAnalog,
            "BD" => Algorithm::BlockDiagonalization,
            "CAPACITY" | "DPC" => Algorithm::Capacity,
            _ => return Err(format!("unknown algorithm '{s}'")),
        };
        Ok(alg)
    }
}

/// All knobs of one experiment.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub users: usize,
    pub paths_per_user: usize,
    pub bs_geometry: ArrayGeometry,
    pub ms_geometry: ArrayGeometry,
    pub bs_rf_chains: usize,
    /// Receive RF chains for the analog-MS variants; defaults to the receive
    /// antenna count (fully digital receivers).
    pub ms_rf_chains: Option<usize>,
    pub snr_grid_db: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
}

impl ScenarioConfig {
    pub fn ms_rf_chains(&self) -> usize {
        self.ms_rf_chains.unwrap_or_else(|| self.ms_geometry.elements())
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.users < 1 {
            return Err(EvalError::Config("at least one user is required".into()));
        }
        if self.paths_per_user < 1 {
            return Err(EvalError::Config("at least one path per user is required".into()));
        }
        if self.runs < 1 {
            return Err(EvalError::Config("at least one Monte-Carlo run is required".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(EvalError::Config("the SNR grid must not be empty".into()));
        }
        if self.bs_rf_chains < 1 || self.bs_rf_chains > self.bs_geometry.elements() {
            return Err(EvalError::Config(
                "RF chain count must lie between 1 and the transmit antenna count".into(),
            ));
        }
        if self.algorithms.is_empty() {
            return Err(EvalError::Config("the algorithm list must not be empty".into()));
        }
        let n_ms = self.ms_geometry.elements();
        let ms_rf = self.ms_rf_chains();
        if ms_rf < 1 || ms_rf > n_ms {
            return Err(EvalError::Config(
                "receive RF chain count must lie between 1 and the receive antenna count".into(),
            ));
        }
        if self.algorithms.iter().any(|a| matches!(a, Algorithm::TwoStage(_)))
            && self.users != self.bs_rf_chains
        {
            return Err(EvalError::Config(
                "the two-stage baseline requires exactly one RF chain per user".into(),
            ));
        }
        if self.algorithms.contains(&Algorithm::BlockDiagonalization)
            && self.bs_rf_chains % n_ms != 0
        {
            return Err(EvalError::Config(
                "block diagonalization requires the receive antenna count to divide the RF chain count"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Mean rate of one algorithm at one SNR point.
#[derive(Debug, Clone)]
pub struct AlgorithmStat {
    pub algorithm: Algorithm,
    pub mean_sum_rate: f64,
    pub std_error: f64,
    pub runs_used: usize,
    pub failures: usize,
}

/// One SNR point of the simulated curve.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub stats: Vec<AlgorithmStat>,
}

/// Histogram of the per-stream effective gains of each algorithm.
#[derive(Debug, Clone)]
pub struct GainHistogram {
    pub snr_db: f64,
    pub bin_width: f64,
    /// Bin `i` covers `[edges[i], edges[i+1])`.
    pub edges: Vec<f64>,
    pub counts: Vec<(Algorithm, Vec<u64>)>,
    pub failures: Vec<(Algorithm, usize)>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sum-rate evaluation failed: {0}")]
    RateEvaluation(#[from] NumericsError),
}

/// Independent sum-rate evaluation: the per-user log-det ratio with noise
/// covariance `G_k^H G_k`. This is the single source of truth for every
/// reported rate.
pub fn sum_rate_eq4(
    precoders: &[CMat],
    equalizers: &[CMat],
    channels: &[CMat],
) -> Result<f64, EvalError> {
    assert_eq!(precoders.len(), channels.len());
    assert_eq!(equalizers.len(), channels.len());
    let users = channels.len();
    let mut total = 0.0;
    for k in 0..users {
        let d_k = equalizers[k].cols();
        if d_k == 0 {
            continue;
        }
        let noise = equalizers[k].adjoint().mul(&equalizers[k]);
        let effective = equalizers[k].adjoint().mul(&channels[k]); // d_k x n_bs
        let mut signal_all = noise.clone();
        let mut signal_other = noise.clone();
        for (j, precoder) in precoders.iter().enumerate() {
            if precoder.cols() == 0 {
                continue;
            }
            let cross = effective.mul(precoder); // d_k x d_j
            let term = cross.mul(&cross.adjoint());
            signal_all = signal_all.add(&term);
            if j != k {
                signal_other = signal_other.add(&term);
            }
        }
        total += logdet2_hermitian_pd(&signal_all)? - logdet2_hermitian_pd(&signal_other)?;
    }
    Ok(total)
}

/// Convenience wrapper evaluating a returned solution against the channels it
/// was computed from.
pub fn audit_solution(solution: &PrecodingSolution, channels: &[CMat]) -> Result<f64, EvalError> {
    sum_rate_eq4(&solution.precoders, &solution.equalizers, channels)
}

#[derive(Debug, Error)]
pub enum AlgorithmFailure {
    #[error(transparent)]
    Precoding(#[from] PrecodingError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("the capacity bound is not a precoder; use dpc_sum_capacity")]
    NotAPrecoder,
}

/// Runs one precoding algorithm on one scenario realization at the given
/// power budget.
pub fn execute_algorithm(
    algorithm: Algorithm,
    data: &ScenarioData,
    power: f64,
    bs_rf_chains: usize,
    ms_rf_chains: usize,
) -> Result<PrecodingSolution, AlgorithmFailure> {
    match algorithm {
        Algorithm::TwoStage(mode) => {
            if data.channels.len() != bs_rf_chains {
                return Err(AlgorithmFailure::Baseline(BaselineError::UserRfChainMismatch));
            }
            let codebooks = build_path_codebooks(data.path_sets, data.bs_geometry, data.ms_geometry);
            Ok(run_2smuhpa(data.channels, &codebooks, power, mode)?)
        }
        Algorithm::Lisa => Ok(run_lisa(data.channels, bs_rf_chains, power)?),
        Algorithm::HLisa => Ok(run_h_lisa(data.channels, bs_rf_chains, power)?),
        Algorithm::LcLisa => Ok(run_lc_lisa(
            data.path_sets,
            data.bs_geometry,
            data.ms_geometry,
            bs_rf_chains,
            power,
        )?),
        Algorithm::LcHLisa => Ok(run_lc_h_lisa(
            data.path_sets,
            data.bs_geometry,
            data.ms_geometry,
            bs_rf_chains,
            power,
        )?),
        Algorithm::HLisaMsAnalog => {
            Ok(run_h_lisa_ms_analog(data.channels, bs_rf_chains, ms_rf_chains, power)?)
        }
        Algorithm::LcHLisaMsAnalog => Ok(run_lc_h_lisa_ms_analog(
            data.path_sets,
            data.bs_geometry,
            data.ms_geometry,
            bs_rf_chains,
            ms_rf_chains,
            power,
        )?),
        Algorithm::BlockDiagonalization => Ok(run_bd(data.channels, power, bs_rf_chains)?),
        Algorithm::Capacity => Err(AlgorithmFailure::NotAPrecoder),
    }
}

struct RunOutput {
    /// `[snr][algorithm]`: audited rate, or `None` on a recorded failure.
    rates: Vec<Vec<Option<f64>>>,
    /// `[snr][algorithm]`: per-stream gains for histogram collection.
    gains: Vec<Vec<Vec<f64>>>,
}

fn execute_run(config: &ScenarioConfig, run_index: u64) -> Result<RunOutput, EvalError> {
    let mut rng = run_rng(config.seed, run_index);
    let path_sets = sample_scenario_with_rng(&mut rng, config.users, config.paths_per_user);
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

    let mut rates = Vec::with_capacity(config.snr_grid_db.len());
    let mut gains = Vec::with_capacity(config.snr_grid_db.len());
    for &snr_db in &config.snr_grid_db {
        let power = 10f64.powf(snr_db / 10.0);
        let mut point_rates = Vec::with_capacity(config.algorithms.len());
        let mut point_gains = Vec::with_capacity(config.algorithms.len());
        for &alg in &config.algorithms {
            if alg == Algorithm::Capacity {
                match dpc_sum_capacity(&channels, power, DPC_TOL, DPC_MAX_ITERS) {
                    Ok(cap) => point_rates.push(Some(cap.sum_capacity)),
                    Err(_) => point_rates.push(None),
                }
                point_gains.push(Vec::new());
                continue;
            }
            match execute_algorithm(alg, &data, power, config.bs_rf_chains, config.ms_rf_chains()) {
                Ok(solution) => {
                    let rate = audit_solution(&solution, &channels)?;
                    point_rates.push(Some(rate));
                    point_gains.push(solution.power.gains.clone());
                }
                Err(_) => {
                    point_rates.push(None);
                    point_gains.push(Vec::new());
                }
            }
        }
        rates.push(point_rates);
        gains.push(point_gains);
    }
    Ok(RunOutput { rates, gains })
}

fn collect_runs(config: &ScenarioConfig) -> Result<Vec<RunOutput>, EvalError> {
    (0..config.runs as u64)
        .into_par_iter()
        .map(|run| execute_run(config, run))
        .collect()
}

/// Simulates the configured curve: every run feeds identical channels to all
/// algorithms, rates are audited through `sum_rate_eq4`, and means with
/// standard errors are aggregated per SNR point. Deterministic for a fixed
/// (seed, config) regardless of the worker count.
pub fn run_monte_carlo(config: &ScenarioConfig) -> Result<Vec<CurvePoint>, EvalError> {
    config.validate()?;
    let outputs = collect_runs(config)?;

    let mut curve = Vec::with_capacity(config.snr_grid_db.len());
    for (si, &snr_db) in config.snr_grid_db.iter().enumerate() {
        let mut stats = Vec::with_capacity(config.algorithms.len());
        for (ai, &algorithm) in config.algorithms.iter().enumerate() {
            let values: Vec<f64> =
                outputs.iter().filter_map(|out| out.rates[si][ai]).collect();
            let failures = config.runs - values.len();
            let n = values.len();
            let mean = if n > 0 { values.iter().sum::<f64>() / n as f64 } else { 0.0 };
            let std_error = if n > 1 {
                let var =
                    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            stats.push(AlgorithmStat {
                algorithm,
                mean_sum_rate: mean,
                std_error,
                runs_used: n,
                failures,
            });
        }
        curve.push(CurvePoint { snr_db, stats });
    }
    Ok(curve)
}

/// Collects the per-stream effective gains of every configured precoding
/// algorithm at one SNR and bins them with the given width (bin edges start
/// at zero and are shared across algorithms).
pub fn gain_histogram(
    config: &ScenarioConfig,
    snr_db: f64,
    bin_width: f64,
) -> Result<GainHistogram, EvalError> {
    config.validate()?;
    if !(bin_width > 0.0) {
        return Err(EvalError::Config("the bin width must be positive".into()));
    }
    if config.algorithms.iter().any(|a| !a.is_precoder()) {
        return Err(EvalError::Config(
            "the gain histogram needs precoding algorithms; the capacity bound has no stream gains"
                .into(),
        ));
    }
    let histogram_config = ScenarioConfig { snr_grid_db: vec![snr_db], ..config.clone() };
    let outputs = collect_runs(&histogram_config)?;

    let max_gain = outputs
        .iter()
        .flat_map(|out| out.gains[0].iter().flatten())
        .fold(0.0f64, |acc, &g| acc.max(g));
    let bins = ((max_gain / bin_width).floor() as usize + 1).max(1);
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * bin_width).collect();

    let mut counts = Vec::with_capacity(config.algorithms.len());
    let mut failures = Vec::with_capacity(config.algorithms.len());
    for (ai, &algorithm) in config.algorithms.iter().enumerate() {
        let mut hist = vec![0u64; bins];
        let mut failed = 0usize;
        for out in &outputs {
            if out.rates[0][ai].is_none() {
                failed += 1;
                continue;
            }
            for &g in &out.gains[0][ai] {
                let idx = ((g / bin_width).floor() as usize).min(bins - 1);
                hist[idx] += 1;
            }
        }
        counts.push((algorithm, hist));
        failures.push((algorithm, failed));
    }
    Ok(GainHistogram { snr_db, bin_width, edges, counts, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::C64;

    fn small_config(algorithms: Vec<Algorithm>) -> ScenarioConfig {
        ScenarioConfig {
            users: 3,
            paths_per_user: 2,
            bs_geometry: ArrayGeometry::new(4, 2),
            ms_geometry: ArrayGeometry::linear(2),
            bs_rf_chains: 4,
            ms_rf_chains: None,
            snr_grid_db: vec![0.0],
            runs: 4,
            seed: 9,
            algorithms,
        }
    }

    #[test]
    fn zero_precoders_give_zero_rate() {
        let channels = vec![CMat::from_fn(1, 4, |_, j| C64::new(j as f64 + 1.0, -0.5))];
        let precoders = vec![CMat::zeros(4, 1)];
        let equalizers = vec![CMat::from_fn(1, 1, |_, _| C64::new(1.0, 0.0))];
        let rate = sum_rate_eq4(&precoders, &equalizers, &channels).unwrap();
        assert!(rate.abs() < 1e-12);
    }

    #[test]
    fn matched_filter_rank_one_closed_form() {
        // Single user, rank-one channel, matched filter on both ends.
        let x = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let y: Vec<C64> =
            (0..4).map(|j| C64::new((j as f64).cos(), (j as f64).sin() * 0.5)).collect();
        let ny = crate::mat::norm2(&y);
        let h = CMat::from_fn(2, 4, |i, j| x[i] * y[j].conj() / ny);
        let lambda = crate::mat::norm2(&x);
        let gamma: f64 = 1.7;
        let g = CMat::from_fn(2, 1, |i, _| x[i] / lambda);
        let p = CMat::from_fn(4, 1, |j, _| y[j] / ny * gamma.sqrt());
        let rate = sum_rate_eq4(&[p], &[g], &[h]).unwrap();
        let expect = (1.0 + gamma * lambda * lambda).log2();
        assert!((rate - expect).abs() < 1e-10, "{rate} vs {expect}");
    }

    #[test]
    fn audit_matches_internal_accounting_for_lisa() {
        let config = small_config(vec![Algorithm::Lisa]);
        let mut rng = run_rng(config.seed, 0);
        let sets = sample_scenario_with_rng(&mut rng, config.users, config.paths_per_user);
        let channels: Vec<CMat> = sets
            .iter()
            .map(|s| synthesize_channel(s, config.bs_geometry, config.ms_geometry))
            .collect();
        let sol = run_lisa(&channels, 4, 1.0).unwrap();
        let eq4 = audit_solution(&sol, &channels).unwrap();
        assert!((eq4 - sol.sum_rate).abs() < 1e-6, "{eq4} vs internal {}", sol.sum_rate);
    }

    #[test]
    fn single_run_mean_is_that_run() {
        let mut config = small_config(vec![Algorithm::Lisa]);
        config.runs = 1;
        let curve = run_monte_carlo(&config).unwrap();
        assert_eq!(curve.len(), 1);
        let stat = &curve[0].stats[0];
        assert_eq!(stat.runs_used, 1);
        assert_eq!(stat.failures, 0);
        // Reproduce the single run by hand.
        let mut rng = run_rng(config.seed, 0);
        let sets = sample_scenario_with_rng(&mut rng, config.users, config.paths_per_user);
        let channels: Vec<CMat> = sets
            .iter()
            .map(|s| synthesize_channel(s, config.bs_geometry, config.ms_geometry))
            .collect();
        let sol = run_lisa(&channels, 4, 1.0).unwrap();
        let eq4 = audit_solution(&sol, &channels).unwrap();
        assert!((stat.mean_sum_rate - eq4).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let config = small_config(vec![Algorithm::Lisa, Algorithm::HLisa, Algorithm::Capacity]);
        let a = run_monte_carlo(&config).unwrap();
        let b = run_monte_carlo(&config).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            for (sa, sb) in pa.stats.iter().zip(&pb.stats) {
                assert_eq!(sa.mean_sum_rate.to_bits(), sb.mean_sum_rate.to_bits());
                assert_eq!(sa.std_error.to_bits(), sb.std_error.to_bits());
            }
        }
    }

    #[test]
    fn histogram_counts_match_allocated_streams() {
        let config = small_config(vec![Algorithm::Lisa]);
        let hist = gain_histogram(&config, 0.0, 0.5).unwrap();
        let total: u64 = hist.counts[0].1.iter().sum();
        // Count streams by re-running the same runs.
        let mut expected = 0u64;
        for run in 0..config.runs as u64 {
            let mut rng = run_rng(config.seed, run);
            let sets = sample_scenario_with_rng(&mut rng, config.users, config.paths_per_user);
            let channels: Vec<CMat> = sets
                .iter()
                .map(|s| synthesize_channel(s, config.bs_geometry, config.ms_geometry))
                .collect();
            expected += run_lisa(&channels, 4, 1.0).unwrap().n_streams() as u64;
        }
        assert_eq!(total, expected);
        assert_eq!(hist.edges.len(), hist.counts[0].1.len() + 1);
    }

    #[test]
    fn histogram_rejects_capacity_and_bad_bins() {
        let config = small_config(vec![Algorithm::Capacity]);
        assert!(matches!(gain_histogram(&config, 0.0, 0.5), Err(EvalError::Config(_))));
        let config = small_config(vec![Algorithm::Lisa]);
        assert!(matches!(gain_histogram(&config, 0.0, 0.0), Err(EvalError::Config(_))));
    }

    #[test]
    fn config_validation_catches_mismatches() {
        let config = small_config(vec![Algorithm::TwoStage(PowerMode::Equal)]);
        assert!(config.validate().is_err()); // users 3 != n_rf 4
        let mut config = small_config(vec![Algorithm::BlockDiagonalization]);
        config.bs_rf_chains = 5; // not divisible by n_ms = 2
        assert!(config.validate().is_err());
        let mut config = small_config(vec![Algorithm::Lisa]);
        config.algorithms.clear();
        assert!(config.validate().is_err());
        let mut config = small_config(vec![Algorithm::Lisa]);
        config.ms_rf_chains = Some(5);
        assert!(config.validate().is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for alg in Algorithm::ALL {
            let name = alg.to_string();
            assert_eq!(name.parse::<Algorithm>().unwrap(), alg);
        }
        assert!("nonsense".parse::<Algorithm>().is_err());
    }
}
