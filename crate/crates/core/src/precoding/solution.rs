//! Final precoder/equalizer assembly produced by the solvers.

use super::waterfill::PowerAllocation;
use crate::mat::{C64, CMat};

/// Constant-modulus analog factor and the digital factor behind it.
#[derive(Debug, Clone)]
pub struct HybridFactors {
    /// Analog precoder, `n_bs x d`, every entry of modulus `1/sqrt(n_bs)`.
    pub analog: CMat,
    /// Digital precoder, `d x d`; the effective precoder is `analog * digital`.
    pub digital: CMat,
}

/// Run diagnostics carried with every solution.
#[derive(Debug, Clone, Default)]
pub struct SolutionMeta {
    /// Streams dropped because the hybrid zero-forcing factor was too ill
    /// conditioned to invert.
    pub hybrid_retries: usize,
    /// Allocation stopped because every candidate's projected channel was
    /// numerically zero.
    pub no_gain_stop: bool,
    /// Allocation stopped because all users had reached their receive RF
    /// chain limit.
    pub candidates_exhausted: bool,
    /// Accepted sum rate after each committed stream (strictly increasing).
    pub accepted_rates: Vec<f64>,
}

/// Per-user precoders and equalizers with the stream bookkeeping behind them.
#[derive(Debug, Clone)]
pub struct PrecodingSolution {
    /// Per-user transmit precoder, `n_bs x d_k` (zero columns for unserved
    /// users).
    pub precoders: Vec<CMat>,
    /// Per-user receive equalizer, `n_ms x d_k`, unit-norm columns.
    pub equalizers: Vec<CMat>,
    /// Stream-to-user map in allocation order.
    pub stream_users: Vec<usize>,
    /// Per-stream amplitude gains and powers (allocation order).
    pub power: PowerAllocation,
    /// Analog/digital factorization when the transmitter is hybrid.
    pub hybrid: Option<HybridFactors>,
    /// Sum rate from the solver's own scalar-subchannel accounting.
    pub sum_rate: f64,
    pub meta: SolutionMeta,
}

impl PrecodingSolution {
    /// Assembles per-user matrices from per-stream columns.
    pub fn from_streams(
        users: usize,
        n_bs: usize,
        n_ms: usize,
        stream_users: &[usize],
        precoder_cols: &[Vec<C64>],
        equalizer_cols: &[Vec<C64>],
        power: PowerAllocation,
        hybrid: Option<HybridFactors>,
        sum_rate: f64,
        meta: SolutionMeta,
    ) -> Self {
        let mut precoders = Vec::with_capacity(users);
        let mut equalizers = Vec::with_capacity(users);
        for k in 0..users {
            let cols: Vec<usize> = stream_users
                .iter()
                .enumerate()
                .filter(|(_, &u)| u == k)
                .map(|(i, _)| i)
                .collect();
            let p = CMat::from_fn(n_bs, cols.len(), |i, j| precoder_cols[cols[j]][i]);
            let g = CMat::from_fn(n_ms, cols.len(), |i, j| equalizer_cols[cols[j]][i]);
            precoders.push(p);
            equalizers.push(g);
        }
        Self {
            precoders,
            equalizers,
            stream_users: stream_users.to_vec(),
            power,
            hybrid,
            sum_rate,
            meta,
        }
    }

    /// Transmitted power summed over all users.
    pub fn total_power(&self) -> f64 {
        self.precoders
            .iter()
            .map(|p| p.fro_norm().powi(2))
            .sum()
    }

    pub fn n_streams(&self) -> usize {
        self.stream_users.len()
    }
}
