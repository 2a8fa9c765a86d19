//! Two-stage beamsteering baseline: per-user best beam pair from the path
//! codebooks, then low-dimensional digital zero-forcing across users.

use super::BaselineError;
use crate::channel::{upa_response, ArrayGeometry, PathSet};
use crate::mat::{dot_conj, norm2, C64, CMat};
use crate::numerics::{guarded_inverse, NumericsError, DEFAULT_COND_LIMIT};
use crate::precoding::{waterfill, HybridFactors, PowerAllocation, PrecodingSolution, SolutionMeta};

/// Per-user beamsteering codebooks: candidate analog precoder columns on the
/// transmit side and candidate analog equalizers on the receive side, all
/// unit-norm array response vectors of the users' propagation paths.
#[derive(Debug, Clone)]
pub struct BeamsteeringCodebooks {
    pub bs: Vec<Vec<Vec<C64>>>,
    pub ms: Vec<Vec<Vec<C64>>>,
}

/// Power loading for the zero-forced subchannels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PowerMode {
    /// Equal split of the budget over the K subchannels.
    Equal,
    /// Waterfilling over the subchannel gains.
    Waterfilling,
}

/// Builds the per-user codebooks from the true path directions.
pub fn build_path_codebooks(
    path_sets: &[PathSet],
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
) -> BeamsteeringCodebooks {
    let mut bs = Vec::with_capacity(path_sets.len());
    let mut ms = Vec::with_capacity(path_sets.len());
    for set in path_sets {
        bs.push(
            set.paths
                .iter()
                .map(|p| upa_response(p.aod_azimuth, p.aod_elevation, bs_geom))
                .collect(),
        );
        ms.push(
            set.paths
                .iter()
                .map(|p| upa_response(p.aoa_azimuth, p.aoa_elevation, ms_geom))
                .collect(),
        );
    }
    BeamsteeringCodebooks { bs, ms }
}

/// Two-stage baseline with exactly one data stream per user (K = N_RF = d).
///
/// Stage one maximizes the per-user beamforming gain over the codebook pairs;
/// stage two zero-forces the resulting K x K composite channel and loads
/// powers equally or by waterfilling.
pub fn run_2smuhpa(
    channels: &[CMat],
    codebooks: &BeamsteeringCodebooks,
    power: f64,
    mode: PowerMode,
) -> Result<PrecodingSolution, BaselineError> {
    let users = channels.len();
    if users == 0 {
        return Err(BaselineError::EmptyChannelList);
    }
    if !(power > 0.0) {
        return Err(BaselineError::NonPositivePower);
    }
    let n_bs = channels[0].cols();
    let n_ms = channels[0].rows();

    // Stage 1: best (equalizer, beam) pair per user by raw beamforming gain.
    let mut analog_cols: Vec<Vec<C64>> = Vec::with_capacity(users);
    let mut equalizers: Vec<Vec<C64>> = Vec::with_capacity(users);
    for k in 0..users {
        let mut best: Option<(f64, usize, usize)> = None;
        for (gi, g) in codebooks.ms[k].iter().enumerate() {
            let gh = channels[k].adjoint_matvec(g); // H^H g
            for (pi, p) in codebooks.bs[k].iter().enumerate() {
                let gain = dot_conj(&gh, p).norm(); // |g^H H p|
                if best.map_or(true, |(b, _, _)| gain > b) {
                    best = Some((gain, gi, pi));
                }
            }
        }
        let (_, gi, pi) = best.expect("codebooks are non-empty");
        equalizers.push(codebooks.ms[k][gi].clone());
        analog_cols.push(codebooks.bs[k][pi].clone());
    }
    let analog = CMat::from_cols(&analog_cols);

    // Stage 2: zero-force the composite channel seen through the analog
    // stage.
    let composite = CMat::from_fn(users, users, |k, j| {
        let hp = channels[k].matvec(&analog_cols[j]);
        dot_conj(&equalizers[k], &hp)
    });
    let inv = match guarded_inverse(&composite, DEFAULT_COND_LIMIT) {
        Ok(m) => m,
        Err(NumericsError::Singular) | Err(NumericsError::IllConditioned { .. }) => {
            return Err(BaselineError::SingularComposite)
        }
        Err(e) => return Err(e.into()),
    };

    let base = analog.mul(&inv);
    let gains: Vec<f64> = (0..users).map(|k| 1.0 / norm2(&base.col(k))).collect();
    if gains.iter().any(|g| !g.is_finite()) {
        return Err(BaselineError::SingularComposite);
    }
    let allocation = match mode {
        PowerMode::Equal => PowerAllocation {
            gains: gains.clone(),
            powers: vec![power / users as f64; users],
            budget: power,
        },
        PowerMode::Waterfilling => waterfill(&gains, power)?,
    };

    let mut precoder_cols = Vec::with_capacity(users);
    for k in 0..users {
        let s = C64::new(gains[k] * allocation.powers[k].sqrt(), 0.0);
        precoder_cols.push(base.col(k).iter().map(|&z| z * s).collect::<Vec<_>>());
    }
    let digital = CMat::from_fn(users, users, |i, j| {
        inv[(i, j)] * C64::new(gains[j] * allocation.powers[j].sqrt(), 0.0)
    });

    let stream_users: Vec<usize> = (0..users).collect();
    let sum_rate = allocation.sum_rate();
    Ok(PrecodingSolution::from_streams(
        users,
        n_bs,
        n_ms,
        &stream_users,
        &precoder_cols,
        &equalizers,
        allocation,
        Some(HybridFactors { analog, digital }),
        sum_rate,
        SolutionMeta::default(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{run_rng, sample_scenario_with_rng, synthesize_channel};

    fn scenario(
        seed: u64,
        users: usize,
        paths: usize,
        bs: ArrayGeometry,
        ms: ArrayGeometry,
    ) -> (Vec<PathSet>, Vec<CMat>, BeamsteeringCodebooks) {
        let mut rng = run_rng(seed, 0);
        let sets = sample_scenario_with_rng(&mut rng, users, paths);
        let channels = sets.iter().map(|p| synthesize_channel(p, bs, ms)).collect::<Vec<_>>();
        let books = build_path_codebooks(&sets, bs, ms);
        (sets, channels, books)
    }

    #[test]
    fn codebooks_have_one_entry_per_path_all_unit_norm() {
        let bs = ArrayGeometry::new(4, 2);
        let ms = ArrayGeometry::linear(2);
        let (_, _, books) = scenario(1, 8, 3, bs, ms);
        assert_eq!(books.bs.len(), 8);
        for k in 0..8 {
            assert_eq!(books.bs[k].len(), 3);
            assert_eq!(books.ms[k].len(), 3);
            for v in books.bs[k].iter().chain(&books.ms[k]) {
                assert!((norm2(v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_user_takes_full_power_with_best_pair_gain() {
        let bs = ArrayGeometry::new(4, 2);
        let ms = ArrayGeometry::linear(2);
        let (_, channels, books) = scenario(2, 1, 3, bs, ms);
        let p = 3.0;
        let sol = run_2smuhpa(&channels, &books, p, PowerMode::Waterfilling).unwrap();
        assert_eq!(sol.n_streams(), 1);
        assert!((sol.power.powers[0] - p).abs() < 1e-9);
        // Best raw pair gain: exhaustive over the codebooks.
        let mut best = 0.0f64;
        for g in &books.ms[0] {
            for b in &books.bs[0] {
                let gain = dot_conj(&channels[0].adjoint_matvec(g), b).norm();
                best = best.max(gain);
            }
        }
        let expect = (1.0 + p * best * best).log2();
        assert!((sol.sum_rate - expect).abs() < 1e-9);
    }

    #[test]
    fn equal_mode_gives_every_stream_the_same_power() {
        let bs = ArrayGeometry::new(4, 2);
        let ms = ArrayGeometry::linear(2);
        let (_, channels, books) = scenario(3, 4, 3, bs, ms);
        let sol = run_2smuhpa(&channels, &books, 2.0, PowerMode::Equal).unwrap();
        for &p in &sol.power.powers {
            assert!((p - 0.5).abs() < 1e-12);
        }
        assert!((sol.total_power() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn composite_channel_is_diagonalized() {
        let bs = ArrayGeometry::new(4, 2);
        let ms = ArrayGeometry::linear(2);
        let (_, channels, books) = scenario(4, 8, 3, bs, ms);
        let sol = run_2smuhpa(&channels, &books, 1.0, PowerMode::Waterfilling).unwrap();
        for k in 0..8 {
            let g = sol.equalizers[k].col(0);
            for j in 0..8 {
                let hp = channels[k].matvec(&sol.precoders[j].col(0));
                let v = dot_conj(&g, &hp).norm();
                if j == k {
                    let expect = sol.power.gains[k] * sol.power.powers[k].sqrt();
                    assert!((v - expect).abs() < 1e-8 * expect.max(1.0));
                } else if sol.power.powers[k] > 0.0 {
                    assert!(v < 1e-8, "residual interference {v}");
                }
            }
        }
        assert!(sol.total_power() <= 1.0 + 1e-6);
    }

    #[test]
    fn waterfilling_mode_never_loses_to_equal_split() {
        let bs = ArrayGeometry::new(4, 2);
        let ms = ArrayGeometry::linear(1);
        for seed in 0..30 {
            let (_, channels, books) = scenario(100 + seed, 4, 2, bs, ms);
            let eq = run_2smuhpa(&channels, &books, 1.0, PowerMode::Equal).unwrap();
            let wf = run_2smuhpa(&channels, &books, 1.0, PowerMode::Waterfilling).unwrap();
            assert!(wf.sum_rate >= eq.sum_rate - 1e-9);
        }
    }
}
