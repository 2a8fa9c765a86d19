//! Stream selection rules, the shared allocation loop, and the solver entry
//! points for the digital, hybrid, and path-domain variants.

use super::hybrid::{hybridize, phase_project_vec};
use super::solution::{PrecodingSolution, SolutionMeta};
use super::state::AllocationState;
use super::waterfill::{waterfill, PowerAllocation};
use super::PrecodingError;
use crate::channel::{synthesize_channel, upa_response, ArrayGeometry, PathSet};
use crate::mat::{dot_conj, norm2, C64, CMat};
use crate::numerics::{invert_lower_triangular, max_singular_triple, DEFAULT_COND_LIMIT};

/// Gains below this are treated as "no remaining channel" and stop the
/// allocation.
const NO_GAIN_THRESHOLD: f64 = 1e-12;

/// One candidate stream: the chosen user, its unit-norm equalizer, the
/// matching unit-norm auxiliary precoder (orthogonal to every committed one),
/// and the selection metric that won.
#[derive(Debug, Clone)]
pub struct StreamSelection {
    pub user: usize,
    pub path: Option<usize>,
    pub equalizer: Vec<C64>,
    pub beam: Vec<C64>,
    pub gain: f64,
}

/// Full selection rule: the user whose projected channel has the largest
/// maximum singular value, with the corresponding singular vectors.
///
/// Returns `Ok(None)` when every projected channel is numerically zero.
/// Ties break toward the lowest user index.
pub fn lisa_select_stream(
    state: &AllocationState,
    channels: &[CMat],
) -> Result<Option<StreamSelection>, PrecodingError> {
    let all: Vec<usize> = (0..channels.len()).collect();
    select_full(state, channels, &all)
}

pub(super) fn select_full(
    state: &AllocationState,
    channels: &[CMat],
    candidates: &[usize],
) -> Result<Option<StreamSelection>, PrecodingError> {
    let mut best: Option<(usize, f64, Vec<C64>)> = None;
    for &k in candidates {
        let projected = channels[k].mul(state.bs_projector());
        let triple = max_singular_triple(&projected)?;
        if best.as_ref().map_or(true, |(_, sigma, _)| triple.sigma > *sigma) {
            best = Some((k, triple.sigma, triple.left));
        }
    }
    let Some((user, sigma, equalizer)) = best else { return Ok(None) };
    if sigma < NO_GAIN_THRESHOLD {
        return Ok(None);
    }
    let Some(beam) = match_beam(state, &channels[user], &equalizer) else {
        return Ok(None);
    };
    Ok(Some(StreamSelection { user, path: None, equalizer, beam, gain: sigma }))
}

/// Path-domain selection rule: picks the user/path pair with the largest
/// projected weight instead of decomposing projected channels.
///
/// `channels` are the matrices synthesized from the same path sets (the
/// matching caller synthesizes them once per scenario); they are needed to
/// match the auxiliary precoder to the equalizer.
pub fn lc_select_stream(
    state: &AllocationState,
    path_sets: &[PathSet],
    channels: &[CMat],
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
) -> Result<Option<StreamSelection>, PrecodingError> {
    let all: Vec<usize> = (0..path_sets.len()).collect();
    select_path(state, path_sets, channels, bs_geom, ms_geom, &all)
}

pub(super) fn select_path(
    state: &AllocationState,
    path_sets: &[PathSet],
    channels: &[CMat],
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
    candidates: &[usize],
) -> Result<Option<StreamSelection>, PrecodingError> {
    let n_bs = bs_geom.elements() as f64;
    let n_ms = ms_geom.elements() as f64;

    let mut best: Option<(usize, usize, f64)> = None;
    for &k in candidates {
        let set = &path_sets[k];
        let prefactor = (n_bs * n_ms / set.paths.len() as f64).sqrt();
        for (l, path) in set.paths.iter().enumerate() {
            let a_ms = upa_response(path.aoa_azimuth, path.aoa_elevation, ms_geom);
            let a_bs = upa_response(path.aod_azimuth, path.aod_elevation, bs_geom);
            let rx_len = norm2(&state.ms_projector(k).matvec(&a_ms));
            let tx_len = norm2(&state.bs_projector().matvec(&a_bs));
            let weight = prefactor * path.gain.norm() * rx_len * tx_len;
            if best.map_or(true, |(_, _, w)| weight > w) {
                best = Some((k, l, weight));
            }
        }
    }
    let Some((user, path_idx, weight)) = best else { return Ok(None) };
    if weight < NO_GAIN_THRESHOLD {
        return Ok(None);
    }

    let chosen = &path_sets[user].paths[path_idx];
    let a_ms = upa_response(chosen.aoa_azimuth, chosen.aoa_elevation, ms_geom);
    let projected = state.ms_projector(user).matvec(&a_ms);
    let len = norm2(&projected);
    if len < NO_GAIN_THRESHOLD {
        return Ok(None);
    }
    let equalizer: Vec<C64> = projected.iter().map(|z| z / len).collect();
    let Some(beam) = match_beam(state, &channels[user], &equalizer) else {
        return Ok(None);
    };
    Ok(Some(StreamSelection { user, path: Some(path_idx), equalizer, beam, gain: weight }))
}

/// Applies the analog-receiver modifier to a fresh selection: the equalizer
/// keeps only its entry phases at modulus `1/sqrt(n_ms)` and the auxiliary
/// precoder is re-matched to the projected equalizer. The candidate
/// restriction (fewer committed streams than receive RF chains) is enforced
/// by the allocation loop before selection.
pub fn apply_ms_analog_constraints(
    selection: &mut StreamSelection,
    state: &AllocationState,
    h_user: &CMat,
) -> bool {
    let n_ms = h_user.rows();
    selection.equalizer = phase_project_vec(&selection.equalizer, 1.0 / (n_ms as f64).sqrt());
    match match_beam(state, h_user, &selection.equalizer) {
        Some(beam) => {
            selection.beam = beam;
            true
        }
        None => false,
    }
}

/// Gram-Schmidt step tying the auxiliary precoder to the equalizer:
/// projects `H^H g` onto the remaining nullspace and normalizes, with one
/// explicit reorthogonalization pass against the committed columns.
fn match_beam(state: &AllocationState, h_user: &CMat, equalizer: &[C64]) -> Option<Vec<C64>> {
    let mut v = state.bs_projector().matvec(&h_user.adjoint_matvec(equalizer));
    for j in 0..state.n_streams() {
        let q = state.orth_col(j);
        let coeff = dot_conj(q, &v);
        for (vi, &qi) in v.iter_mut().zip(q) {
            *vi -= coeff * qi;
        }
    }
    let len = norm2(&v);
    if len < NO_GAIN_THRESHOLD {
        return None;
    }
    Some(v.iter().map(|z| z / len).collect())
}

/// Per-stream amplitude gains of the zero-forced subchannels: the inverse
/// column norms of the inverted triangular factor.
fn stream_gains(state: &AllocationState) -> Result<Vec<f64>, PrecodingError> {
    let inv = invert_lower_triangular(&state.lower_matrix(), DEFAULT_COND_LIMIT)?;
    Ok((0..state.n_streams()).map(|j| 1.0 / norm2(&inv.col(j))).collect())
}

/// Zero-forcing second stage: effective per-stream precoder columns
/// `Q L^-1 Lambda Gamma^(1/2)` together with the gains used.
pub fn digital_second_stage(
    state: &AllocationState,
    stream_powers: &[f64],
) -> Result<(Vec<Vec<C64>>, Vec<f64>), PrecodingError> {
    let d = state.n_streams();
    assert_eq!(d, stream_powers.len(), "one power per allocated stream");
    let inv = invert_lower_triangular(&state.lower_matrix(), DEFAULT_COND_LIMIT)?;
    let gains: Vec<f64> = (0..d).map(|j| 1.0 / norm2(&inv.col(j))).collect();

    let n_bs = state.n_bs();
    let mut cols = Vec::with_capacity(d);
    for j in 0..d {
        let scale: Vec<C64> = (0..d)
            .map(|m| inv[(m, j)] * C64::new(gains[j] * stream_powers[j].sqrt(), 0.0))
            .collect();
        let mut col = vec![C64::new(0.0, 0.0); n_bs];
        for (m, s) in scale.iter().enumerate() {
            if s.re == 0.0 && s.im == 0.0 {
                continue;
            }
            for (c, &qm) in col.iter_mut().zip(state.orth_col(m)) {
                *c += qm * s;
            }
        }
        cols.push(col);
    }
    Ok((cols, gains))
}

#[derive(Clone, Copy)]
enum SelectionRule {
    FullDecomposition,
    PathWeights,
}

struct AllocationRun {
    state: AllocationState,
    power: Option<PowerAllocation>,
    meta: SolutionMeta,
}

struct EngineInputs<'a> {
    channels: &'a [CMat],
    path_sets: Option<&'a [PathSet]>,
    bs_geom: Option<ArrayGeometry>,
    ms_geom: Option<ArrayGeometry>,
    rule: SelectionRule,
    ms_rf_limit: Option<usize>,
    n_rf: usize,
    budget: f64,
}

fn validate(inputs: &EngineInputs) -> Result<(usize, usize, usize), PrecodingError> {
    let channels = inputs.channels;
    if channels.is_empty() {
        return Err(PrecodingError::EmptyChannelList);
    }
    let n_ms = channels[0].rows();
    let n_bs = channels[0].cols();
    if channels.iter().any(|h| h.rows() != n_ms || h.cols() != n_bs) {
        return Err(PrecodingError::EmptyChannelList);
    }
    if inputs.n_rf < 1 || inputs.n_rf > n_bs || !(inputs.budget > 0.0) {
        return Err(PrecodingError::InvalidBudget);
    }
    if let Some(limit) = inputs.ms_rf_limit {
        if limit < 1 || limit > n_ms {
            return Err(PrecodingError::InvalidBudget);
        }
    }
    Ok((channels.len(), n_bs, n_ms))
}

/// The successive allocation loop shared by every variant: select, commit,
/// waterfill, keep the stream only on a strict sum-rate increase.
fn run_allocation(inputs: &EngineInputs) -> Result<AllocationRun, PrecodingError> {
    let (users, n_bs, n_ms) = validate(inputs)?;
    let mut state = AllocationState::new(n_bs, n_ms, users);
    let mut meta = SolutionMeta::default();
    let mut power: Option<PowerAllocation> = None;
    let mut best_rate = 0.0f64;

    for _ in 0..inputs.n_rf {
        let candidates: Vec<usize> = (0..users)
            .filter(|&k| inputs.ms_rf_limit.is_none_or(|limit| state.streams_for(k) < limit))
            .collect();
        if candidates.is_empty() {
            meta.candidates_exhausted = true;
            break;
        }

        let selected = match inputs.rule {
            SelectionRule::FullDecomposition => select_full(&state, inputs.channels, &candidates)?,
            SelectionRule::PathWeights => select_path(
                &state,
                inputs.path_sets.expect("path sets required for path-domain selection"),
                inputs.channels,
                inputs.bs_geom.expect("geometry required"),
                inputs.ms_geom.expect("geometry required"),
                &candidates,
            )?,
        };
        let Some(mut sel) = selected else {
            meta.no_gain_stop = true;
            break;
        };

        if inputs.ms_rf_limit.is_some() {
            let h_user = &inputs.channels[sel.user];
            if !apply_ms_analog_constraints(&mut sel, &state, h_user) {
                meta.no_gain_stop = true;
                break;
            }
        }

        state.push_stream(sel.user, &sel.equalizer, &sel.beam, &inputs.channels[sel.user]);
        let gains = stream_gains(&state)?;
        let wf = waterfill(&gains, inputs.budget)?;
        let rate = wf.sum_rate();
        if rate > best_rate {
            best_rate = rate;
            meta.accepted_rates.push(rate);
            power = Some(wf);
        } else {
            state.pop_stream();
            break;
        }
    }

    Ok(AllocationRun { state, power, meta })
}

fn empty_solution(users: usize, n_bs: usize, n_ms: usize, budget: f64, meta: SolutionMeta) -> PrecodingSolution {
    PrecodingSolution::from_streams(
        users,
        n_bs,
        n_ms,
        &[],
        &[],
        &[],
        PowerAllocation { gains: Vec::new(), powers: Vec::new(), budget },
        None,
        0.0,
        meta,
    )
}

fn finish_digital(
    channels: &[CMat],
    budget: f64,
    run: AllocationRun,
) -> Result<PrecodingSolution, PrecodingError> {
    let users = channels.len();
    let n_bs = channels[0].cols();
    let n_ms = channels[0].rows();
    let Some(power) = run.power else {
        return Ok(empty_solution(users, n_bs, n_ms, budget, run.meta));
    };
    let (cols, _) = digital_second_stage(&run.state, &power.powers)?;
    let equalizers: Vec<Vec<C64>> =
        (0..run.state.n_streams()).map(|j| run.state.equalizer(j).to_vec()).collect();
    let rate = power.sum_rate();
    Ok(PrecodingSolution::from_streams(
        users,
        n_bs,
        n_ms,
        run.state.stream_users(),
        &cols,
        &equalizers,
        power,
        None,
        rate,
        run.meta,
    ))
}

fn finish_hybrid(
    channels: &[CMat],
    budget: f64,
    mut run: AllocationRun,
) -> Result<PrecodingSolution, PrecodingError> {
    let users = channels.len();
    let n_bs = channels[0].cols();
    let n_ms = channels[0].rows();
    if run.power.is_none() {
        return Ok(empty_solution(users, n_bs, n_ms, budget, run.meta));
    }

    let mut retries = 0usize;
    loop {
        if run.state.n_streams() == 0 {
            return Err(PrecodingError::HybridFailed { retries });
        }
        match hybridize(&run.state, budget, DEFAULT_COND_LIMIT) {
            Ok(stage) => {
                run.meta.hybrid_retries = retries;
                let equalizers: Vec<Vec<C64>> = (0..run.state.n_streams())
                    .map(|j| run.state.equalizer(j).to_vec())
                    .collect();
                let rate = stage.power.sum_rate();
                return Ok(PrecodingSolution::from_streams(
                    users,
                    n_bs,
                    n_ms,
                    run.state.stream_users(),
                    &stage.precoder_cols,
                    &equalizers,
                    stage.power,
                    Some(stage.factors),
                    rate,
                    run.meta,
                ));
            }
            Err(PrecodingError::HybridIllConditioned { .. }) => {
                // Drop the most recent stream, re-project, re-zero-force.
                run.state.pop_stream();
                retries += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Fully digital successive allocation.
pub fn run_lisa(channels: &[CMat], n_rf: usize, power: f64) -> Result<PrecodingSolution, PrecodingError> {
    let inputs = EngineInputs {
        channels,
        path_sets: None,
        bs_geom: None,
        ms_geom: None,
        rule: SelectionRule::FullDecomposition,
        ms_rf_limit: None,
        n_rf,
        budget: power,
    };
    let run = run_allocation(&inputs)?;
    finish_digital(channels, power, run)
}

/// Hybrid variant: same allocation, then the constant-modulus projection of
/// the first-stage factor with a re-zero-forced digital stage.
pub fn run_h_lisa(channels: &[CMat], n_rf: usize, power: f64) -> Result<PrecodingSolution, PrecodingError> {
    let inputs = EngineInputs {
        channels,
        path_sets: None,
        bs_geom: None,
        ms_geom: None,
        rule: SelectionRule::FullDecomposition,
        ms_rf_limit: None,
        n_rf,
        budget: power,
    };
    let run = run_allocation(&inputs)?;
    finish_hybrid(channels, power, run)
}

/// Hybrid variant with analog processing at the mobile stations: candidate
/// users are limited to `ms_rf_chains` streams and every equalizer is
/// constant modulus; the precoders absorb the correction.
pub fn run_h_lisa_ms_analog(
    channels: &[CMat],
    n_rf: usize,
    ms_rf_chains: usize,
    power: f64,
) -> Result<PrecodingSolution, PrecodingError> {
    let inputs = EngineInputs {
        channels,
        path_sets: None,
        bs_geom: None,
        ms_geom: None,
        rule: SelectionRule::FullDecomposition,
        ms_rf_limit: Some(ms_rf_chains),
        n_rf,
        budget: power,
    };
    let run = run_allocation(&inputs)?;
    finish_hybrid(channels, power, run)
}

fn lc_inputs<'a>(
    path_sets: &'a [PathSet],
    channels: &'a [CMat],
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
    ms_rf_limit: Option<usize>,
    n_rf: usize,
    budget: f64,
) -> EngineInputs<'a> {
    EngineInputs {
        channels,
        path_sets: Some(path_sets),
        bs_geom: Some(bs_geom),
        ms_geom: Some(ms_geom),
        rule: SelectionRule::PathWeights,
        ms_rf_limit,
        n_rf,
        budget,
    }
}

fn synthesize_all(path_sets: &[PathSet], bs_geom: ArrayGeometry, ms_geom: ArrayGeometry) -> Vec<CMat> {
    path_sets.iter().map(|set| synthesize_channel(set, bs_geom, ms_geom)).collect()
}

/// Path-domain successive allocation consuming channel geometry instead of
/// channel matrices (which are synthesized once internally for the composite
/// channel rows).
pub fn run_lc_lisa(
    path_sets: &[PathSet],
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
    n_rf: usize,
    power: f64,
) -> Result<PrecodingSolution, PrecodingError> {
    let channels = synthesize_all(path_sets, bs_geom, ms_geom);
    let run = run_allocation(&lc_inputs(path_sets, &channels, bs_geom, ms_geom, None, n_rf, power))?;
    finish_digital(&channels, power, run)
}

/// Path-domain hybrid variant.
pub fn run_lc_h_lisa(
    path_sets: &[PathSet],
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
    n_rf: usize,
    power: f64,
) -> Result<PrecodingSolution, PrecodingError> {
    let channels = synthesize_all(path_sets, bs_geom, ms_geom);
    let run = run_allocation(&lc_inputs(path_sets, &channels, bs_geom, ms_geom, None, n_rf, power))?;
    finish_hybrid(&channels, power, run)
}

/// Path-domain hybrid variant with analog processing at the mobile stations.
pub fn run_lc_h_lisa_ms_analog(
    path_sets: &[PathSet],
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
    n_rf: usize,
    ms_rf_chains: usize,
    power: f64,
) -> Result<PrecodingSolution, PrecodingError> {
    let channels = synthesize_all(path_sets, bs_geom, ms_geom);
    let run = run_allocation(&lc_inputs(
        path_sets,
        &channels,
        bs_geom,
        ms_geom,
        Some(ms_rf_chains),
        n_rf,
        power,
    ))?;
    finish_hybrid(&channels, power, run)
}
