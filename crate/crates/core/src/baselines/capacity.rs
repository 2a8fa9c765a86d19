//! Sum capacity of the broadcast channel via sum-power iterative
//! waterfilling on the dual multiple-access channel.
//!
//! Each iteration waterfills the total budget jointly over the eigenmodes of
//! every user's effective channel (interference from the other users'
//! current covariances whitened away), then averages the fresh covariances
//! with the previous ones, which keeps the objective nondecreasing. The
//! computation runs in the joint column space of the channel adjoints, whose
//! dimension is bounded by the total path count.

use super::BaselineError;
use crate::mat::{dot_conj, norm2, C64, CMat};
use crate::numerics::{
    cholesky_lower, hermitian_eigen, invert_lower_triangular, logdet2_hermitian_pd,
    DEFAULT_COND_LIMIT,
};
use crate::precoding::waterfill;

/// Sum-capacity bound outcome.
#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Bits per channel use.
    pub sum_capacity: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Dirty-paper-coding sum capacity with total power `power`; iterates until
/// the relative change drops below `tol` or `max_iters` is hit (flagged, not
/// fatal).
pub fn dpc_sum_capacity(
    channels: &[CMat],
    power: f64,
    tol: f64,
    max_iters: usize,
) -> Result<CapacityResult, BaselineError> {
    dpc_sum_capacity_traced(channels, power, tol, max_iters, None)
}

pub(crate) fn dpc_sum_capacity_traced(
    channels: &[CMat],
    power: f64,
    tol: f64,
    max_iters: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<CapacityResult, BaselineError> {
    let users = channels.len();
    if users == 0 {
        return Err(BaselineError::EmptyChannelList);
    }
    if !(power > 0.0) {
        return Err(BaselineError::NonPositivePower);
    }
    let n_ms = channels[0].rows();

    // Orthonormal basis of the joint column space of the channel adjoints.
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for h in channels {
        for r in 0..h.rows() {
            let mut v: Vec<C64> = h.row(r).iter().map(|z| z.conj()).collect();
            let orig = norm2(&v);
            if orig < 1e-300 {
                continue;
            }
            for b in &basis {
                let coeff = dot_conj(b, &v);
                for (vi, &bi) in v.iter_mut().zip(b) {
                    *vi -= coeff * bi;
                }
            }
            let len = norm2(&v);
            if len > 1e-12 * orig {
                basis.push(v.iter().map(|z| z / len).collect());
            }
        }
    }
    if basis.is_empty() {
        // All channels are zero; the broadcast channel carries nothing.
        return Ok(CapacityResult { sum_capacity: 0.0, iterations: 0, converged: true });
    }
    let dim = basis.len();
    let w = CMat::from_cols(&basis);
    let reduced: Vec<CMat> = channels.iter().map(|h| h.mul(&w)).collect();

    // Uniform start: each user gets power/users spread over its antennas.
    let init = power / (users as f64 * n_ms as f64);
    let mut covariances: Vec<CMat> = (0..users)
        .map(|_| CMat::identity(n_ms).scale(C64::new(init, 0.0)))
        .collect();

    let objective = |covs: &[CMat]| -> Result<f64, BaselineError> {
        let mut a = CMat::identity(dim);
        for (h, q) in reduced.iter().zip(covs) {
            a = a.add(&h.adjoint().mul(&q.mul(h)));
        }
        Ok(logdet2_hermitian_pd(&a)?)
    };

    let mut current = objective(&covariances)?;
    if let Some(t) = trace.as_deref_mut() {
        t.push(current);
    }
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        iterations += 1;

        let mut a = CMat::identity(dim);
        let per_user_terms: Vec<CMat> = reduced
            .iter()
            .zip(&covariances)
            .map(|(h, q)| h.adjoint().mul(&q.mul(h)))
            .collect();
        for term in &per_user_terms {
            a = a.add(term);
        }

        // Whitened effective channels and their eigenmodes.
        let mut modes: Vec<(usize, Vec<f64>, CMat)> = Vec::with_capacity(users);
        let mut all_gains: Vec<f64> = Vec::new();
        for k in 0..users {
            let z = a.sub(&per_user_terms[k]);
            let l = cholesky_lower(&z)?;
            let l_inv = invert_lower_triangular(&l, DEFAULT_COND_LIMIT)?;
            let m = l_inv.mul(&reduced[k].adjoint()); // dim x n_ms
            let g = m.adjoint().mul(&m); // Hermitian PSD
            let (vals, vecs) = hermitian_eigen(&g)?;
            all_gains.extend(vals.iter().map(|&v| v.max(0.0)));
            modes.push((k, vals, vecs));
        }

        // Joint waterfilling over every user's eigenmodes: rate terms are
        // log2(1 + p * val), i.e. amplitude gains sqrt(val).
        let live: Vec<f64> = all_gains.iter().filter(|&&v| v > 1e-14).map(|&v| v.sqrt()).collect();
        if live.is_empty() {
            break;
        }
        let wf = waterfill(&live, power)?;
        let mut powers = Vec::with_capacity(all_gains.len());
        let mut it = wf.powers.iter();
        for &v in &all_gains {
            powers.push(if v > 1e-14 { *it.next().unwrap() } else { 0.0 });
        }

        // Fresh covariances, then the averaged update.
        let mut offset = 0;
        for (k, vals, vecs) in &modes {
            let mut fresh = CMat::zeros(n_ms, n_ms);
            for m in 0..vals.len() {
                let p = powers[offset + m];
                if p > 0.0 {
                    let scaled: Vec<C64> =
                        vecs.col(m).iter().map(|&z| z * p.sqrt()).collect();
                    fresh.add_outer(&scaled, &scaled);
                }
            }
            offset += vals.len();
            let kf = users as f64;
            covariances[*k] = covariances[*k]
                .scale(C64::new((kf - 1.0) / kf, 0.0))
                .add(&fresh.scale(C64::new(1.0 / kf, 0.0)));
        }

        let next = objective(&covariances)?;
        debug_assert!(next >= current - 1e-9, "objective decreased: {current} -> {next}");
        if let Some(t) = trace.as_deref_mut() {
            t.push(next);
        }
        let delta = (next - current).abs();
        current = next;
        if delta <= tol * current.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(CapacityResult { sum_capacity: current.max(0.0), iterations, converged })
}
