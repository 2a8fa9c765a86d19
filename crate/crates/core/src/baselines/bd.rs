//! Block diagonalization with exhaustive search over user subsets.
//!
//! Every served user transmits in the nullspace of the other served users'
//! stacked channels and eigen-beamforms inside it; powers come from one joint
//! waterfilling over all eigenmodes, and the best subset wins.

use super::BaselineError;
use crate::mat::{dot_conj, norm2, C64, CMat};
use crate::numerics::hermitian_eigen;
use crate::precoding::{waterfill, PowerAllocation, PrecodingSolution, SolutionMeta};

const ZERO_MODE_THRESHOLD: f64 = 1e-12;

struct SubsetSolution {
    rate: f64,
    members: Vec<usize>,
    // Per member: (equalizer columns, precoder direction columns, gains).
    per_user: Vec<(Vec<Vec<C64>>, Vec<Vec<C64>>, Vec<f64>)>,
    allocation: PowerAllocation,
}

/// Block-diagonalization baseline. Each served user receives exactly
/// `n_ms` streams; at most `n_rf / n_ms` users can be served at once.
pub fn run_bd(channels: &[CMat], power: f64, n_rf: usize) -> Result<PrecodingSolution, BaselineError> {
    let users = channels.len();
    if users == 0 {
        return Err(BaselineError::EmptyChannelList);
    }
    if !(power > 0.0) {
        return Err(BaselineError::NonPositivePower);
    }
    let n_ms = channels[0].rows();
    let n_bs = channels[0].cols();
    if n_rf % n_ms != 0 {
        return Err(BaselineError::StreamsNotDivisible);
    }
    let max_users = n_rf / n_ms;

    let mut best: Option<SubsetSolution> = None;
    // Ascending bitmask order; strict improvement keeps the lowest-index
    // subset on ties.
    for mask in 1u64..(1u64 << users) {
        let members: Vec<usize> = (0..users).filter(|k| mask & (1 << k) != 0).collect();
        if members.len() > max_users {
            continue;
        }
        let candidate = evaluate_subset(channels, &members, power, n_bs, n_ms)?;
        if best.as_ref().map_or(true, |b| candidate.rate > b.rate) {
            best = Some(candidate);
        }
    }
    let best = best.expect("at least the singleton subsets are evaluated");

    // Assemble per-stream columns in member order, modes within a member.
    let mut stream_users = Vec::new();
    let mut precoder_cols = Vec::new();
    let mut equalizer_cols = Vec::new();
    for (m, &k) in best.members.iter().enumerate() {
        let (eqs, dirs, _) = &best.per_user[m];
        for (g, v) in eqs.iter().zip(dirs) {
            stream_users.push(k);
            equalizer_cols.push(g.clone());
            precoder_cols.push(v.clone());
        }
    }
    // Scale precoder directions by the allocated powers.
    for (col, &p) in precoder_cols.iter_mut().zip(&best.allocation.powers) {
        let s = C64::new(p.sqrt(), 0.0);
        for z in col.iter_mut() {
            *z *= s;
        }
    }

    let rate = best.allocation.sum_rate();
    Ok(PrecodingSolution::from_streams(
        users,
        n_bs,
        n_ms,
        &stream_users,
        &precoder_cols,
        &equalizer_cols,
        best.allocation,
        None,
        rate,
        SolutionMeta::default(),
    ))
}

fn evaluate_subset(
    channels: &[CMat],
    members: &[usize],
    power: f64,
    n_bs: usize,
    n_ms: usize,
) -> Result<SubsetSolution, BaselineError> {
    let mut per_user: Vec<(Vec<Vec<C64>>, Vec<Vec<C64>>, Vec<f64>)> = Vec::new();
    let mut all_gains: Vec<f64> = Vec::new();

    for &k in members {
        // Orthonormal basis of the other members' stacked row space.
        let mut basis: Vec<Vec<C64>> = Vec::new();
        for &j in members {
            if j == k {
                continue;
            }
            for r in 0..n_ms {
                let mut v: Vec<C64> = channels[j].row(r).iter().map(|z| z.conj()).collect();
                for b in &basis {
                    let coeff = dot_conj(b, &v);
                    for (vi, &bi) in v.iter_mut().zip(b) {
                        *vi -= coeff * bi;
                    }
                }
                let len = norm2(&v);
                if len > 1e-10 {
                    basis.push(v.iter().map(|z| z / len).collect());
                }
            }
        }
        if basis.len() >= n_bs {
            return Err(BaselineError::NullspaceExhausted);
        }

        // Project the user's channel onto the nullspace of the others.
        let mut projected = channels[k].clone();
        for b in &basis {
            // projected -= (projected b) b^H
            let pb = projected.matvec(b);
            projected.sub_outer(&pb, b);
        }

        // Eigen-beamform inside the nullspace: top modes of the projected
        // channel via its receive-side Gram matrix.
        let gram = projected.mul(&projected.adjoint());
        let (vals, vecs) = hermitian_eigen(&gram)?;
        let mut eqs = Vec::with_capacity(n_ms);
        let mut dirs = Vec::with_capacity(n_ms);
        let mut gains = Vec::with_capacity(n_ms);
        for m in 0..n_ms {
            let sigma = vals[m].max(0.0).sqrt();
            let u = vecs.col(m);
            if sigma > ZERO_MODE_THRESHOLD {
                let v = projected.adjoint_matvec(&u);
                let v: Vec<C64> = v.iter().map(|z| z / sigma).collect();
                eqs.push(u);
                dirs.push(v);
                gains.push(sigma);
            } else {
                // Dead mode: zero transmit direction, zero power later.
                eqs.push(u);
                dirs.push(vec![C64::new(0.0, 0.0); n_bs]);
                gains.push(0.0);
            }
        }
        all_gains.extend(gains.iter().copied());
        per_user.push((eqs, dirs, gains));
    }

    // Joint waterfilling across the live eigenmodes of the whole subset.
    let live: Vec<f64> = all_gains.iter().copied().filter(|&g| g > 0.0).collect();
    let allocation = if live.is_empty() {
        PowerAllocation { gains: all_gains.clone(), powers: vec![0.0; all_gains.len()], budget: power }
    } else {
        let wf = waterfill(&live, power)?;
        let mut powers = Vec::with_capacity(all_gains.len());
        let mut it = wf.powers.iter();
        for &g in &all_gains {
            powers.push(if g > 0.0 { *it.next().unwrap() } else { 0.0 });
        }
        PowerAllocation { gains: all_gains.clone(), powers, budget: power }
    };

    Ok(SubsetSolution {
        rate: allocation.sum_rate(),
        members: members.to_vec(),
        per_user,
        allocation,
    })
}
