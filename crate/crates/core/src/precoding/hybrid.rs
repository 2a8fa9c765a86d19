//! Constant-modulus projection and the hybrid zero-forcing second stage.

use super::solution::HybridFactors;
use super::state::AllocationState;
use super::waterfill::{waterfill, PowerAllocation};
use super::PrecodingError;
use crate::mat::{norm2, C64, CMat};
use crate::numerics::{guarded_inverse, NumericsError};

/// Projects every entry onto the circle of the given modulus, keeping only
/// its phase. Zero entries map to `+modulus` (phase-zero convention).
pub fn phase_project(m: &CMat, modulus: f64) -> CMat {
    CMat::from_fn(m.rows(), m.cols(), |i, j| project_entry(m[(i, j)], modulus))
}

/// Vector variant used for the analog equalizers at the mobile stations.
pub fn phase_project_vec(v: &[C64], modulus: f64) -> Vec<C64> {
    v.iter().map(|&z| project_entry(z, modulus)).collect()
}

fn project_entry(z: C64, modulus: f64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        C64::new(modulus, 0.0)
    } else {
        z * (modulus / r)
    }
}

/// Output of the hybrid second stage: the factorization, the re-derived
/// gains/powers, and the effective per-stream precoder columns.
pub struct HybridStage {
    pub factors: HybridFactors,
    pub power: PowerAllocation,
    pub precoder_cols: Vec<Vec<C64>>,
}

/// Replaces the orthonormal first-stage factor by its constant-modulus
/// projection and re-zero-forces the distorted triangular factor.
///
/// The analog factor is the phase projection of the orthonormal columns; the
/// digital factor inverts `L (Q^H P_A)`, then columns are renormalized and
/// powers re-derived by waterfilling on the new gains. Ill conditioning of
/// the zero-forcing factor surfaces as an error so the caller can drop the
/// last allocated stream and retry.
pub fn hybridize(
    state: &AllocationState,
    budget: f64,
    cond_limit: f64,
) -> Result<HybridStage, PrecodingError> {
    let d = state.n_streams();
    assert!(d >= 1, "hybridize needs at least one allocated stream");
    let n_bs = state.n_bs();

    let orth = state.orth_matrix();
    let analog = phase_project(&orth, 1.0 / (n_bs as f64).sqrt());
    let zf_base = state.lower_matrix().mul(&orth.adjoint().mul(&analog));
    let zf_inv = match guarded_inverse(&zf_base, cond_limit) {
        Ok(m) => m,
        Err(NumericsError::IllConditioned { estimate, .. }) => {
            return Err(PrecodingError::HybridIllConditioned { estimate })
        }
        Err(NumericsError::Singular) => {
            return Err(PrecodingError::HybridIllConditioned { estimate: f64::INFINITY })
        }
        Err(e) => return Err(PrecodingError::Numerics(e)),
    };

    let base = analog.mul(&zf_inv); // columns renormalized below
    let gains: Vec<f64> = (0..d).map(|j| 1.0 / norm2(&base.col(j))).collect();
    if gains.iter().any(|g| !g.is_finite()) {
        return Err(PrecodingError::HybridIllConditioned { estimate: f64::INFINITY });
    }
    let power = waterfill(&gains, budget)?;

    let mut precoder_cols = Vec::with_capacity(d);
    for j in 0..d {
        let s = C64::new(gains[j] * power.powers[j].sqrt(), 0.0);
        precoder_cols.push(base.col(j).iter().map(|&z| z * s).collect());
    }
    let digital = CMat::from_fn(d, d, |i, j| {
        zf_inv[(i, j)] * C64::new(gains[j] * power.powers[j].sqrt(), 0.0)
    });

    Ok(HybridStage { factors: HybridFactors { analog, digital }, power, precoder_cols })
}
