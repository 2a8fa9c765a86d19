//! Waterfilling power allocation over parallel scalar subchannels.

use super::PrecodingError;

/// Per-stream amplitude gains and the powers assigned to them.
///
/// Active streams share a common waterlevel `gamma_j + 1/lambda_j^2`; total
/// power never exceeds the budget.
#[derive(Debug, Clone)]
pub struct PowerAllocation {
    pub gains: Vec<f64>,
    pub powers: Vec<f64>,
    pub budget: f64,
}

impl PowerAllocation {
    pub fn sum_rate(&self) -> f64 {
        self.gains
            .iter()
            .zip(&self.powers)
            .map(|(&l, &g)| (1.0 + g * l * l).log2())
            .sum()
    }
}

/// Exact active-set waterfilling: maximizes `sum log2(1 + gamma * lambda^2)`
/// subject to `sum gamma <= budget`, `gamma >= 0`.
///
/// Sorting by gain gives the candidate active sets; the waterlevel for each
/// is closed-form, and the first feasible one is the KKT point.
pub fn waterfill(gains: &[f64], budget: f64) -> Result<PowerAllocation, PrecodingError> {
    if gains.is_empty() {
        return Err(PrecodingError::EmptyGains);
    }
    if !(budget > 0.0) || gains.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(PrecodingError::InvalidWaterfillInput);
    }

    let n = gains.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Strongest gain first, i.e. smallest inverse squared gain first.
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let inv_sq: Vec<f64> = order.iter().map(|&i| 1.0 / (gains[i] * gains[i])).collect();

    let mut prefix = 0.0;
    let mut level = 0.0;
    let mut active = 0;
    for m in 0..n {
        prefix += inv_sq[m];
        let candidate = (budget + prefix) / (m + 1) as f64;
        if candidate > inv_sq[m] {
            level = candidate;
            active = m + 1;
        } else {
            break;
        }
    }

    let mut powers = vec![0.0; n];
    for m in 0..active {
        powers[order[m]] = level - inv_sq[m];
    }
    Ok(PowerAllocation { gains: gains.to_vec(), powers, budget })
}
