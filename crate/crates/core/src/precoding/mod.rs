//! The two-stage successive allocation precoder family.
//!
//! Stage one greedily assigns data streams to users through nullspace
//! projectors, building an orthonormal auxiliary precoder basis whose product
//! with the composite channel is lower triangular. Stage two zero-forces the
//! remaining interference and loads powers by waterfilling. The hybrid
//! variants squeeze the first factor onto the constant-modulus set reachable
//! by phase shifters and re-zero-force the distortion; the path-domain
//! variants replace the per-step singular value decompositions by weights
//! read directly off the channel geometry.

mod hybrid;
mod lisa;
mod solution;
mod state;
mod waterfill;

pub use hybrid::{hybridize, phase_project, phase_project_vec, HybridStage};
pub use lisa::{
    apply_ms_analog_constraints, digital_second_stage, lc_select_stream, lisa_select_stream,
    run_h_lisa, run_h_lisa_ms_analog, run_lc_h_lisa, run_lc_h_lisa_ms_analog, run_lc_lisa,
    run_lisa, StreamSelection,
};
pub use solution::{HybridFactors, PrecodingSolution, SolutionMeta};
pub use state::AllocationState;
pub use waterfill::{waterfill, PowerAllocation};

use crate::numerics::NumericsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrecodingError {
    #[error("waterfilling needs at least one gain")]
    EmptyGains,
    #[error("waterfilling needs positive gains and a positive budget")]
    InvalidWaterfillInput,
    #[error("at least one channel matrix is required")]
    EmptyChannelList,
    #[error("stream budget must satisfy 1 <= n_rf <= n_bs and power > 0")]
    InvalidBudget,
    #[error("hybrid zero-forcing factor ill conditioned (estimate {estimate:.3e})")]
    HybridIllConditioned { estimate: f64 },
    #[error("hybrid factorization failed after dropping {retries} streams")]
    HybridFailed { retries: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
