//! Reference schemes the precoders are measured against: the two-stage
//! beamsteering baseline, block diagonalization with exhaustive user-subset
//! search, and the dirty-paper-coding sum-capacity upper bound.

mod bd;
mod capacity;
mod two_stage;

pub use bd::run_bd;
pub use capacity::{dpc_sum_capacity, CapacityResult};
pub use two_stage::{build_path_codebooks, run_2smuhpa, BeamsteeringCodebooks, PowerMode};

use crate::numerics::NumericsError;
use crate::precoding::PrecodingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("at least one channel matrix is required")]
    EmptyChannelList,
    #[error("this baseline requires exactly one RF chain per user (K = N_RF)")]
    UserRfChainMismatch,
    #[error("composite beamsteering channel is singular for this realization")]
    SingularComposite,
    #[error("receive antenna count must divide the RF chain count")]
    StreamsNotDivisible,
    #[error("nullspace too small for the requested user subset")]
    NullspaceExhausted,
    #[error("power budget must be positive")]
    NonPositivePower,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Precoding(#[from] PrecodingError),
}
