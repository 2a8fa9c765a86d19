//! Multiuser hybrid precoding for mmWave MIMO downlinks.
//!
//! The crate provides the greedy successive-allocation precoders (LISA and
//! its hybrid and path-domain variants), the reference schemes they are
//! measured against (two-stage beamsteering, block diagonalization, the
//! dirty-paper-coding sum-capacity bound), a geometric channel model, and a
//! deterministic Monte-Carlo engine that evaluates everything through one
//! shared sum-rate formula.

pub mod baselines;
pub mod channel;
pub mod evaluation;
pub mod mat;
pub mod numerics;
pub mod precoding;

pub use mat::{C64, CMat};
