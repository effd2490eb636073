//! Secure layered video multicast with simultaneous wireless power transfer.
//!
//! The crate builds the semidefinite relaxation of the minimum-power
//! beamforming problem, recovers rank-one beamformers from it, and verifies
//! the result against fresh channel draws.

pub mod chance;
pub mod channel;
pub mod error;
pub mod eval;
pub mod harness;
pub mod hermitian;
pub mod power;
pub mod sdp;

pub use error::{Error, Result};
