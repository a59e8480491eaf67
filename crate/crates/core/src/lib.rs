//! Continuous-variable unclonable encryption of classical messages.
//!
//! The scheme is simulated end to end on Gaussian state descriptors. Its
//! closed-form correctness and unclonability bounds sit next to a thermal-loss
//! fibre model and a Monte-Carlo cloning-game harness.
//!
//! Module map:
//! - [`gaussian`]: phase-space states with homodyne sampling and conditioning
//! - [`codec`]: one-time pad plus the error-correcting layer (oracle and BCH)
//! - [`protocol`]: keys, encryption and round-trip statistics
//! - [`channel`]: loss and excess-noise channel
//! - [`bounds`]: closed-form bounds and plot tables
//! - [`adversary`]: cloning-game harness
//! - [`eb`]: entanglement-based preparation and its equivalence checks
//! - [`cli`]: run configuration and the command-line front end

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod bits;
pub mod bounds;
pub mod channel;
pub mod cli;
pub mod codec;
pub mod eb;
pub mod error;
pub mod gaussian;
pub mod protocol;
pub mod rng;
pub mod stats;

pub use bits::BitString;
pub use error::{Error, Result};
