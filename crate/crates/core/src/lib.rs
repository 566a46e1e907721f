//! Bias-aware confidence pruning for frontier search under biased rollouts.

pub mod bandit;
pub mod confidence;
pub mod engine;
pub mod error;
pub mod harness;
pub mod lambert;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
