//! Reproducible Monte Carlo paths of the builtin Lévy processes and
//! statistical cross-checks of exact martingale identities.
//!
//! Paths are generated in fixed-size chunks; chunk `i` draws from a ChaCha
//! stream keyed by `(seed, i)`, so a batch depends only on
//! `(process, grid, n_paths, seed)` and never on the worker count.

mod paths;
mod stats;

use mpr_core::MprError;
use thiserror::Error;

pub use paths::{sample_paths, PathBatch, CHUNK};
pub use stats::{mc_martingale_test, mc_moment_check, MCTestResult, DEFAULT_ZMAX};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time {0} is not on the simulated grid")]
    GridMismatch(String),
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("moments of order {needed} required, model provides {available}")]
    InsufficientMoments { needed: usize, available: usize },
    #[error(transparent)]
    Core(#[from] MprError),
}

pub type Result<T> = std::result::Result<T, SimError>;
