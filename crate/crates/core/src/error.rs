//! Error type shared by the solvers and scenario builders.

use thiserror::Error;

/// Failure modes of scenario construction and the two solver pipelines.
#[derive(Debug, Error)]
pub enum SimError {
    /// An integration interval was given with its endpoints reversed.
    #[error("invalid interval: from={from} > to={to}")]
    InvalidInterval { from: usize, to: usize },

    /// A rate table contains a negative entry or has the wrong shape.
    #[error("invalid rate field: {0}")]
    InvalidRateField(String),

    /// Array shapes do not match the grid they are supposed to live on.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A scenario parameter violates its domain.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The explicit time stepper produced a non-finite or runaway value.
    #[error("integration diverged; reduce dtau ({0})")]
    IntegrationDiverged(String),

    /// Phase 2 was started without a complete phase-1 history.
    #[error("phase order violation: {0}")]
    PhaseOrderViolation(String),

    /// A coherence or correlation matrix lost Hermiticity beyond tolerance.
    #[error("state corrupted: {0}")]
    StateCorrupted(String),

    /// A stochastic trajectory produced NaN.
    #[error("trajectory diverged: {0}")]
    TrajectoryDiverged(String),

    /// A sampler was handed a state it cannot draw from.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Too many ensemble members had to be excluded.
    #[error("ensemble degraded: {excluded} of {total} trajectories diverged")]
    EnsembleDegraded { excluded: usize, total: usize },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SimError>;
