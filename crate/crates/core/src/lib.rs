//! Joint transmit-power and antenna-count allocation for a massive-MIMO
//! OFDM downlink.
//!
//! A base station with a large antenna array serves a single-antenna user
//! over `n_F` OFDM subcarriers. Power amplifiers and antenna circuits draw
//! from the same finite power supply, so activating more antennas competes
//! with radiating more power. This crate provides:
//!
//! - [`channel`]: seeded Rayleigh/log-normal channel drops and exact /
//!   asymptotic per-subcarrier capacity under maximum ratio transmission.
//! - [`power`]: the three-term system power model and constraint checking.
//! - [`solver`]: the relaxed joint allocation problem solved by two-layer
//!   dual decomposition with closed-form water-filling subproblem
//!   solutions, plus the floor-rounded integer solution.
//! - [`oracle`]: independent validation via exhaustive grid search,
//!   Hessian concavity checks, and Lagrangian stationarity residuals.
//! - [`montecarlo`]: seeded campaigns over fading and shadowing that
//!   aggregate spectral-efficiency, antenna-count, and power-ratio
//!   statistics across budget sweeps.

pub mod channel;
pub mod montecarlo;
pub mod oracle;
pub mod params;
pub mod power;
pub mod solver;

pub use channel::ChannelRealization;
pub use params::SystemParams;
pub use power::{Allocation, AllocationMode, FeasibilityReport, PowerBreakdown};
pub use solver::{DualState, SolveReport, SolverConfig};

/// Errors returned by solver, oracle, and campaign entry points.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or configuration value violates an invariant.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    /// An operation was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// No feasible allocation exists for the given budgets.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
