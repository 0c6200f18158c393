//! Error types shared across the simulation library.

use thiserror::Error;

/// Errors produced by geometry construction, stiffness evaluation, the
/// transient solver, and the signal-processing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A specification or configuration value violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Tooth count is below the involute-validity minimum for the pressure
    /// angle (undercut during rack generation would destroy the flank).
    #[error(
        "undercut: {tooth_count} teeth is below the practical minimum of {minimum} \
         for a {pressure_angle_deg}° pressure angle"
    )]
    Undercut {
        tooth_count: u32,
        minimum: u32,
        pressure_angle_deg: f64,
    },

    /// Gear pair geometry cannot sustain continuous contact (ε ≤ 1).
    #[error("contact ratio {ratio:.4} ≤ 1: transmission would lose contact")]
    ContactLost { ratio: f64 },

    /// A tooth section has zero area / second moment below the load point.
    #[error("singular tooth section at grid index {index}: {what} is zero")]
    SingularSection { index: usize, what: &'static str },

    /// A fault description refers to geometry that does not exist.
    #[error("invalid fault: {0}")]
    InvalidFault(String),

    /// Mesh contact vanished for an entire mesh cycle; the model does not
    /// support a free-wheeling transmission.
    #[error("no tooth contact anywhere in mesh cycle {cycle}: unsupported regime")]
    NoContactInCycle { cycle: usize },

    /// An effective system matrix could not be factorized.
    #[error("singular effective matrix at cycle index {cycle_index}")]
    SingularMatrix { cycle_index: usize },

    /// Newton-Raphson refinement failed to reach the residual tolerance.
    #[error(
        "Newton-Raphson did not converge at t = {time:.6e} s after {iterations} iterations; \
         residual history: {history:?}"
    )]
    NonConvergence {
        time: f64,
        iterations: usize,
        history: Vec<f64>,
    },

    /// The integration state became non-finite.
    #[error("divergence: non-finite state at t = {time:.6e} s")]
    Divergence { time: f64 },

    /// Signal-processing precondition failed.
    #[error("signal processing: {0}")]
    Signal(String),

    /// Enhancement / calibration precondition failed.
    #[error("enhancement: {0}")]
    Enhancement(String),
}

pub type Result<T> = std::result::Result<T, Error>;
