//! Spur gear pair vibration simulation.
//!
//! The library builds a 13-DOF lumped-parameter model of a spur gear
//! transmission — involute tooth geometry, DIN-graded manufacturing flank
//! errors, local tooth faults, and a beam-theory time-variant mesh stiffness —
//! integrates its equations of motion with a cycle-cached Newmark/Newton
//! scheme, and processes the resulting vibration signals into the condition
//! indicators used to tune the simulation against measured data.
//!
//! Module map:
//! * [`geometry`] — wheel specs, tooth profiles, contact-line properties
//! * [`profile_errors`] — DIN 3962 flank deviation fields
//! * [`faults`] — tooth breakage, pitting, involute destruction
//! * [`stiffness`] — strain-energy tooth compliance and the mesh stiffness
//!   curve, with naive (oracle) and cumulative-integral (fast) paths
//! * [`assembly`] — 13-DOF mass/damping/stiffness/force assembly, with the
//!   z-grid (naive) and expectation-matrix (fast) cycle assembly
//! * [`solver`] — Newmark + Newton-Raphson with per-cycle cached Jacobian
//!   inverses
//! * [`sigproc`] — angular resampling, synchronous average, difference
//!   signal, envelope, condition indicators
//! * [`enhancement`] — width/fault-ratio/noise modification and the grid
//!   search against measured condition indicators
//! * [`pipeline`] — configuration-to-signal orchestration

pub mod assembly;
pub mod enhancement;
pub mod error;
pub mod faults;
pub mod geometry;
pub mod pipeline;
pub mod profile_errors;
pub mod sigproc;
pub mod solver;
pub mod stiffness;

pub use error::{Error, Result};
