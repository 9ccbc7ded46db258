use alloc::string::String;
use core::fmt;

use crate::scheme::CflReport;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A grid index was outside `0..len`.
    Index { index: usize, len: usize },
    /// Invalid problem, grid or scheme configuration.
    Config(String),
    /// The monotonicity (CFL) condition failed.
    Cfl(CflReport),
    /// A value became non-finite or exceeded the a-priori blowup threshold.
    Blowup { time: f64, index: usize, value: f64 },
    /// An argument was outside the admissible domain of an operation.
    Domain(String),
    /// A rollout trajectory left the grid along a clamped axis.
    TruncatedRollout {
        time: f64,
        axis: usize,
        position: f64,
    },
    /// Policy-iteration iterates failed to decrease pointwise.
    Monotonicity { iteration: usize, worst: f64 },
    /// A recorded iterate or entry was requested that does not exist.
    Range { requested: usize, available: usize },
    /// The operation only supports lower dimensions.
    UnsupportedDimension(usize),
    /// Too few usable data points for a fit.
    InsufficientData { needed: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Index { index, len } => {
                write!(f, "grid index {index} out of range for {len} points")
            }
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Cfl(report) => write!(f, "{report}"),
            Error::Blowup { time, index, value } => write!(
                f,
                "numerical blowup at t={time}, point {index}: value {value}"
            ),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::TruncatedRollout {
                time,
                axis,
                position,
            } => write!(
                f,
                "truncated rollout: trajectory left the grid on axis {axis} at t={time} (x={position})"
            ),
            Error::Monotonicity { iteration, worst } => write!(
                f,
                "monotonicity violated at iteration {iteration}: V_(n+1) - V_n reached {worst:e}"
            ),
            Error::Range {
                requested,
                available,
            } => write!(f, "entry {requested} not recorded ({available} available)"),
            Error::UnsupportedDimension(d) => write!(f, "dimension {d} is not supported"),
            Error::InsufficientData { needed, got } => {
                write!(f, "need at least {needed} usable data points, got {got}")
            }
        }
    }
}

impl core::error::Error for Error {}
