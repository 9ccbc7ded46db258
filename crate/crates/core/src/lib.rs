//! Monotone finite-difference schemes with added viscosity for
//! finite-horizon deterministic optimal control, policy iteration on top of
//! them, and diagnostics that measure how the iteration and the
//! discretization converge.
//!
//! The value function solves `∂_t v + H(t, x, ∇v) = 0`, `v(T) = q`, with
//! `H(t,x,p) = min_a [c(t,x,a) + p·f(t,x,a)]`. The crate is `no_std` (it
//! needs `alloc`); enable `parallel` to spread per-point maps over rayon.
//!
//! - [`grid`]: lattices, fields and the difference operators.
//! - [`problem`]: control problems, the numerical Hamiltonian, rollouts.
//! - [`catalog`]: built-in benchmark problems.
//! - [`scheme`]: the explicit space-time scheme and its CFL condition.
//! - [`pi`]: policy iteration with convergence diagnostics.
//! - [`legendre`]: policy iteration for convex Hamiltonians via the
//!   Legendre transform.
//! - [`analysis`]: reference solutions, rate studies and probes.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod fit;
pub mod grid;
pub mod legendre;
mod par;
pub mod pi;
pub mod problem;
pub mod scheme;

pub use catalog::{Benchmark, ProblemSpec};
pub use error::{Error, Result};
pub use grid::{Field, Grid, Side, Topology, Vector};
pub use problem::{ControlProblem, ControlSet, PolicyField};
pub use scheme::{validate_cfl, CflReport, Scheme, SchemeParams, SpaceTimeSolution};
