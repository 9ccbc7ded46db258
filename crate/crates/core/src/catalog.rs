//! Built-in benchmark problems assembled from a small catalog of dynamics
//! and cost forms.
//!
//! | name            | box        | topology | controls         | f     | c      | q          |
//! |-----------------|------------|----------|------------------|-------|--------|------------|
//! | `quadratic-lq`  | [−2, 2]    | clamped  | 21 in [−1, 1]    | a     | a²/2   | 0          |
//! | `eikonal-cos`   | [−π, π)    | periodic | {−1, 1}          | a     | 1      | cos x      |
//! | `transport-sin` | [−π, π)    | periodic | {0}              | 1     | 0      | sin x      |
//! | `zero`          | [−1, 1)    | periodic | {0}              | 0     | 0      | 0          |

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid, Topology, MAX_DIM};
use crate::problem::{ControlProblem, ControlSet};

pub const BENCHMARK_NAMES: [&str; 4] = ["quadratic-lq", "eikonal-cos", "transport-sin", "zero"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DynamicsForm {
    /// `f(t,x,a) = a` (control dimension equals state dimension).
    Control,
    /// `f ≡ 0`.
    Zero,
    /// `f ≡ (1, …, 1)`.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RunningCostForm {
    Zero,
    One,
    /// `|a|² / 2`.
    HalfSquare,
}

/// Terminal costs; trigonometric forms are summed over the axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum TerminalCostForm {
    Zero,
    Cos,
    Sin,
    /// `|x|² / 2`.
    HalfSquare,
}

impl TerminalCostForm {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            TerminalCostForm::Zero => 0.0,
            TerminalCostForm::Cos => x.iter().map(|&v| libm::cos(v)).sum(),
            TerminalCostForm::Sin => x.iter().map(|&v| libm::sin(v)).sum(),
            TerminalCostForm::HalfSquare => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
        }
    }
}

/// Declarative problem description: a box, a sampled control cube and one
/// form each for dynamics and costs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ProblemSpec {
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    pub topology: Topology,
    pub control_dim: usize,
    pub control_lower: f64,
    pub control_upper: f64,
    pub control_samples: usize,
    pub dynamics: DynamicsForm,
    pub running_cost: RunningCostForm,
    pub terminal_cost: TerminalCostForm,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if self.control_dim == 0 || self.control_dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(self.control_dim));
        }
        if !(self.upper > self.lower) || !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::Config(alloc::format!(
                "empty box [{}, {}]",
                self.lower,
                self.upper
            )));
        }
        if self.dynamics == DynamicsForm::Control && self.control_dim != self.dim {
            return Err(Error::Config(
                "dynamics `control` needs control_dim equal to dim".into(),
            ));
        }
        Ok(())
    }

    fn control_radius(&self) -> f64 {
        let m = self.control_lower.abs().max(self.control_upper.abs());
        libm::sqrt(self.control_dim as f64) * m
    }

    /// Declared `sup |f|`.
    pub fn f_sup_bound(&self) -> f64 {
        match self.dynamics {
            DynamicsForm::Control => self.control_radius(),
            DynamicsForm::Zero => 0.0,
            DynamicsForm::Unit => libm::sqrt(self.dim as f64),
        }
    }

    /// Declared `sup |c|`.
    pub fn c_sup_bound(&self) -> f64 {
        match self.running_cost {
            RunningCostForm::Zero => 0.0,
            RunningCostForm::One => 1.0,
            RunningCostForm::HalfSquare => 0.5 * self.control_radius() * self.control_radius(),
        }
    }

    pub fn build_problem(&self) -> Result<ControlProblem> {
        self.validate()?;
        let controls = ControlSet::uniform(
            self.control_dim,
            self.control_lower,
            self.control_upper,
            self.control_samples,
        )?;
        let builder = ControlProblem::builder(self.dim, controls)
            .bounds(self.f_sup_bound(), self.c_sup_bound());
        let builder = match self.dynamics {
            DynamicsForm::Control => builder.dynamics(|_, _, a, out| out.copy_from_slice(a)),
            DynamicsForm::Zero => builder.dynamics(|_, _, _, out| out.fill(0.0)),
            DynamicsForm::Unit => builder.dynamics(|_, _, _, out| out.fill(1.0)),
        };
        let builder = match self.running_cost {
            RunningCostForm::Zero => builder.running_cost(|_, _, _| 0.0),
            RunningCostForm::One => builder.running_cost(|_, _, _| 1.0),
            RunningCostForm::HalfSquare => {
                builder.running_cost(|_, _, a| 0.5 * a.iter().map(|v| v * v).sum::<f64>())
            }
        };
        let form = self.terminal_cost;
        builder.terminal_cost(move |x| form.eval(x)).build()
    }

    /// Grid with spacing no smaller than `h`, fitted exactly to the box:
    /// `n = floor(L/h)` cells on every axis.
    pub fn grid(&self, h: f64) -> Result<Arc<Grid>> {
        self.validate()?;
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Config(alloc::format!(
                "spacing must lie in (0, 1), got {h}"
            )));
        }
        let length = self.upper - self.lower;
        let cells = libm::floor(length / h + 1e-9) as usize;
        let spacing = length / cells as f64;
        let points = match self.topology {
            Topology::Periodic => cells,
            Topology::Clamped => cells + 1,
        };
        let grid = match self.topology {
            Topology::Periodic => Grid::periodic(self.dim, self.lower, spacing, points)?,
            Topology::Clamped => Grid::clamped(self.dim, self.lower, spacing, points)?,
        };
        Ok(Arc::new(grid))
    }

    /// Width of the boundary collar excluded from measurements on clamped
    /// axes: `sup|f| · T`.
    pub fn collar(&self, horizon: f64) -> f64 {
        match self.topology {
            Topology::Periodic => 0.0,
            Topology::Clamped => self.f_sup_bound() * horizon,
        }
    }
}

/// A problem description together with its assembled control problem.
#[derive(Debug)]
pub struct Benchmark {
    pub name: Option<&'static str>,
    pub spec: ProblemSpec,
    pub problem: ControlProblem,
}

impl Benchmark {
    pub fn from_spec(spec: ProblemSpec) -> Result<Self> {
        let problem = spec.build_problem()?;
        Ok(Benchmark {
            name: None,
            spec,
            problem,
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let named = BENCHMARK_NAMES
            .iter()
            .copied()
            .find(|&n| n == name)
            .ok_or_else(|| {
                Error::Config(alloc::format!(
                    "unknown benchmark `{name}`, expected one of {BENCHMARK_NAMES:?}"
                ))
            })?;
        let mut bench = Benchmark::from_spec(spec_for(named))?;
        bench.name = Some(named);
        Ok(bench)
    }

    pub fn quadratic_lq() -> Self {
        Benchmark::by_name("quadratic-lq").expect("catalog entry")
    }

    pub fn eikonal_cos() -> Self {
        Benchmark::by_name("eikonal-cos").expect("catalog entry")
    }

    pub fn transport_sin() -> Self {
        Benchmark::by_name("transport-sin").expect("catalog entry")
    }

    pub fn zero() -> Self {
        Benchmark::by_name("zero").expect("catalog entry")
    }

    pub fn grid(&self, h: f64) -> Result<Arc<Grid>> {
        self.spec.grid(h)
    }

    /// Grid indices measured at horizon `T` (outside the clamped collar).
    pub fn measured_region(&self, grid: &Grid, horizon: f64) -> Vec<usize> {
        grid.interior_indices(self.spec.collar(horizon))
    }
}

/// Catalog entry for a benchmark name. Panics on unknown names; use
/// [`Benchmark::by_name`] for checked lookup.
pub fn spec_for(name: &str) -> ProblemSpec {
    match name {
        "quadratic-lq" => ProblemSpec {
            dim: 1,
            lower: -2.0,
            upper: 2.0,
            topology: Topology::Clamped,
            control_dim: 1,
            control_lower: -1.0,
            control_upper: 1.0,
            control_samples: 21,
            dynamics: DynamicsForm::Control,
            running_cost: RunningCostForm::HalfSquare,
            terminal_cost: TerminalCostForm::Zero,
        },
        "eikonal-cos" => ProblemSpec {
            dim: 1,
            lower: -PI,
            upper: PI,
            topology: Topology::Periodic,
            control_dim: 1,
            control_lower: -1.0,
            control_upper: 1.0,
            control_samples: 2,
            dynamics: DynamicsForm::Control,
            running_cost: RunningCostForm::One,
            terminal_cost: TerminalCostForm::Cos,
        },
        "transport-sin" => ProblemSpec {
            dim: 1,
            lower: -PI,
            upper: PI,
            topology: Topology::Periodic,
            control_dim: 1,
            control_lower: 0.0,
            control_upper: 0.0,
            control_samples: 1,
            dynamics: DynamicsForm::Unit,
            running_cost: RunningCostForm::Zero,
            terminal_cost: TerminalCostForm::Sin,
        },
        "zero" => ProblemSpec {
            dim: 1,
            lower: -1.0,
            upper: 1.0,
            topology: Topology::Periodic,
            control_dim: 1,
            control_lower: 0.0,
            control_upper: 0.0,
            control_samples: 1,
            dynamics: DynamicsForm::Zero,
            running_cost: RunningCostForm::Zero,
            terminal_cost: TerminalCostForm::Zero,
        },
        other => panic!("no catalog entry named {other}"),
    }
}
