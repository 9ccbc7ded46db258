//! Finite-horizon deterministic control problems, their numerical
//! Hamiltonian `H(t,x,p) = min_a [c(t,x,a) + p·f(t,x,a)]` over a sampled
//! control set, policy improvement, and trajectory rollouts.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Vector, MAX_DIM};
use crate::par;

/// Absolute tolerance used when breaking ties in the control argmin.
pub const ARGMIN_TIE_TOLERANCE: f64 = 1e-12;

pub type DynamicsFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;
pub type RunningCostFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;
pub type TerminalCostFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Finite, ordered sample of the compact control set.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    dim: usize,
    elements: Vec<Vector>,
}

impl ControlSet {
    pub fn new(elements: Vec<Vector>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::Config("control set is empty".into()))?;
        let dim = first.len();
        if elements.iter().any(|a| a.len() != dim) {
            return Err(Error::Config("controls have mixed dimensions".into()));
        }
        for (i, a) in elements.iter().enumerate() {
            if elements[..i].iter().any(|b| b == a) {
                return Err(Error::Config(alloc::format!(
                    "control {i} duplicates an earlier control"
                )));
            }
        }
        Ok(ControlSet { dim, elements })
    }

    /// Tensor-product uniform sample of `[lower, upper]^dim` with `samples`
    /// points per axis (a single sample sits at `lower`).
    pub fn uniform(dim: usize, lower: f64, upper: f64, samples: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if samples == 0 || !(upper >= lower) {
            return Err(Error::Config(alloc::format!(
                "bad control sampling: {samples} samples of [{lower}, {upper}]"
            )));
        }
        if samples > 1 && upper == lower {
            return Err(Error::Config(
                "several samples of a degenerate control interval".into(),
            ));
        }
        let axis: Vec<f64> = (0..samples)
            .map(|k| {
                if samples == 1 {
                    lower
                } else {
                    lower + (upper - lower) * k as f64 / (samples - 1) as f64
                }
            })
            .collect();
        let total = samples.pow(dim as u32);
        let elements = (0..total)
            .map(|mut k| {
                let mut a = Vector::zeros(dim);
                for d in (0..dim).rev() {
                    a[d] = axis[k % samples];
                    k /= samples;
                }
                a
            })
            .collect();
        ControlSet::new(elements)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, index: usize) -> &Vector {
        &self.elements[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vector> {
        self.elements.iter()
    }

    /// Index of the sample closest to `target` (first one on ties).
    pub fn nearest(&self, target: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, a) in self.elements.iter().enumerate() {
            let d: f64 = a.iter().zip(target).map(|(x, y)| (x - y) * (x - y)).sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Smallest positive spacing between distinct sample coordinates.
    pub fn resolution(&self) -> f64 {
        let mut coords: Vec<f64> = self
            .elements
            .iter()
            .flat_map(|a| a.iter().copied())
            .collect();
        coords.sort_by(f64::total_cmp);
        coords
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| *d > 0.0)
            .fold(0.0, |m: f64, d| if m == 0.0 { d } else { m.min(d) })
    }
}

/// Dynamics `f`, running cost `c`, terminal cost `q` and a sampled control set.
pub struct ControlProblem {
    dim: usize,
    controls: ControlSet,
    dynamics: Box<DynamicsFn>,
    running_cost: Box<RunningCostFn>,
    terminal_cost: Box<TerminalCostFn>,
    f_sup_bound: f64,
    c_sup_bound: f64,
}

impl core::fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ControlProblem")
            .field("dim", &self.dim)
            .field("controls", &self.controls.len())
            .field("f_sup_bound", &self.f_sup_bound)
            .field("c_sup_bound", &self.c_sup_bound)
            .finish_non_exhaustive()
    }
}

pub struct ControlProblemBuilder {
    dim: usize,
    controls: ControlSet,
    dynamics: Option<Box<DynamicsFn>>,
    running_cost: Option<Box<RunningCostFn>>,
    terminal_cost: Option<Box<TerminalCostFn>>,
    f_sup_bound: f64,
    c_sup_bound: f64,
}

impl ControlProblemBuilder {
    pub fn dynamics<F>(mut self, f: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.dynamics = Some(Box::new(f));
        self
    }

    pub fn running_cost<F>(mut self, c: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.running_cost = Some(Box::new(c));
        self
    }

    pub fn terminal_cost<F>(mut self, q: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.terminal_cost = Some(Box::new(q));
        self
    }

    /// Declared bounds `sup |f|` and `sup |c|`.
    pub fn bounds(mut self, f_sup: f64, c_sup: f64) -> Self {
        self.f_sup_bound = f_sup;
        self.c_sup_bound = c_sup;
        self
    }

    pub fn build(self) -> Result<ControlProblem> {
        if !(self.f_sup_bound >= 0.0 && self.c_sup_bound >= 0.0) {
            return Err(Error::Config("declared bounds must be non-negative".into()));
        }
        Ok(ControlProblem {
            dim: self.dim,
            controls: self.controls,
            dynamics: self
                .dynamics
                .unwrap_or_else(|| Box::new(|_, _, _, out: &mut [f64]| out.fill(0.0))),
            running_cost: self.running_cost.unwrap_or_else(|| Box::new(|_, _, _| 0.0)),
            terminal_cost: self.terminal_cost.unwrap_or_else(|| Box::new(|_| 0.0)),
            f_sup_bound: self.f_sup_bound,
            c_sup_bound: self.c_sup_bound,
        })
    }
}

impl ControlProblem {
    /// Starts a problem with zero dynamics and costs; set the pieces with the
    /// builder methods.
    pub fn builder(dim: usize, controls: ControlSet) -> ControlProblemBuilder {
        ControlProblemBuilder {
            dim,
            controls,
            dynamics: None,
            running_cost: None,
            terminal_cost: None,
            f_sup_bound: 0.0,
            c_sup_bound: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn controls(&self) -> &ControlSet {
        &self.controls
    }

    pub fn f_sup_bound(&self) -> f64 {
        self.f_sup_bound
    }

    pub fn c_sup_bound(&self) -> f64 {
        self.c_sup_bound
    }

    #[inline]
    pub fn dynamics(&self, t: f64, x: &[f64], a: &[f64]) -> Vector {
        let mut out = Vector::zeros(self.dim);
        (self.dynamics)(t, x, a, &mut out);
        out
    }

    #[inline]
    pub fn running_cost(&self, t: f64, x: &[f64], a: &[f64]) -> f64 {
        (self.running_cost)(t, x, a)
    }

    #[inline]
    pub fn terminal_cost(&self, x: &[f64]) -> f64 {
        (self.terminal_cost)(x)
    }

    /// `c + p·f` for control `index`.
    #[inline]
    pub fn control_value(&self, t: f64, x: &[f64], p: &[f64], index: usize) -> f64 {
        let a = self.controls.get(index);
        self.running_cost(t, x, a) + self.dynamics(t, x, a).dot(p)
    }

    /// Minimum of `c(t,x,a) + p·f(t,x,a)` over the control sample, with the
    /// first index attaining it within [`ARGMIN_TIE_TOLERANCE`].
    pub fn hamiltonian_min(&self, t: f64, x: &[f64], p: &[f64]) -> Result<(f64, usize)> {
        if self.controls.is_empty() {
            return Err(Error::Config("control set is empty".into()));
        }
        let mut best = f64::INFINITY;
        let mut best_index = 0;
        for index in 0..self.controls.len() {
            let v = self.control_value(t, x, p, index);
            if v < best {
                best = v;
                best_index = index;
            }
        }
        let first = (0..best_index)
            .find(|&i| self.control_value(t, x, p, i) <= best + ARGMIN_TIE_TOLERANCE)
            .unwrap_or(best_index);
        Ok((best, first))
    }

    /// Greedy policy with respect to the centered gradient of `value`.
    pub fn improve_policy(&self, value: &Field, t: f64) -> Result<PolicyField> {
        let grid = value.grid();
        self.check_grid(grid)?;
        let values = value.values();
        let choices = par::map_indices(grid.len(), |i| {
            let x = grid.coords(i);
            let p = grid.central_at(values, i);
            self.hamiltonian_min(t, &x, &p).map(|(_, a)| a).unwrap_or(0)
        });
        Ok(PolicyField {
            grid: grid.clone(),
            time: t,
            choices,
        })
    }

    /// Policy choosing `argmin_a c(t,x,a)` everywhere.
    pub fn argmin_cost_policy(&self, grid: &Arc<Grid>, t: f64) -> Result<PolicyField> {
        self.improve_policy(&Field::constant(grid.clone(), 0.0, t), t)
    }

    pub fn constant_policy(&self, grid: &Arc<Grid>, t: f64, index: usize) -> Result<PolicyField> {
        PolicyField::new(
            grid.clone(),
            t,
            alloc::vec![index; grid.len()],
            self.controls.len(),
        )
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::Config(alloc::format!(
                "problem of dimension {} on a grid of dimension {}",
                self.dim,
                grid.dim()
            )));
        }
        Ok(())
    }

    /// Checks the declared `sup |f|` and `sup |c|` against samples on a 3x
    /// refined copy of `grid`, at times `0, T/2, T`.
    pub fn validate_bounds(&self, grid: &Grid, horizon: f64) -> Result<()> {
        self.check_grid(grid)?;
        let refined_points: Vec<usize> = grid
            .points_per_axis()
            .iter()
            .zip(grid.topology())
            .map(|(&n, topo)| match topo {
                crate::grid::Topology::Periodic => 3 * n,
                crate::grid::Topology::Clamped => 3 * (n - 1) + 1,
            })
            .collect();
        let probe = Grid::new(
            grid.origin(),
            grid.spacing() / 3.0,
            &refined_points,
            grid.topology(),
        )?;
        let slack = 1e-12 * (1.0 + self.f_sup_bound.max(self.c_sup_bound));
        for t in [0.0, 0.5 * horizon, horizon] {
            for i in 0..probe.len() {
                let x = probe.coords(i);
                for a in self.controls.iter() {
                    let f = self.dynamics(t, &x, a).norm();
                    if !(f <= self.f_sup_bound + slack) {
                        return Err(Error::Config(alloc::format!(
                            "|f| = {f} exceeds declared bound {} at t={t}",
                            self.f_sup_bound
                        )));
                    }
                    let c = self.running_cost(t, &x, a).abs();
                    if !(c <= self.c_sup_bound + slack) {
                        return Err(Error::Config(alloc::format!(
                            "|c| = {c} exceeds declared bound {} at t={t}",
                            self.c_sup_bound
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Accumulated running cost plus terminal cost along a forward-Euler
    /// trajectory from `(t0, x0)`, steering with the time-indexed policy.
    ///
    /// `policies[k]` is the feedback used on `[kτ, (k+1)τ)`, i.e. the policy
    /// recorded at level `(k+1)τ`; τ and the horizon are read from the
    /// policy time labels.
    pub fn rollout_cost(
        &self,
        policies: &[PolicyField],
        t0: f64,
        x0: &[f64],
        dt: f64,
    ) -> Result<f64> {
        let first = policies
            .first()
            .ok_or_else(|| Error::Domain("rollout needs at least one policy level".into()))?;
        let tau = first.time;
        let horizon = policies[policies.len() - 1].time;
        if !(dt > 0.0 && dt <= tau * (1.0 + 1e-12)) {
            return Err(Error::Domain(alloc::format!(
                "rollout step {dt} must lie in (0, tau={tau}]"
            )));
        }
        if !(0.0..=horizon).contains(&t0) || x0.len() != self.dim {
            return Err(Error::Domain(
                "rollout start outside the time-space domain".into(),
            ));
        }
        let grid = first.grid.clone();
        let mut x = Vector::from_slice(x0);
        let mut t = t0;
        let mut cost = 0.0;
        let eps = 1e-9 * tau;
        while t < horizon - eps {
            let step = dt.min(horizon - t);
            let level = (((t + eps) / tau) as usize).min(policies.len() - 1);
            let index = grid
                .nearest_index(&x)
                .map_err(|axis| Error::TruncatedRollout {
                    time: t,
                    axis,
                    position: x[axis],
                })?;
            let a = self.controls.get(policies[level].choices[index]);
            let f = self.dynamics(t, &x, a);
            cost += step * self.running_cost(t, &x, a);
            for (xi, fi) in x.iter_mut().zip(f.iter()) {
                *xi += step * fi;
            }
            t += step;
        }
        if let Err(axis) = grid.nearest_index(&x) {
            return Err(Error::TruncatedRollout {
                time: horizon,
                axis,
                position: x[axis],
            });
        }
        Ok(cost + self.terminal_cost(&x))
    }
}

/// Control index per grid point at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyField {
    grid: Arc<Grid>,
    time: f64,
    choices: Vec<usize>,
}

impl PolicyField {
    pub fn new(grid: Arc<Grid>, time: f64, choices: Vec<usize>, n_controls: usize) -> Result<Self> {
        if choices.len() != grid.len() {
            return Err(Error::Config(alloc::format!(
                "policy has {} entries for {} grid points",
                choices.len(),
                grid.len()
            )));
        }
        if let Some(&bad) = choices.iter().find(|&&c| c >= n_controls) {
            return Err(Error::Index {
                index: bad,
                len: n_controls,
            });
        }
        Ok(PolicyField {
            grid,
            time,
            choices,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }
}
