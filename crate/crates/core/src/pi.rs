//! Policy iteration on the space-time scheme.
//!
//! Iterate `n` evaluates the frozen policy `α_n` with the linear scheme,
//! then improves it pointwise, `α_{n+1}(t,x) = argmin_a [c + ∇^h V_n · f]`,
//! at every level `t = τ, …, T`. Iterates decrease pointwise and reach the
//! direct solution of the nonlinear scheme.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::{fit_geometric_rate, GeometricRate};
use crate::grid::Vector;
use crate::problem::PolicyField;
use crate::scheme::{Scheme, SpaceTimeSolution};

/// Allowed increase `V_{n+1} − V_n` before a point counts as a violation.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-10;
/// Increase beyond which the run aborts.
pub const MONOTONICITY_HARD_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPolicy {
    /// The first control of the sampled set everywhere.
    FirstControl,
    /// `argmin_a c(t,x,a)`, ignoring the gradient term.
    ArgminCost,
    /// The sample nearest to `−gain · x`; needs control and state dimensions
    /// to agree.
    LinearFeedback { gain: f64 },
    /// One policy per level `τ, …, T`.
    Explicit(Vec<PolicyField>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PIConfig {
    pub initial_policy: InitialPolicy,
    pub max_iterations: usize,
    /// Stop once the sup-norm change between successive iterates drops
    /// below this.
    pub stop_tolerance: f64,
    /// Keep every `record_every`-th iterate (and the last one).
    pub record_every: usize,
}

impl Default for PIConfig {
    fn default() -> Self {
        PIConfig {
            initial_policy: InitialPolicy::ArgminCost,
            max_iterations: 100,
            stop_tolerance: 1e-12,
            record_every: 1,
        }
    }
}

impl PIConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.stop_tolerance > 0.0) {
            return Err(Error::Config("stop_tolerance must be positive".into()));
        }
        if self.record_every < 1 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max-iterations",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityStats {
    /// Points with `V_{n+1} − V_n > MONOTONICITY_TOLERANCE`, over all iterations.
    pub violations: usize,
    /// Largest `V_{n+1} − V_n` seen (negative when iterates strictly decrease).
    pub worst: f64,
}

/// Diagnostics for one policy-iteration run. Per-iteration vectors are
/// indexed by `n`, starting with the initial policy's value `V_0`.
#[derive(Debug, Clone)]
pub struct PIRun {
    /// `(n, V_n)`, thinned by `record_every`.
    pub iterates: Vec<(usize, SpaceTimeSolution)>,
    /// `sup` over the measured region and all levels of `|V_n − V^{τ,h}|`.
    pub errors_to_fixed_point: Vec<f64>,
    /// Unweighted ℓ² distance at `t = 0` over the measured region.
    pub errors_l2: Vec<f64>,
    /// Max over levels of the ℓ² distance between the greedy controls of
    /// `V_n` and the fixed-point controls.
    pub policy_l2_distance: Vec<f64>,
    /// `sup |V_n − V_{n−1}|`; entry 0 is `+∞`.
    pub successive_change: Vec<f64>,
    /// `max (V_n − V_{n−1})`; entry 0 is `−∞`.
    pub monotonicity_worst: Vec<f64>,
    pub monotonicity: MonotonicityStats,
    pub fixed_point: SpaceTimeSolution,
    pub stop_reason: StopReason,
    /// Number of improvement steps performed.
    pub iterations_used: usize,
}

impl PIRun {
    pub fn final_iterate(&self) -> &SpaceTimeSolution {
        &self.iterates.last().expect("at least V_0 is recorded").1
    }

    /// Geometric ratio of `errors_to_fixed_point` after `burn_in` iterations.
    pub fn geometric_rate(&self, burn_in: usize) -> Result<GeometricRate> {
        fit_geometric_rate(&self.errors_to_fixed_point, burn_in)
    }
}

/// `‖α_n − α_*‖` for iterate `n` (see [`PIRun::policy_l2_distance`]).
pub fn policy_distance(run: &PIRun, n: usize) -> Result<f64> {
    run.policy_l2_distance.get(n).copied().ok_or(Error::Range {
        requested: n,
        available: run.policy_l2_distance.len(),
    })
}

fn initial_policy(scheme: &Scheme<'_>, rule: &InitialPolicy) -> Result<Vec<PolicyField>> {
    let params = scheme.params();
    let problem = scheme.problem();
    let grid = scheme.grid();
    let levels = 1..=params.steps;
    match rule {
        InitialPolicy::FirstControl => levels
            .map(|k| problem.constant_policy(grid, params.time(k), 0))
            .collect(),
        InitialPolicy::ArgminCost => levels
            .map(|k| problem.argmin_cost_policy(grid, params.time(k)))
            .collect(),
        InitialPolicy::LinearFeedback { gain } => {
            if problem.controls().dim() != grid.dim() {
                return Err(Error::Config(
                    "linear-feedback initial policy needs control dimension = state dimension"
                        .into(),
                ));
            }
            let choices: Vec<usize> = (0..grid.len())
                .map(|i| {
                    let mut target = grid.coords(i);
                    target.iter_mut().for_each(|v| *v *= -gain);
                    problem.controls().nearest(&target)
                })
                .collect();
            levels
                .map(|k| {
                    PolicyField::new(
                        grid.clone(),
                        params.time(k),
                        choices.clone(),
                        problem.controls().len(),
                    )
                })
                .collect()
        }
        InitialPolicy::Explicit(policies) => {
            if policies.len() != params.steps {
                return Err(Error::Config(alloc::format!(
                    "initial policy covers {} levels, need {}",
                    policies.len(),
                    params.steps
                )));
            }
            Ok(policies.clone())
        }
    }
}

fn improve_all(scheme: &Scheme<'_>, value: &SpaceTimeSolution) -> Result<Vec<PolicyField>> {
    (1..=scheme.params().steps)
        .map(|k| {
            scheme
                .problem()
                .improve_policy(&value.slices[k], scheme.params().time(k))
        })
        .collect()
}

fn policy_gap(scheme: &Scheme<'_>, a: &[PolicyField], b: &[PolicyField], region: &[usize]) -> f64 {
    let controls = scheme.problem().controls();
    a.iter()
        .zip(b)
        .map(|(pa, pb)| {
            let sum: f64 = region
                .iter()
                .map(|&i| {
                    let u: &Vector = controls.get(pa.choices()[i]);
                    let v: &Vector = controls.get(pb.choices()[i]);
                    u.iter()
                        .zip(v.iter())
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                })
                .sum();
            libm::sqrt(sum)
        })
        .fold(0.0, f64::max)
}

fn l2_at_start(a: &SpaceTimeSolution, b: &SpaceTimeSolution, region: &[usize]) -> f64 {
    let (u, v) = (a.initial().values(), b.initial().values());
    libm::sqrt(region.iter().map(|&i| (u[i] - v[i]) * (u[i] - v[i])).sum())
}

/// Runs policy iteration, measuring errors on `region` (grid indices)
/// against the direct solve of the nonlinear scheme.
pub fn run_policy_iteration(
    scheme: &Scheme<'_>,
    region: &[usize],
    config: &PIConfig,
) -> Result<PIRun> {
    config.validate()?;
    if let Some(&bad) = region.iter().find(|&&i| i >= scheme.grid().len()) {
        return Err(Error::Index {
            index: bad,
            len: scheme.grid().len(),
        });
    }
    let fixed_point = scheme.solve_hjb_direct()?;
    let optimal = fixed_point
        .policy_slices
        .as_ref()
        .expect("direct solve records its policy");

    let mut policy = initial_policy(scheme, &config.initial_policy)?;
    let mut value = scheme.evaluate_policy(&policy)?;
    let mut next_policy = improve_all(scheme, &value)?;

    let mut run = PIRun {
        iterates: Vec::new(),
        errors_to_fixed_point: alloc::vec![value.sup_distance(&fixed_point, region)],
        errors_l2: alloc::vec![l2_at_start(&value, &fixed_point, region)],
        policy_l2_distance: alloc::vec![policy_gap(scheme, &next_policy, optimal, region)],
        successive_change: alloc::vec![f64::INFINITY],
        monotonicity_worst: alloc::vec![f64::NEG_INFINITY],
        monotonicity: MonotonicityStats {
            violations: 0,
            worst: f64::NEG_INFINITY,
        },
        fixed_point: fixed_point.clone(),
        stop_reason: StopReason::MaxIterations,
        iterations_used: 0,
    };
    run.iterates.push((0, value.clone()));

    let all: Vec<usize> = (0..scheme.grid().len()).collect();
    for n in 1..=config.max_iterations {
        policy = next_policy;
        let updated = scheme.evaluate_policy(&policy)?;

        let mut worst = f64::NEG_INFINITY;
        for (new, old) in updated.slices.iter().zip(&value.slices) {
            for (a, b) in new.values().iter().zip(old.values()) {
                let excess = a - b;
                worst = worst.max(excess);
                if excess > MONOTONICITY_TOLERANCE {
                    run.monotonicity.violations += 1;
                }
            }
        }
        run.monotonicity.worst = run.monotonicity.worst.max(worst);
        if worst > MONOTONICITY_HARD_LIMIT {
            return Err(Error::Monotonicity {
                iteration: n,
                worst,
            });
        }

        let change = updated.sup_distance(&value, &all);
        value = updated;
        next_policy = improve_all(scheme, &value)?;

        run.errors_to_fixed_point
            .push(value.sup_distance(&fixed_point, region));
        run.errors_l2
            .push(l2_at_start(&value, &fixed_point, region));
        run.policy_l2_distance
            .push(policy_gap(scheme, &next_policy, optimal, region));
        run.successive_change.push(change);
        run.monotonicity_worst.push(worst);
        run.iterations_used = n;

        let done = change < config.stop_tolerance;
        if done || n % config.record_every == 0 || n == config.max_iterations {
            run.iterates.push((n, value.clone()));
        }
        if done {
            run.stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok(run)
}
