//! Reference solutions and convergence diagnostics: Hopf–Lax oracles,
//! discretization-order studies in `h` and `τ`, a weak semi-concavity
//! probe and a pointwise policy-convergence probe.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::catalog::{Benchmark, TerminalCostForm};
use crate::error::{Error, Result};
use crate::fit::{fit_power_law, PowerLaw};
use crate::grid::{Field, Grid, Topology, Vector};
use crate::scheme::{Scheme, SchemeParams, SpaceTimeSolution};

/// Initial samples per axis of the Hopf–Lax brute-force minimum.
pub const HOPF_LAX_SAMPLES: usize = 1000;
/// The sample count doubles until the minimum moves by less than this.
pub const HOPF_LAX_TOLERANCE: f64 = 1e-6;
/// Errors at or below this are treated as exact in rate studies.
pub const DEGENERATE_ERROR: f64 = 1e-14;

const MAX_DOUBLINGS_1D: usize = 12;
const MAX_DOUBLINGS_2D: usize = 2;

/// Minimum of `q` over the ball `|y − x| ≤ radius` and a minimizer.
///
/// Brute force on a uniform sample that includes the boundary, refined by
/// doubling until the minimum is stable.
pub fn hopf_lax_min<Q: Fn(&[f64]) -> f64>(q: &Q, x: &[f64], radius: f64) -> Result<(f64, Vector)> {
    let dim = x.len();
    if dim == 0 || dim > 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Domain(alloc::format!(
            "ball radius must be non-negative, got {radius}"
        )));
    }
    if radius == 0.0 {
        return Ok((q(x), Vector::from_slice(x)));
    }
    let sample = |n: usize| -> (f64, Vector) {
        let mut best = (f64::INFINITY, Vector::from_slice(x));
        let mut consider = |y: Vector| {
            let v = q(&y);
            if v < best.0 {
                best = (v, y);
            }
        };
        let step = 2.0 * radius / n as f64;
        if dim == 1 {
            for k in 0..=n {
                consider(Vector::from_slice(&[x[0] - radius + k as f64 * step]));
            }
        } else {
            for i in 0..=n {
                for j in 0..=n {
                    let dy = [-radius + i as f64 * step, -radius + j as f64 * step];
                    if dy[0] * dy[0] + dy[1] * dy[1] <= radius * radius {
                        consider(Vector::from_slice(&[x[0] + dy[0], x[1] + dy[1]]));
                    }
                }
            }
            let ring = 4 * n;
            for k in 0..ring {
                let a = 2.0 * PI * k as f64 / ring as f64;
                consider(Vector::from_slice(&[
                    x[0] + radius * libm::cos(a),
                    x[1] + radius * libm::sin(a),
                ]));
            }
        }
        best
    };
    let doublings = if dim == 1 {
        MAX_DOUBLINGS_1D
    } else {
        MAX_DOUBLINGS_2D
    };
    let mut n = HOPF_LAX_SAMPLES;
    let mut best = sample(n);
    for _ in 0..doublings {
        n *= 2;
        let next = sample(n);
        let change = (next.0 - best.0).abs();
        best = next;
        if change < HOPF_LAX_TOLERANCE {
            break;
        }
    }
    Ok(best)
}

/// `v(t,x) = min_{|y−x| ≤ speed (T−t)} q(y) + c0 (T−t)`, the solution for
/// `H(p) = c0 − speed |p|`. One and two dimensions only.
pub fn hopf_lax_oracle<Q: Fn(&[f64]) -> f64>(
    q: &Q,
    c0: f64,
    t: f64,
    horizon: f64,
    x: &[f64],
    speed: f64,
) -> Result<f64> {
    if t > horizon {
        return Err(Error::Domain(alloc::format!(
            "t = {t} is past the horizon {horizon}"
        )));
    }
    let remaining = horizon - t;
    let (m, _) = hopf_lax_min(q, x, speed * remaining)?;
    Ok(m + c0 * remaining)
}

type ValueFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;
type ControlFn = dyn Fn(f64, &[f64]) -> Option<Vector> + Send + Sync;
type KinkFn = dyn Fn(f64, &[f64]) -> bool + Send + Sync;

/// Exact value function of a benchmark, its optimal feedback, and the set
/// where that feedback is not unique.
pub struct ReferenceSolution {
    pub horizon: f64,
    value: Box<ValueFn>,
    control: Box<ControlFn>,
    kinks: Box<KinkFn>,
}

impl core::fmt::Debug for ReferenceSolution {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ReferenceSolution")
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl ReferenceSolution {
    pub fn new<V, C, K>(horizon: f64, value: V, control: C, kinks: K) -> Self
    where
        V: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        C: Fn(f64, &[f64]) -> Option<Vector> + Send + Sync + 'static,
        K: Fn(f64, &[f64]) -> bool + Send + Sync + 'static,
    {
        ReferenceSolution {
            horizon,
            value: Box::new(value),
            control: Box::new(control),
            kinks: Box::new(kinks),
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        (self.value)(t, x)
    }

    /// Optimal control at `(t, x)`, or `None` inside the kink set.
    pub fn optimal_control(&self, t: f64, x: &[f64]) -> Option<Vector> {
        if self.in_kink_set(t, x) {
            None
        } else {
            (self.control)(t, x)
        }
    }

    pub fn in_kink_set(&self, t: f64, x: &[f64]) -> bool {
        (self.kinks)(t, x)
    }

    /// Sup and grid-weighted L² error of `solution` on `region`; the sup runs
    /// over all time levels, the L² norm is taken at the initial level.
    pub fn errors(&self, solution: &SpaceTimeSolution, region: &[usize]) -> (f64, f64) {
        let grid = solution.grid();
        let coords: Vec<Vector> = region.iter().map(|&i| grid.coords(i)).collect();
        let mut sup = 0.0f64;
        for slice in &solution.slices {
            let t = slice.time();
            for (&i, x) in region.iter().zip(&coords) {
                sup = sup.max((slice.values()[i] - self.value(t, x)).abs());
            }
        }
        let start = solution.initial();
        let weight = libm::pow(grid.spacing(), grid.dim() as f64);
        let l2 = region
            .iter()
            .zip(&coords)
            .map(|(&i, x)| {
                let e = start.values()[i] - self.value(start.time(), x);
                e * e
            })
            .sum::<f64>();
        (sup, libm::sqrt(weight * l2))
    }
}

fn wrapped_distance(x: f64, center: f64) -> f64 {
    let period = 2.0 * PI;
    let r = libm::fmod(x - center, period);
    let r = if r < 0.0 { r + period } else { r };
    r.min(period - r)
}

/// Closed-form or oracle-backed reference for the catalog benchmarks with
/// horizon `T`; `None` for problems without a known solution.
pub fn reference_for(bench: &Benchmark, horizon: f64) -> Option<ReferenceSolution> {
    let spec = &bench.spec;
    let zero_control = |dim: usize| move |_: f64, _: &[f64]| Some(Vector::zeros(dim));
    let never = |_: f64, _: &[f64]| false;
    match bench.name? {
        "quadratic-lq" | "zero" => Some(ReferenceSolution::new(
            horizon,
            |_, _| 0.0,
            zero_control(spec.control_dim),
            never,
        )),
        "transport-sin" => Some(ReferenceSolution::new(
            horizon,
            move |t, x| libm::sin(x[0] + horizon - t),
            zero_control(spec.control_dim),
            never,
        )),
        "eikonal-cos" => {
            let q = |y: &[f64]| TerminalCostForm::Cos.eval(y);
            Some(ReferenceSolution::new(
                horizon,
                move |t, x| {
                    hopf_lax_oracle(&q, 1.0, t, horizon, x, 1.0).expect("one-dimensional oracle")
                },
                move |t, x| {
                    let (_, y) = hopf_lax_min(&q, x, horizon - t).ok()?;
                    let d = y[0] - x[0];
                    (d != 0.0).then(|| Vector::from_slice(&[d.signum()]))
                },
                // symmetric minimizers at the peaks of cos; a whole ball of
                // minimizers once the trough at π is reachable
                move |t, x| {
                    wrapped_distance(x[0], 0.0) <= 1e-9
                        || wrapped_distance(x[0], PI) <= horizon - t + 1e-9
                },
            ))
        }
        _ => None,
    }
}

/// Errors of the direct solve against a reference for a sequence of mesh
/// sizes, with a power-law fit `e ≈ C h^order`.
#[derive(Debug, Clone)]
pub struct RateStudy {
    /// Effective grid spacings, decreasing.
    pub h_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub errors: Vec<f64>,
    pub l2_errors: Vec<f64>,
    /// `None` when the errors are degenerate (zero up to rounding).
    pub fit: Option<PowerLaw>,
}

impl RateStudy {
    pub fn is_degenerate(&self) -> bool {
        self.fit.is_none()
    }

    pub fn fitted_order(&self) -> Option<f64> {
        self.fit.map(|f| f.order)
    }

    pub fn fitted_constant(&self) -> Option<f64> {
        self.fit.map(|f| f.constant)
    }

    pub fn r_squared(&self) -> Option<f64> {
        self.fit.map(|f| f.r_squared)
    }
}

/// Minimum number of mesh sizes in a rate study.
pub const MIN_STUDY_POINTS: usize = 4;

fn check_decreasing(values: &[f64], what: &str) -> Result<()> {
    if values.len() < MIN_STUDY_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_STUDY_POINTS,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !(*v > 0.0)) || values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(alloc::format!(
            "{what} values must be positive and strictly decreasing"
        )));
    }
    Ok(())
}

/// Solves `bench` with the default `(τ, N)` rule (or the given `N`) at each
/// nominal `h` and measures the error against `reference` on the measured
/// region at every time level.
pub fn run_h_rate_study(
    bench: &Benchmark,
    reference: &ReferenceSolution,
    h_values: &[f64],
    viscosity: Option<f64>,
) -> Result<RateStudy> {
    check_decreasing(h_values, "h")?;
    let horizon = reference.horizon;
    let mut study = RateStudy {
        h_values: Vec::new(),
        tau_values: Vec::new(),
        errors: Vec::new(),
        l2_errors: Vec::new(),
        fit: None,
    };
    for &h in h_values {
        let grid = bench.grid(h)?;
        let params = SchemeParams::resolve(
            grid.spacing(),
            None,
            viscosity,
            horizon,
            bench.problem.f_sup_bound(),
            grid.dim(),
        )?;
        let scheme = Scheme::new(&bench.problem, grid.clone(), params)?;
        let solution = scheme.solve_hjb_direct()?;
        let region = bench.measured_region(&grid, horizon);
        let (sup, l2) = reference.errors(&solution, &region);
        study.h_values.push(grid.spacing());
        study.tau_values.push(params.tau);
        study.errors.push(sup);
        study.l2_errors.push(l2);
    }
    if study.errors.iter().all(|e| *e > DEGENERATE_ERROR) {
        study.fit = Some(fit_power_law(&study.h_values, &study.errors)?);
    }
    Ok(study)
}

/// Solutions at a fixed `h` for decreasing `τ`, compared on the time levels
/// of the coarsest `τ`.
#[derive(Debug, Clone)]
pub struct TauStudy {
    pub h: f64,
    pub viscosity: f64,
    pub tau_values: Vec<f64>,
    /// `distances[i]`: sup distance between the solutions at `τ_i` and
    /// `τ_{i+1}` on the measured region.
    pub distances: Vec<f64>,
    pub l2_distances: Vec<f64>,
    /// First-order Richardson extrapolation `τ → 0` from the two finest
    /// runs, at the coarse time levels.
    pub extrapolated: Vec<Field>,
    /// Power-law fit of the distances against `τ_i`, when non-degenerate.
    pub fit: Option<PowerLaw>,
}

impl TauStudy {
    /// Distances non-increasing in refinement.
    pub fn is_cauchy(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Runs the direct solve at fixed `h` for each `τ` (each satisfying the
/// CFL condition with viscosity `N`) and tracks the refinement limit.
pub fn run_tau_refinement_study(
    bench: &Benchmark,
    h: f64,
    tau_values: &[f64],
    viscosity: Option<f64>,
    horizon: f64,
) -> Result<TauStudy> {
    if tau_values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: tau_values.len(),
        });
    }
    if tau_values.iter().any(|v| !(*v > 0.0)) || tau_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(
            "tau values must be positive and strictly decreasing".into(),
        ));
    }
    let grid = bench.grid(h)?;
    let n =
        viscosity.unwrap_or_else(|| SchemeParams::default_viscosity(bench.problem.f_sup_bound()));
    let region = bench.measured_region(&grid, horizon);
    let mut solutions = Vec::with_capacity(tau_values.len());
    let mut taus = Vec::with_capacity(tau_values.len());
    for &tau in tau_values {
        let params = SchemeParams::new(grid.spacing(), tau, n, horizon)?;
        let scheme = Scheme::new(&bench.problem, grid.clone(), params)?;
        solutions.push(scheme.solve_hjb_direct()?);
        taus.push(params.tau);
    }
    let coarse = &solutions[0];
    // coarse levels located on every finer time axis
    let mut aligned: Vec<Vec<&Field>> = Vec::with_capacity(solutions.len());
    for s in &solutions {
        let mut slices = Vec::with_capacity(coarse.slices.len());
        for c in &coarse.slices {
            let k = s.params.level_of(c.time());
            if (s.params.time(k) - c.time()).abs() > 1e-9 * s.params.tau {
                return Err(Error::Config(alloc::format!(
                    "tau = {} does not resolve the coarse level t = {}",
                    s.params.tau,
                    c.time()
                )));
            }
            slices.push(&s.slices[k]);
        }
        aligned.push(slices);
    }
    let weight = libm::pow(grid.spacing(), grid.dim() as f64);
    let mut distances = Vec::new();
    let mut l2_distances = Vec::new();
    for pair in aligned.windows(2) {
        let mut sup = 0.0f64;
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            for &i in &region {
                sup = sup.max((a.values()[i] - b.values()[i]).abs());
            }
        }
        let (a, b) = (pair[0][0].values(), pair[1][0].values());
        let l2: f64 = region.iter().map(|&i| (a[i] - b[i]) * (a[i] - b[i])).sum();
        distances.push(sup);
        l2_distances.push(libm::sqrt(weight * l2));
    }
    let last = taus.len() - 1;
    let ratio = taus[last - 1] / taus[last];
    let extrapolated = aligned[last]
        .iter()
        .zip(&aligned[last - 1])
        .map(|(fine, coarse)| {
            let values = fine
                .values()
                .iter()
                .zip(coarse.values())
                .map(|(f, c)| (ratio * f - c) / (ratio - 1.0))
                .collect();
            Field::new(grid.clone(), values, fine.time())
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = if distances.len() >= 2 && distances.iter().all(|d| *d > DEGENERATE_ERROR) {
        Some(fit_power_law(&taus[..last], &distances)?)
    } else {
        None
    };
    Ok(TauStudy {
        h: grid.spacing(),
        viscosity: n,
        tau_values: taus,
        distances,
        l2_distances,
        extrapolated,
        fit,
    })
}

/// `max (𝓕_t(U) − 𝓕_t(V))` for an ordered pair `U ≤ V`; never positive
/// when the step operator is monotone.
pub fn comparison_gap(scheme: &Scheme<'_>, t: f64, lower: &Field, upper: &Field) -> Result<f64> {
    if lower
        .values()
        .iter()
        .zip(upper.values())
        .any(|(u, v)| u > v)
    {
        return Err(Error::Domain("comparison pair is not ordered".into()));
    }
    let a = scheme.apply_step_operator(t, lower)?;
    let b = scheme.apply_step_operator(t, upper)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiConcavityReport {
    pub offsets: Vec<Vector>,
    /// Max of `[V(t,x+y) + V(t,x−y) − 2V(t,x)] / (|y|² + √h)`; `−∞` when no
    /// admissible triple exists.
    pub worst_ratio: f64,
    /// `(time, grid index, offset index)` of the worst ratio.
    pub worst_at: Option<(f64, usize, usize)>,
    pub samples: usize,
}

fn grid_steps(grid: &Grid, offset: &[f64]) -> Result<[isize; 3]> {
    if offset.len() != grid.dim() {
        return Err(Error::Domain(
            "offset dimension differs from the grid".into(),
        ));
    }
    let mut steps = [0isize; 3];
    for (axis, y) in offset.iter().enumerate() {
        let k = y / grid.spacing();
        let r = libm::round(k);
        if (k - r).abs() > 1e-9 * (1.0 + r.abs()) {
            return Err(Error::Domain(alloc::format!(
                "offset component {y} is not a multiple of h = {}",
                grid.spacing()
            )));
        }
        steps[axis] = r as isize;
    }
    if steps.iter().all(|s| *s == 0) {
        return Err(Error::Domain("zero offset".into()));
    }
    Ok(steps)
}

fn shifted(grid: &Grid, index: usize, steps: &[isize; 3], sign: isize) -> Option<usize> {
    let multi = grid.multi_index(index);
    let mut out = [0usize; 3];
    for axis in 0..grid.dim() {
        let n = grid.points_per_axis()[axis] as isize;
        let j = multi[axis] as isize + sign * steps[axis];
        out[axis] = match grid.topology()[axis] {
            Topology::Periodic => j.rem_euclid(n) as usize,
            Topology::Clamped if (0..n).contains(&j) => j as usize,
            Topology::Clamped => return None,
        };
    }
    grid.linear_index(&out[..grid.dim()]).ok()
}

/// Worst weak semi-concavity ratio of `solution` over all time levels,
/// points `x` of `region` and offsets `y` with `x ± y` also in `region`.
pub fn semi_concavity_probe(
    solution: &SpaceTimeSolution,
    offsets: &[Vector],
    region: &[usize],
) -> Result<SemiConcavityReport> {
    let grid = solution.grid();
    let steps = offsets
        .iter()
        .map(|y| grid_steps(grid, y))
        .collect::<Result<Vec<_>>>()?;
    let mut inside = alloc::vec![false; grid.len()];
    for &i in region {
        grid.check_index(i)?;
        inside[i] = true;
    }
    let root_h = libm::sqrt(grid.spacing());
    let mut report = SemiConcavityReport {
        offsets: offsets.to_vec(),
        worst_ratio: f64::NEG_INFINITY,
        worst_at: None,
        samples: 0,
    };
    for (k, (y, s)) in offsets.iter().zip(&steps).enumerate() {
        let scale = y.dot(y) + root_h;
        let pairs: Vec<(usize, usize, usize)> = region
            .iter()
            .filter_map(|&i| {
                let up = shifted(grid, i, s, 1)?;
                let down = shifted(grid, i, s, -1)?;
                (inside[up] && inside[down]).then_some((i, up, down))
            })
            .collect();
        for slice in &solution.slices {
            let v = slice.values();
            for &(i, up, down) in &pairs {
                let ratio = (v[up] + v[down] - 2.0 * v[i]) / scale;
                report.samples += 1;
                if ratio > report.worst_ratio {
                    report.worst_ratio = ratio;
                    report.worst_at = Some((slice.time(), i, k));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyProbeRow {
    pub h: f64,
    pub time: f64,
    pub point: Vector,
    pub grid_index: usize,
    pub control: Vector,
    pub expected: Vector,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyProbeReport {
    pub rows: Vec<PolicyProbeRow>,
    /// Probes inside the declared kink set, not evaluated.
    pub skipped: Vec<(f64, Vector)>,
    /// Per evaluated probe: the control at the two finest `h` equals the
    /// reference control.
    pub stabilized: Vec<bool>,
}

/// Feedback of the direct solve at probe points `(t, x)` for each `h`,
/// compared with the reference optimal control.
pub fn policy_pointwise_convergence_probe(
    bench: &Benchmark,
    reference: &ReferenceSolution,
    h_values: &[f64],
    probes: &[(f64, Vector)],
) -> Result<PolicyProbeReport> {
    let horizon = reference.horizon;
    let mut report = PolicyProbeReport {
        rows: Vec::new(),
        skipped: Vec::new(),
        stabilized: Vec::new(),
    };
    let mut active = Vec::new();
    for (t, x) in probes {
        if !(0.0..horizon).contains(t) {
            return Err(Error::Domain(alloc::format!(
                "probe time {t} outside [0, {horizon})"
            )));
        }
        match reference.optimal_control(*t, x) {
            Some(a) => active.push((*t, *x, a)),
            None => report.skipped.push((*t, *x)),
        }
    }
    let tolerance = 0.5 * bench.problem.controls().resolution() + 1e-12;
    for &h in h_values {
        let grid = bench.grid(h)?;
        let params = SchemeParams::resolve(
            grid.spacing(),
            None,
            None,
            horizon,
            bench.problem.f_sup_bound(),
            grid.dim(),
        )?;
        let scheme = Scheme::new(&bench.problem, grid.clone(), params)?;
        let solution = scheme.solve_hjb_direct()?;
        let policies = solution
            .policy_slices
            .as_ref()
            .ok_or_else(|| Error::Domain("direct solve recorded no policy".into()))?;
        for (t, x, expected) in &active {
            let index = grid.nearest_index(x).map_err(|axis| {
                Error::Domain(alloc::format!("probe outside the grid on axis {axis}"))
            })?;
            // the policy recorded at level k drives the step out of level k
            let level = params.level_of(*t).max(1);
            let choice = policies[level - 1].choices()[index];
            let control = *bench.problem.controls().get(choice);
            let gap = control
                .iter()
                .zip(expected.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            report.rows.push(PolicyProbeRow {
                h: grid.spacing(),
                time: *t,
                point: *x,
                grid_index: index,
                control,
                expected: *expected,
                matches: gap <= tolerance,
            });
        }
    }
    let per_h = active.len();
    for p in 0..per_h {
        let tail: Vec<bool> = report
            .rows
            .iter()
            .skip(p)
            .step_by(per_h.max(1))
            .map(|r| r.matches)
            .collect();
        let n = tail.len();
        report.stabilized.push(n >= 2 && tail[n - 2] && tail[n - 1]);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;

    fn cos1(y: &[f64]) -> f64 {
        libm::cos(y[0])
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(
            hopf_lax_oracle(&cos1, 1.0, 1.0, 1.0, &[0.3], 1.0).unwrap(),
            libm::cos(0.3)
        );
        for x in [-2.0, 0.0, 0.4, 3.0] {
            let v = hopf_lax_oracle(&cos1, 1.0, 1.0 - PI, 1.0, &[x], 1.0).unwrap();
            assert!((v - (PI - 1.0)).abs() < 1e-6, "{v}");
        }
        let v = hopf_lax_oracle(&cos1, 1.0, 0.5, 1.0, &[0.0], 1.0).unwrap();
        assert!((v - 1.377_582_561_890_372_8).abs() < 1e-12, "{v}");
        assert!(matches!(
            hopf_lax_oracle(&|_: &[f64]| 0.0, 0.0, 0.0, 1.0, &[0.0; 3], 1.0),
            Err(Error::UnsupportedDimension(3))
        ));
    }

    #[test]
    fn oracle_in_two_dimensions() {
        let q = |y: &[f64]| y[0] + 2.0 * y[1];
        let v = hopf_lax_oracle(&q, 0.0, 0.0, 1.0, &[0.0, 0.0], 1.0).unwrap();
        assert!((v + libm::sqrt(5.0)).abs() < 1e-5, "{v}");
    }

    #[test]
    fn oracle_is_non_increasing_in_remaining_time() {
        let q = |y: &[f64]| libm::sin(3.0 * y[0]) + 0.2 * y[0];
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let t = 1.0 - 0.05 * k as f64;
            let v = hopf_lax_oracle(&q, 0.0, t, 1.0, &[0.4], 1.0).unwrap();
            assert!(v <= last + 1e-15);
            last = v;
        }
    }

    #[test]
    fn eikonal_reference_controls_and_kinks() {
        let r = reference_for(&Benchmark::eikonal_cos(), 1.0).unwrap();
        assert_eq!(&*r.optimal_control(0.0, &[PI / 2.0]).unwrap(), &[1.0]);
        assert_eq!(&*r.optimal_control(0.0, &[-PI / 2.0]).unwrap(), &[-1.0]);
        assert!(r.optimal_control(0.0, &[0.0]).is_none());
        assert!(r.in_kink_set(0.0, &[PI - 0.5]));
        assert!(!r.in_kink_set(0.5, &[PI - 0.6]));
    }

    #[test]
    fn zero_benchmark_study_is_degenerate() {
        let bench = Benchmark::zero();
        let r = reference_for(&bench, 1.0).unwrap();
        let study = run_h_rate_study(&bench, &r, &[0.2, 0.1, 0.05, 0.025], None).unwrap();
        assert!(study.is_degenerate());
        assert!(study.fitted_order().is_none());
        assert!(run_h_rate_study(&bench, &r, &[0.2, 0.1, 0.05], None).is_err());
        assert!(run_h_rate_study(&bench, &r, &[0.1, 0.2, 0.05, 0.01], None).is_err());
    }

    #[test]
    fn transport_study_is_first_order() {
        let bench = Benchmark::transport_sin();
        let r = reference_for(&bench, 1.0).unwrap();
        let study = run_h_rate_study(&bench, &r, &[0.2, 0.1, 0.05, 0.025], None).unwrap();
        assert!(study.fitted_order().unwrap() >= 0.9, "{study:?}");
    }

    #[test]
    fn tau_study_examples() {
        let bench = Benchmark::eikonal_cos();
        let study =
            run_tau_refinement_study(&bench, 0.1, &[0.05, 0.025, 0.0125, 0.00625], None, 1.0)
                .unwrap();
        assert!(study.is_cauchy(), "{:?}", study.distances);
        // coarsest τ at the CFL boundary h/(2N)
        let grid = bench.grid(0.1).unwrap();
        let edge = grid.spacing() / 2.0;
        assert!(run_tau_refinement_study(
            &bench,
            0.1,
            &[edge, edge / 2.0],
            None,
            2.0 * edge * 10.0
        )
        .is_ok());
        assert!(matches!(
            run_tau_refinement_study(&bench, 0.1, &[0.2, 0.1], None, 1.0),
            Err(Error::Cfl(_))
        ));
    }

    #[test]
    fn tau_study_on_constant_cost_is_exact() {
        let mut spec = crate::catalog::spec_for("zero");
        spec.running_cost = crate::catalog::RunningCostForm::One;
        let bench = Benchmark::from_spec(spec).unwrap();
        let study =
            run_tau_refinement_study(&bench, 0.1, &[0.05, 0.025, 0.0125], None, 1.0).unwrap();
        assert!(study.distances.iter().all(|d| *d < 1e-12));
        for f in &study.extrapolated {
            assert!(f
                .values()
                .iter()
                .all(|v| (v - (1.0 - f.time())).abs() < 1e-12));
        }
    }

    fn single_slice(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> SpaceTimeSolution {
        SpaceTimeSolution {
            params: SchemeParams::new(
                grid.spacing(),
                grid.spacing() / 2.0,
                1.0,
                grid.spacing() / 2.0,
            )
            .unwrap(),
            slices: alloc::vec![Field::from_fn(grid, 0.0, f).unwrap()],
            policy_slices: None,
        }
    }

    #[test]
    fn semi_concavity_examples() {
        let h = 0.1;
        let grid = Arc::new(Grid::clamped(1, -1.0, h, 21).unwrap());
        let all: Vec<usize> = (0..grid.len()).collect();
        let linear = single_slice(grid.clone(), |x| 3.0 * x[0] - 1.0);
        let r = semi_concavity_probe(&linear, &[Vector::from_slice(&[h])], &all).unwrap();
        assert!(r.worst_ratio.abs() < 1e-12);

        let vee = single_slice(grid.clone(), |x| -x[0].abs());
        let r = semi_concavity_probe(&vee, &[Vector::from_slice(&[h])], &all).unwrap();
        assert!(r.worst_ratio <= 1e-12);
        let cone = single_slice(grid.clone(), |x| x[0].abs());
        let r = semi_concavity_probe(&cone, &[Vector::from_slice(&[h])], &all).unwrap();
        let expected = 2.0 * h / (h * h + libm::sqrt(h));
        assert!((r.worst_ratio - expected).abs() < 1e-9);
        assert_eq!(r.worst_at.unwrap().1, 10);

        assert!(semi_concavity_probe(&cone, &[Vector::from_slice(&[0.15])], &all).is_err());
    }

    #[test]
    fn policy_probe_on_eikonal() {
        let bench = Benchmark::eikonal_cos();
        let r = reference_for(&bench, 1.0).unwrap();
        let probes = [
            (0.0, Vector::from_slice(&[PI / 2.0])),
            (0.0, Vector::from_slice(&[0.0])),
        ];
        let report = policy_pointwise_convergence_probe(&bench, &r, &[0.1, 0.05], &probes).unwrap();
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows.iter().all(|row| &*row.control == &[1.0]));
        assert_eq!(report.stabilized, [true]);
    }

    #[test]
    fn singleton_policy_probe_is_trivial() {
        let bench = Benchmark::transport_sin();
        let r = reference_for(&bench, 1.0).unwrap();
        let probes = [(0.2, Vector::from_slice(&[1.0]))];
        let report =
            policy_pointwise_convergence_probe(&bench, &r, &[0.2, 0.1, 0.05], &probes).unwrap();
        assert!(report.rows.iter().all(|row| row.matches));
        assert_eq!(report.stabilized, [true]);
    }
}
