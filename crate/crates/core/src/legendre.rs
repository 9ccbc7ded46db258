//! Policy iteration for a Hamiltonian `𝓗(t,x,p)` given directly and convex
//! in `p`, in the forward-in-time form `∂_t v + 𝓗(t,x,∇v) = N h Δ v`,
//! `v(0) = q`.
//!
//! The Hamiltonian is first clipped to linear growth outside `|p| ≤ 2M`
//! (where `M` bounds the gradient of the solution), which bounds `∇_p 𝓗̃`
//! by `m2 = 2N`. Each iteration then solves the linear problem
//!
//! ```text
//! ∂_t v_n + μ_{n-1} · ∇^h v_n − 𝓛(μ_{n-1}) = N h Δ^h v_n,   μ_{n-1} = ∇_p 𝓗̃(∇^h v_{n-1})
//! ```
//!
//! with an explicit forward step. For a control Hamiltonian `min_a [c + p·f]`
//! the forward form uses `𝓗 = −H`; [`to_backward_time`] maps a forward
//! solution onto the backward time axis for comparisons.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Vector, MAX_DIM};
use crate::par;
use crate::pi::{StopReason, MONOTONICITY_HARD_LIMIT, MONOTONICITY_TOLERANCE};
use crate::scheme::{validate_cfl, SchemeParams, SpaceTimeSolution};

pub type ScalarFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;
pub type VectorFn = dyn Fn(f64, &[f64], &[f64]) -> Vector + Send + Sync;

/// Points per axis of the coarse and refined Legendre grid searches.
pub const LEGENDRE_GRID_POINTS: usize = 41;
/// Tolerance of the midpoint-convexity spot checks.
pub const CONVEXITY_TOLERANCE: f64 = 1e-9;

/// A Hamiltonian convex in `p`, with optional analytic gradient and
/// Legendre transform.
pub struct ConvexHamiltonian {
    dim: usize,
    value: Box<ScalarFn>,
    grad_p: Option<Box<VectorFn>>,
    legendre: Option<Box<ScalarFn>>,
    p_probe_radius: f64,
    probe_points: Vec<(f64, Vector)>,
}

impl core::fmt::Debug for ConvexHamiltonian {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ConvexHamiltonian")
            .field("dim", &self.dim)
            .field("analytic_gradient", &self.grad_p.is_some())
            .field("analytic_legendre", &self.legendre.is_some())
            .field("p_probe_radius", &self.p_probe_radius)
            .finish_non_exhaustive()
    }
}

impl ConvexHamiltonian {
    pub fn new<F>(dim: usize, value: F) -> Result<Self>
    where
        F: Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(ConvexHamiltonian {
            dim,
            value: Box::new(value),
            grad_p: None,
            legendre: None,
            p_probe_radius: 5.0,
            probe_points: alloc::vec![(0.0, Vector::zeros(dim))],
        })
    }

    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(f64, &[f64], &[f64]) -> Vector + Send + Sync + 'static,
    {
        self.grad_p = Some(Box::new(grad));
        self
    }

    pub fn with_legendre<L>(mut self, legendre: L) -> Self
    where
        L: Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.legendre = Some(Box::new(legendre));
        self
    }

    pub fn with_probe_radius(mut self, radius: f64) -> Self {
        self.p_probe_radius = radius;
        self
    }

    /// `(t, x)` samples used for convexity checks and the `m1`/`m2` probes.
    /// `𝓗` independent of `(t, x)` needs only the default single sample.
    pub fn with_probe_points(mut self, points: Vec<(f64, Vector)>) -> Self {
        if !points.is_empty() {
            self.probe_points = points;
        }
        self
    }

    /// `𝓗(p) = |p|² / 2`, with `∇_p 𝓗 = p` and `𝓛(μ) = |μ|² / 2`.
    pub fn half_square(dim: usize) -> Result<Self> {
        Ok(ConvexHamiltonian::new(dim, |_, _, p| 0.5 * dot(p, p))?
            .with_gradient(|_, _, p| Vector::from_slice(p))
            .with_legendre(|_, _, mu| 0.5 * dot(mu, mu)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p_probe_radius(&self) -> f64 {
        self.p_probe_radius
    }

    pub fn has_analytic_legendre(&self) -> bool {
        self.legendre.is_some()
    }

    #[inline]
    pub fn value(&self, t: f64, x: &[f64], p: &[f64]) -> f64 {
        (self.value)(t, x, p)
    }

    /// `∇_p 𝓗`, analytic when supplied, otherwise central differences with
    /// step `1e-5 (1 + |p|)` (a subgradient at kinks).
    pub fn gradient(&self, t: f64, x: &[f64], p: &[f64]) -> Vector {
        if let Some(g) = &self.grad_p {
            return g(t, x, p);
        }
        let step = 1e-5 * (1.0 + libm::sqrt(dot(p, p)));
        let mut out = Vector::zeros(self.dim);
        let mut probe = Vector::from_slice(p);
        for i in 0..self.dim {
            probe[i] = p[i] + step;
            let up = self.value(t, x, &probe);
            probe[i] = p[i] - step;
            let down = self.value(t, x, &probe);
            probe[i] = p[i];
            out[i] = (up - down) / (2.0 * step);
        }
        out
    }

    /// Midpoint convexity on a deterministic set of `p` pairs within the
    /// probe radius, at every probe `(t, x)`.
    pub fn check_convexity(&self) -> Result<()> {
        let r = self.p_probe_radius;
        let samples = sphere_directions(self.dim);
        for (t, x) in &self.probe_points {
            for (i, d1) in samples.iter().enumerate() {
                for (j, d2) in samples.iter().enumerate() {
                    for (s1, s2) in [(1.0, 0.3), (0.5, 0.9), (0.1, 1.0)] {
                        let s1 = s1 * r * (1.0 + i as f64 * 1e-3);
                        let s2 = s2 * r * (1.0 + j as f64 * 1e-3);
                        let mut p1 = Vector::zeros(self.dim);
                        let mut p2 = Vector::zeros(self.dim);
                        let mut mid = Vector::zeros(self.dim);
                        for k in 0..self.dim {
                            p1[k] = s1 * d1[k];
                            p2[k] = s2 * d2[k];
                            mid[k] = 0.5 * (p1[k] + p2[k]);
                        }
                        let lhs = self.value(*t, x, &mid);
                        let rhs = 0.5 * (self.value(*t, x, &p1) + self.value(*t, x, &p2));
                        if lhs > rhs + CONVEXITY_TOLERANCE {
                            return Err(Error::Config(alloc::format!(
                                "Hamiltonian is not convex in p near p1={:?}, p2={:?}",
                                &*p1,
                                &*p2
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit directions used for probes on spheres `|p| = r`.
fn sphere_directions(dim: usize) -> Vec<Vector> {
    match dim {
        1 => alloc::vec![Vector::from_slice(&[1.0]), Vector::from_slice(&[-1.0])],
        2 => (0..64)
            .map(|k| {
                let a = 2.0 * core::f64::consts::PI * k as f64 / 64.0;
                Vector::from_slice(&[libm::cos(a), libm::sin(a)])
            })
            .collect(),
        _ => {
            // Fibonacci sphere
            let n = 200;
            let golden = core::f64::consts::PI * (3.0 - libm::sqrt(5.0));
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = libm::sqrt(1.0 - z * z);
                    let a = golden * k as f64;
                    Vector::from_slice(&[r * libm::cos(a), r * libm::sin(a), z])
                })
                .collect()
        }
    }
}

/// `𝓗` at every probe `(t, x)` and every direction on `|p| = r`.
fn sphere_values(h: &ConvexHamiltonian, r: f64) -> impl Iterator<Item = f64> + '_ {
    let dirs = sphere_directions(h.dim);
    h.probe_points.iter().flat_map(move |(t, x)| {
        dirs.clone().into_iter().map(move |mut p| {
            p.iter_mut().for_each(|v| *v *= r);
            h.value(*t, x, &p)
        })
    })
}

/// Maximum of `objective` over a tensor grid of `points^dim` nodes on the
/// cube `center ± radius`, skipping nodes outside `|p_i| ≤ bound`.
fn grid_argmax<F: Fn(&[f64]) -> f64>(
    center: &Vector,
    radius: f64,
    points: usize,
    bound: f64,
    objective: &F,
) -> (f64, Vector) {
    let dim = center.len();
    let step = 2.0 * radius / (points - 1) as f64;
    let total = points.pow(dim as u32);
    let mut best = (f64::NEG_INFINITY, *center);
    let mut p = Vector::zeros(dim);
    for mut k in 0..total {
        for axis in (0..dim).rev() {
            p[axis] = center[axis] - radius + (k % points) as f64 * step;
            k /= points;
        }
        if p.max_abs() > bound * (1.0 + 1e-12) {
            continue;
        }
        let v = objective(&p);
        if v > best.0 {
            best = (v, p);
        }
    }
    best
}

/// Grid spacing of the refined search for a probe radius.
pub fn legendre_resolution(radius: f64) -> f64 {
    let coarse = 2.0 * radius / (LEGENDRE_GRID_POINTS - 1) as f64;
    2.0 * coarse / (LEGENDRE_GRID_POINTS - 1) as f64
}

fn numeric_sup<F: Fn(&[f64]) -> f64>(dim: usize, radius: f64, objective: F) -> f64 {
    let coarse_step = 2.0 * radius / (LEGENDRE_GRID_POINTS - 1) as f64;
    let (_, best) = grid_argmax(
        &Vector::zeros(dim),
        radius,
        LEGENDRE_GRID_POINTS,
        radius,
        &objective,
    );
    let (value, _) = grid_argmax(&best, coarse_step, LEGENDRE_GRID_POINTS, radius, &objective);
    value
}

/// `𝓛(t,x,μ) = sup_p [p·μ − 𝓗(t,x,p)]`.
///
/// Uses the analytic transform when one was supplied; otherwise a coarse
/// grid search over `|p_i| ≤ p_probe_radius` refined once around the best
/// node. `admissible_radius`, when given, bounds `|μ|`.
pub fn legendre_transform_numeric(
    hamiltonian: &ConvexHamiltonian,
    t: f64,
    x: &[f64],
    mu: &[f64],
    admissible_radius: Option<f64>,
) -> Result<f64> {
    check_mu(mu, hamiltonian.dim, admissible_radius)?;
    if let Some(l) = &hamiltonian.legendre {
        return Ok(l(t, x, mu));
    }
    Ok(numeric_sup(
        hamiltonian.dim,
        hamiltonian.p_probe_radius,
        |p| dot(p, mu) - hamiltonian.value(t, x, p),
    ))
}

fn check_mu(mu: &[f64], dim: usize, admissible_radius: Option<f64>) -> Result<()> {
    if mu.len() != dim {
        return Err(Error::Domain(alloc::format!(
            "mu has {} components, Hamiltonian has dimension {dim}",
            mu.len()
        )));
    }
    let norm = libm::sqrt(dot(mu, mu));
    if !norm.is_finite() {
        return Err(Error::Domain("mu is not finite".into()));
    }
    if let Some(r) = admissible_radius {
        if norm > r * (1.0 + 1e-12) {
            return Err(Error::Domain(alloc::format!(
                "|mu| = {norm} exceeds the admissible bound {r}"
            )));
        }
    }
    Ok(())
}

/// `𝓗` clipped to linear growth of slope `m2` beyond `|p| = 2M`.
#[derive(Debug)]
pub struct ModifiedHamiltonian {
    pub base: ConvexHamiltonian,
    /// Gradient bound `M` of the target solution.
    pub lipschitz_bound: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Computes `m1 = min_{|p|=2M} 𝓗` and `m2 = max{2, max_{|p|=3M} (𝓗 − m1)/M}`
/// on the probe set, after spot-checking convexity.
pub fn modify_hamiltonian(
    base: ConvexHamiltonian,
    lipschitz_bound: f64,
) -> Result<ModifiedHamiltonian> {
    if !(lipschitz_bound > 0.0 && lipschitz_bound.is_finite()) {
        return Err(Error::Config(alloc::format!(
            "gradient bound M must be positive, got {lipschitz_bound}"
        )));
    }
    base.check_convexity()?;
    let m = lipschitz_bound;
    let m1 = sphere_values(&base, 2.0 * m).fold(f64::INFINITY, f64::min);
    let m2 = sphere_values(&base, 3.0 * m)
        .map(|h| (h - m1) / m)
        .fold(2.0, f64::max);
    Ok(ModifiedHamiltonian {
        base,
        lipschitz_bound: m,
        m1,
        m2,
    })
}

impl ModifiedHamiltonian {
    /// `N = m2 / 2`.
    pub fn viscosity(&self) -> f64 {
        0.5 * self.m2
    }

    fn line(&self, norm: f64) -> f64 {
        self.m1 + self.m2 * (norm - 2.0 * self.lipschitz_bound)
    }

    pub fn value(&self, t: f64, x: &[f64], p: &[f64]) -> f64 {
        let norm = libm::sqrt(dot(p, p));
        let m = self.lipschitz_bound;
        if norm <= 2.0 * m {
            self.base.value(t, x, p)
        } else if norm <= 3.0 * m {
            f64::max(self.base.value(t, x, p), self.line(norm))
        } else {
            self.line(norm)
        }
    }

    pub fn gradient(&self, t: f64, x: &[f64], p: &[f64]) -> Vector {
        let norm = libm::sqrt(dot(p, p));
        let m = self.lipschitz_bound;
        let base_branch =
            norm <= 2.0 * m || (norm <= 3.0 * m && self.base.value(t, x, p) >= self.line(norm));
        if base_branch {
            self.base.gradient(t, x, p)
        } else {
            let mut g = Vector::from_slice(p);
            g.iter_mut().for_each(|v| *v *= self.m2 / norm);
            g
        }
    }

    /// Radius of the `p` grid used by numeric transforms: `3M + 2`.
    pub fn probe_radius(&self) -> f64 {
        3.0 * self.lipschitz_bound + 2.0
    }

    /// Grid spacing of numeric transforms, or 0 when analytic.
    pub fn legendre_resolution(&self) -> f64 {
        if self.base.has_analytic_legendre() {
            0.0
        } else {
            legendre_resolution(self.probe_radius())
        }
    }

    /// Bound on the error of a numeric transform: the objective
    /// `p·μ − 𝓗̃` is `2 m2`-Lipschitz and the refined grid leaves at most half
    /// a cell diagonal to the maximizer.
    pub fn legendre_error_bound(&self) -> f64 {
        let d = self.base.dim as f64;
        2.0 * self.m2 * 0.5 * self.legendre_resolution() * libm::sqrt(d)
    }

    /// `𝓛̃(t,x,μ)` for `|μ| ≤ 2N`. An analytic transform supplied with the
    /// base Hamiltonian is used as is and must be valid on that range.
    pub fn legendre(&self, t: f64, x: &[f64], mu: &[f64]) -> Result<f64> {
        check_mu(mu, self.base.dim, Some(self.m2))?;
        if let Some(l) = &self.base.legendre {
            return Ok(l(t, x, mu));
        }
        Ok(numeric_sup(self.base.dim, self.probe_radius(), |p| {
            dot(p, mu) - self.value(t, x, p)
        }))
    }
}

/// Outcome of [`generalized_pi`]; per-iteration vectors start at `v_0`.
#[derive(Debug, Clone)]
pub struct GeneralizedRun {
    /// `(n, v_n)` for every iteration, forward time (`slices[k]` at `kτ`).
    pub iterates: Vec<(usize, SpaceTimeSolution)>,
    /// Direct forward solution of the nonlinear scheme.
    pub fixed_point: SpaceTimeSolution,
    pub errors_to_fixed_point: Vec<f64>,
    /// L² distance to the fixed point at `t = T`, the level furthest from
    /// the data.
    pub errors_l2: Vec<f64>,
    /// `max_t ‖μ(v_n) − μ(v_*)‖` with `μ(v) = ∇_p 𝓗̃(∇^h v)`.
    pub policy_l2_distance: Vec<f64>,
    pub successive_change: Vec<f64>,
    /// `max (v_n − v_{n−1})`; entries 0 and 1 are not checked (`v_0` need
    /// not be a supersolution) and hold `−∞`.
    pub monotonicity_worst: Vec<f64>,
    pub monotonicity_violations: usize,
    /// `max |∇^h v_n|` over all levels and points.
    pub max_gradient: Vec<f64>,
    pub legendre_resolution: f64,
    /// Excess `v_{n+1} − v_n` tolerated before the run fails: `1e−8` plus
    /// the accumulated error of a numeric transform.
    pub monotonicity_limit: f64,
    pub stop_reason: StopReason,
    pub iterations_used: usize,
}

impl GeneralizedRun {
    pub fn final_iterate(&self) -> &SpaceTimeSolution {
        &self.iterates.last().expect("v_0 is recorded").1
    }
}

pub struct GeneralizedProblem<'a> {
    pub hamiltonian: &'a ModifiedHamiltonian,
    pub grid: Arc<Grid>,
    pub params: SchemeParams,
    /// Initial datum `v(0, ·) = q` sampled on the grid.
    pub initial: Field,
}

impl<'a> GeneralizedProblem<'a> {
    pub fn new<Q: Fn(&[f64]) -> f64>(
        hamiltonian: &'a ModifiedHamiltonian,
        grid: Arc<Grid>,
        params: SchemeParams,
        q: Q,
    ) -> Result<Self> {
        if grid.dim() != hamiltonian.base.dim {
            return Err(Error::Config(
                "grid and Hamiltonian dimensions differ".into(),
            ));
        }
        if (grid.spacing() - params.h).abs() > 1e-12 * params.h {
            return Err(Error::Config(
                "scheme spacing differs from grid spacing".into(),
            ));
        }
        validate_cfl(&params, hamiltonian.m2, grid.dim()).map_err(Error::Cfl)?;
        let initial = Field::from_fn(grid.clone(), 0.0, q)?;
        Ok(GeneralizedProblem {
            hamiltonian,
            grid,
            params,
            initial,
        })
    }

    fn forward<F>(&self, mut step: F) -> Result<SpaceTimeSolution>
    where
        F: FnMut(usize, &Field) -> Result<Vec<f64>>,
    {
        let mut slices = Vec::with_capacity(self.params.steps + 1);
        slices.push(self.initial.clone());
        for k in 0..self.params.steps {
            let values = step(k, &slices[k])?;
            let t = self.params.time(k + 1);
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Blowup {
                    time: t,
                    index: i,
                    value: values[i],
                });
            }
            slices.push(Field::new(self.grid.clone(), values, t)?);
        }
        Ok(SpaceTimeSolution {
            params: self.params,
            slices,
            policy_slices: None,
        })
    }

    /// Forward explicit scheme `v(t+τ) = v − τ 𝓗̃(∇^h v) + N h τ Δ^h v`.
    pub fn solve_direct(&self) -> Result<SpaceTimeSolution> {
        let grid = &self.grid;
        let tau = self.params.tau;
        let diffusion = self.params.viscosity * self.params.h * tau;
        let ham = self.hamiltonian;
        self.forward(|k, field| {
            let t = self.params.time(k);
            let u = field.values();
            Ok(par::map_indices(grid.len(), |i| {
                let x = grid.coords(i);
                let p = grid.central_at(u, i);
                u[i] - tau * ham.value(t, &x, &p) + diffusion * grid.laplacian_at(u, i)
            }))
        })
    }

    /// One linearized solve around `previous`.
    pub fn solve_linearized(&self, previous: &SpaceTimeSolution) -> Result<SpaceTimeSolution> {
        let grid = &self.grid;
        let tau = self.params.tau;
        let diffusion = self.params.viscosity * self.params.h * tau;
        let ham = self.hamiltonian;
        self.forward(|k, field| {
            let t = self.params.time(k);
            let u = field.values();
            let prev = previous.slices[k].values();
            let out = par::map_indices(grid.len(), |i| {
                let x = grid.coords(i);
                let mu = ham.gradient(t, &x, &grid.central_at(prev, i));
                let lagrangian = ham.legendre(t, &x, &mu)?;
                let p = grid.central_at(u, i);
                Ok(u[i] - tau * (mu.dot(&p) - lagrangian) + diffusion * grid.laplacian_at(u, i))
            });
            out.into_iter().collect()
        })
    }

    fn feedback_gap(&self, a: &SpaceTimeSolution, b: &SpaceTimeSolution) -> f64 {
        let grid = &self.grid;
        a.slices
            .iter()
            .zip(&b.slices)
            .map(|(fa, fb)| {
                let t = fa.time();
                let sum: f64 = (0..grid.len())
                    .map(|i| {
                        let x = grid.coords(i);
                        let ma = self
                            .hamiltonian
                            .gradient(t, &x, &grid.central_at(fa.values(), i));
                        let mb = self
                            .hamiltonian
                            .gradient(t, &x, &grid.central_at(fb.values(), i));
                        ma.iter()
                            .zip(mb.iter())
                            .map(|(u, v)| (u - v) * (u - v))
                            .sum::<f64>()
                    })
                    .sum();
                libm::sqrt(sum)
            })
            .fold(0.0, f64::max)
    }

    /// `v_0(t, ·) = q` at every level.
    pub fn constant_in_time(&self) -> SpaceTimeSolution {
        let slices = (0..=self.params.steps)
            .map(|k| self.initial.clone().with_time(self.params.time(k)))
            .collect();
        SpaceTimeSolution {
            params: self.params,
            slices,
            policy_slices: None,
        }
    }
}

fn l2_at_end(a: &SpaceTimeSolution, b: &SpaceTimeSolution) -> f64 {
    let (u, v) = (a.terminal().values(), b.terminal().values());
    libm::sqrt(u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Runs the linearized iteration from `v_0` (default: `q` constant in time)
/// until successive iterates differ by less than `stop_tolerance`.
pub fn generalized_pi(
    problem: &GeneralizedProblem<'_>,
    initial: Option<SpaceTimeSolution>,
    max_iterations: usize,
    stop_tolerance: f64,
) -> Result<GeneralizedRun> {
    if max_iterations < 1 || !(stop_tolerance > 0.0) {
        return Err(Error::Config(
            "need max_iterations >= 1 and a positive stop tolerance".into(),
        ));
    }
    let fixed_point = problem.solve_direct()?;
    let all: Vec<usize> = (0..problem.grid.len()).collect();
    let mut value = initial.unwrap_or_else(|| problem.constant_in_time());
    if value.slices.len() != problem.params.steps + 1 {
        return Err(Error::Config(
            "initial iterate has the wrong number of levels".into(),
        ));
    }
    let grad_max = |s: &SpaceTimeSolution| {
        s.slices
            .iter()
            .flat_map(|f| {
                (0..f.grid().len()).map(move |i| f.grid().central_at(f.values(), i).norm())
            })
            .fold(0.0, f64::max)
    };
    let mut run = GeneralizedRun {
        iterates: alloc::vec![(0, value.clone())],
        errors_to_fixed_point: alloc::vec![value.sup_distance(&fixed_point, &all)],
        errors_l2: alloc::vec![l2_at_end(&value, &fixed_point)],
        policy_l2_distance: alloc::vec![problem.feedback_gap(&value, &fixed_point)],
        successive_change: alloc::vec![f64::INFINITY],
        monotonicity_worst: alloc::vec![f64::NEG_INFINITY],
        monotonicity_violations: 0,
        max_gradient: alloc::vec![grad_max(&value)],
        legendre_resolution: problem.hamiltonian.legendre_resolution(),
        monotonicity_limit: MONOTONICITY_HARD_LIMIT
            + problem.params.horizon * problem.hamiltonian.legendre_error_bound(),
        fixed_point: fixed_point.clone(),
        stop_reason: StopReason::MaxIterations,
        iterations_used: 0,
    };
    for n in 1..=max_iterations {
        let next = problem.solve_linearized(&value)?;
        let worst = if n >= 2 {
            let excess = next.max_excess_over(&value);
            run.monotonicity_violations += next
                .slices
                .iter()
                .zip(&value.slices)
                .flat_map(|(a, b)| a.values().iter().zip(b.values()))
                .filter(|(a, b)| *a - *b > MONOTONICITY_TOLERANCE)
                .count();
            if excess > run.monotonicity_limit {
                return Err(Error::Monotonicity {
                    iteration: n,
                    worst: excess,
                });
            }
            excess
        } else {
            f64::NEG_INFINITY
        };
        let change = next.sup_distance(&value, &all);
        value = next;
        run.errors_to_fixed_point
            .push(value.sup_distance(&fixed_point, &all));
        run.errors_l2.push(l2_at_end(&value, &fixed_point));
        run.policy_l2_distance
            .push(problem.feedback_gap(&value, &fixed_point));
        run.successive_change.push(change);
        run.monotonicity_worst.push(worst);
        run.max_gradient.push(grad_max(&value));
        run.iterates.push((n, value.clone()));
        run.iterations_used = n;
        if change < stop_tolerance {
            run.stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok(run)
}

/// Relabels a forward-in-time solution (`slices[k]` at `kτ`) onto the
/// backward axis `T − t`, so that it lines up with a control-formulation
/// solution with terminal datum `q`.
pub fn to_backward_time(forward: &SpaceTimeSolution) -> SpaceTimeSolution {
    let params = forward.params;
    let slices = forward
        .slices
        .iter()
        .rev()
        .enumerate()
        .map(|(k, f)| f.clone().with_time(params.time(k)))
        .collect();
    SpaceTimeSolution {
        params,
        slices,
        policy_slices: None,
    }
}
