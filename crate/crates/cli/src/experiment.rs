//! Dispatch of one experiment and the mapping of failures to exit codes.

use std::path::Path;

use hjbpi_core::analysis::{
    comparison_gap, policy_pointwise_convergence_probe, reference_for, run_h_rate_study,
    run_tau_refinement_study, semi_concavity_probe,
};
use hjbpi_core::catalog::{DynamicsForm, RunningCostForm};
use hjbpi_core::fit::{fit_geometric_rate, max_step_ratio};
use hjbpi_core::legendre::{generalized_pi, to_backward_time, GeneralizedProblem};
use hjbpi_core::pi::{run_policy_iteration, PIConfig};
use hjbpi_core::{Benchmark, Error, Field, Scheme, SchemeParams, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, ExperimentConfig, HamiltonianForm, Mode};
use crate::output::{self, Summary};

/// Tolerance of the comparison-principle probe.
pub const COMPARISON_TOLERANCE: f64 = 1e-14;
/// Slack of the a-priori bound check on solved slices.
pub const A_PRIORI_SLACK: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for invalid input, 3 for numerical blowup, 4 for a violated
    /// invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(Error::Blowup { .. }) => 3,
            RunError::Core(Error::Monotonicity { .. }) | RunError::Invariant(_) => 4,
            _ => 2,
        }
    }
}

/// Runs `config`, writing CSVs and `summary.txt` into its output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Summary, RunError> {
    let dir = config.output_dir.as_path();
    std::fs::create_dir_all(dir)?;
    let bench = config.benchmark.build()?;
    let mut summary = Summary::default();
    summary.push("mode", config.mode);
    summary.push("benchmark", config.benchmark.label());
    summary.push("seed", config.seed);
    let result = match config.mode {
        Mode::Solve => solve(config, &bench, dir, &mut summary),
        Mode::Pi => pi(config, &bench, dir, &mut summary),
        Mode::HStudy => h_study(config, &bench, dir, &mut summary),
        Mode::TauStudy => tau_study(config, &bench, dir, &mut summary),
        Mode::LegendrePi => legendre_pi(config, &bench, dir, &mut summary),
        Mode::Probes => probes(config, &bench, dir, &mut summary),
    };
    summary.push(
        "status",
        match &result {
            Ok(()) => "ok".to_owned(),
            Err(e) => format!("error (exit {}): {e}", e.exit_code()),
        },
    );
    summary.write(dir)?;
    result.map(|()| summary)
}

fn scheme_for<'a>(
    config: &ExperimentConfig,
    bench: &'a Benchmark,
    summary: &mut Summary,
) -> Result<Scheme<'a>, RunError> {
    let grid = bench.grid(config.scheme.h)?;
    let params = config.params(grid.spacing())?;
    summary.push_num("h", params.h);
    summary.push_num("tau", params.tau);
    summary.push_num("N", params.viscosity);
    summary.push_num("T", params.horizon);
    summary.push("steps", params.steps);
    Ok(Scheme::new(&bench.problem, grid, params)?)
}

fn solve(
    config: &ExperimentConfig,
    bench: &Benchmark,
    dir: &Path,
    summary: &mut Summary,
) -> Result<(), RunError> {
    let scheme = scheme_for(config, bench, summary)?;
    let solution = scheme.solve_hjb_direct()?;
    output::write_solution(&dir.join("solution.csv"), &solution)?;
    let sup = solution
        .slices
        .iter()
        .map(Field::sup_norm)
        .fold(0.0, f64::max);
    summary.push_num("sup_norm", sup);
    let region = bench.measured_region(scheme.grid(), config.scheme.horizon);
    if let Some(reference) = reference_for(bench, config.scheme.horizon) {
        let (e, l2) = reference.errors(&solution, &region);
        summary.push_num("reference_sup_error", e);
        summary.push_num("reference_l2_error", l2);
    }
    let excess = solution
        .slices
        .iter()
        .map(|s| s.sup_norm() - scheme.a_priori_bound(s.time()))
        .fold(f64::NEG_INFINITY, f64::max);
    summary.push_num("a_priori_excess", excess);
    if excess > A_PRIORI_SLACK {
        return Err(RunError::Invariant(format!(
            "a-priori bound exceeded by {excess:e}"
        )));
    }
    Ok(())
}

fn pi(
    config: &ExperimentConfig,
    bench: &Benchmark,
    dir: &Path,
    summary: &mut Summary,
) -> Result<(), RunError> {
    let scheme = scheme_for(config, bench, summary)?;
    let region = bench.measured_region(scheme.grid(), config.scheme.horizon);
    let pi_config = PIConfig {
        initial_policy: config.pi.initial_policy.to_core(),
        max_iterations: config.pi.max_iterations,
        stop_tolerance: config.pi.stop_tolerance,
        record_every: config.pi.record_every,
    };
    let run = run_policy_iteration(&scheme, &region, &pi_config)?;
    output::write_pi_run(&dir.join("pi_run.csv"), &run)?;
    output::write_solution(&dir.join("solution.csv"), run.final_iterate())?;
    let burn_in = config.pi.burn_in;
    match fit_geometric_rate(&run.errors_to_fixed_point, burn_in) {
        Ok(fit) => {
            summary.push_num("rho", fit.rho);
            summary.push_num("r_squared", fit.r_squared);
            summary.push("fit_points", fit.used);
            summary.push(
                "fit_status",
                if fit.hit_floor {
                    "ok (reached floor)"
                } else {
                    "ok"
                },
            );
        }
        Err(e) => {
            summary.push("rho", "n/a");
            summary.push("r_squared", "n/a");
            summary.push("fit_status", format!("not fitted: {e}"));
        }
    }
    match max_step_ratio(&run.errors_to_fixed_point, burn_in) {
        Some(r) => summary.push_num("max_step_ratio", r),
        None => summary.push("max_step_ratio", "n/a"),
    }
    summary.push("burn_in", burn_in);
    summary.push("iterations_used", run.iterations_used);
    summary.push("stop_reason", run.stop_reason.as_str());
    summary.push_num(
        "fixed_point_distance",
        *run.errors_to_fixed_point
            .last()
            .expect("iterate 0 is recorded"),
    );
    summary.push("monotonicity_violations", run.monotonicity.violations);
    summary.push_num("monotonicity_worst", run.monotonicity.worst);
    Ok(())
}

fn push_fit(summary: &mut Summary, fit: Option<hjbpi_core::fit::PowerLaw>) {
    match fit {
        Some(f) => {
            summary.push_num("fitted_order", f.order);
            summary.push_num("fitted_constant", f.constant);
            summary.push_num("r_squared", f.r_squared);
            summary.push("fit_status", "ok");
        }
        None => {
            summary.push("fitted_order", "n/a");
            summary.push("fitted_constant", "n/a");
            summary.push("r_squared", "n/a");
            summary.push("fit_status", "degenerate");
        }
    }
}

fn h_study(
    config: &ExperimentConfig,
    bench: &Benchmark,
    dir: &Path,
    summary: &mut Summary,
) -> Result<(), RunError> {
    let reference = reference_for(bench, config.scheme.horizon).ok_or_else(|| {
        ConfigError::Invalid(format!(
            "no reference solution for benchmark `{}`",
            config.benchmark.label()
        ))
    })?;
    let study = run_h_rate_study(bench, &reference, &config.study.h_values, None)?;
    output::write_rate_study(dir, &study)?;
    summary.push_num("T", config.scheme.horizon);
    push_fit(summary, study.fit);
    Ok(())
}

fn tau_study(
    config: &ExperimentConfig,
    bench: &Benchmark,
    dir: &Path,
    summary: &mut Summary,
) -> Result<(), RunError> {
    let study = run_tau_refinement_study(
        bench,
        config.scheme.h,
        &config.study.tau_values,
        config.scheme.viscosity,
        config.scheme.horizon,
    )?;
    output::write_tau_study(dir, &study)?;
    output::write_fields(&dir.join("extrapolated.csv"), &study.extrapolated)?;
    summary.push_num("h", study.h);
    summary.push_num("N", study.viscosity);
    summary.push_num("T", config.scheme.horizon);
    summary.push("cauchy", study.is_cauchy());
    push_fit(summary, study.fit);
    Ok(())
}

fn legendre_pi(
    config: &ExperimentConfig,
    bench: &Benchmark,
    dir: &Path,
    summary: &mut Summary,
) -> Result<(), RunError> {
    let settings = &config.legendre;
    let grid = bench.grid(config.scheme.h)?;
    let modified = settings.modified(grid.dim())?;
    let params = config.params(grid.spacing())?;
    let terminal = bench.spec.terminal_cost;
    let problem =
        GeneralizedProblem::new(&modified, grid.clone(), params, move |x| terminal.eval(x))?;
    let run = generalized_pi(
        &problem,
        None,
        settings.max_iterations,
        settings.stop_tolerance,
    )?;
    output::write_generalized_run(&dir.join("legendre_run.csv"), &run)?;
    output::write_solution(&dir.join("solution.csv"), run.final_iterate())?;
    summary.push("time_axis", "forward");
    summary.push_num("h", params.h);
    summary.push_num("tau", params.tau);
    summary.push_num("N", params.viscosity);
    summary.push_num("T", params.horizon);
    summary.push_num("m1", modified.m1);
    summary.push_num("m2", modified.m2);
    summary.push_num("legendre_resolution", run.legendre_resolution);
    summary.push("iterations_used", run.iterations_used);
    summary.push("stop_reason", run.stop_reason.as_str());
    summary.push_num(
        "fixed_point_distance",
        *run.errors_to_fixed_point.last().expect("v_0 is recorded"),
    );
    summary.push_num(
        "max_gradient",
        run.max_gradient.iter().copied().fold(0.0, f64::max),
    );
    summary.push("monotonicity_violations", run.monotonicity_violations);
    if settings.hamiltonian == HamiltonianForm::HalfSquare {
        // 𝓗(p) = |p|²/2 is −min_a [|a|²/2 + p·a] with |a| ≤ M
        let mut spec = bench.spec.clone();
        spec.dynamics = DynamicsForm::Control;
        spec.running_cost = RunningCostForm::HalfSquare;
        spec.control_dim = spec.dim;
        spec.control_lower = -settings.lipschitz_bound;
        spec.control_upper = settings.lipschitz_bound;
        spec.control_samples = settings.control_samples;
        let control = Benchmark::from_spec(spec)?;
        let scheme = Scheme::new(&control.problem, grid.clone(), params)?;
        let region = control.measured_region(&grid, params.horizon);
        let control_run = run_policy_iteration(&scheme, &region, &PIConfig::default())?;
        let gap = to_backward_time(run.final_iterate())
            .sup_distance(control_run.final_iterate(), &region);
        summary.push_num("control_pi_distance", gap);
    }
    Ok(())
}

fn probes(
    config: &ExperimentConfig,
    bench: &Benchmark,
    dir: &Path,
    summary: &mut Summary,
) -> Result<(), RunError> {
    let settings = &config.probes;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scheme = scheme_for(config, bench, summary)?;
    let grid = scheme.grid().clone();
    let params = *scheme.params();

    // comparison principle on random ordered pairs
    let amplitude = scheme.a_priori_bound(0.0) + 1.0;
    let mut rows = Vec::new();
    let mut comparison_violations = 0;
    for pair in 0..settings.comparison_pairs {
        let level = rng.gen_range(1..=params.steps);
        let t = params.time(level);
        let lower: Vec<f64> = (0..grid.len())
            .map(|_| rng.gen_range(-amplitude..amplitude))
            .collect();
        let upper: Vec<f64> = lower
            .iter()
            .map(|u| u + rng.gen_range(0.0..amplitude))
            .collect();
        let gap = comparison_gap(
            &scheme,
            t,
            &Field::new(grid.clone(), lower, t)?,
            &Field::new(grid.clone(), upper, t)?,
        )?;
        if gap > COMPARISON_TOLERANCE {
            comparison_violations += 1;
        }
        rows.push(vec![pair.to_string(), format!("{t:e}"), format!("{gap:e}")]);
    }
    output::write_table(
        &dir.join("comparison.csv"),
        &["pair", "t", "max_gap"],
        &rows,
    )?;
    summary.push("comparison_pairs", settings.comparison_pairs);
    summary.push("comparison_violations", comparison_violations);

    // weak semi-concavity across mesh sizes
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for &h in &settings.semi_concavity_h {
        let g = bench.grid(h)?;
        let p = SchemeParams::resolve(
            g.spacing(),
            None,
            None,
            config.scheme.horizon,
            bench.problem.f_sup_bound(),
            g.dim(),
        )?;
        let solution = Scheme::new(&bench.problem, g.clone(), p)?.solve_hjb_direct()?;
        let reach = (settings.offset_range / g.spacing()).floor().max(1.0) as usize;
        let (dim, spacing) = (g.dim(), g.spacing());
        let offsets: Vec<Vector> = (0..dim)
            .flat_map(|axis| {
                (1..=reach).map(move |k| {
                    let mut y = Vector::zeros(dim);
                    y[axis] = k as f64 * spacing;
                    y
                })
            })
            .collect();
        let region = bench.measured_region(&g, config.scheme.horizon);
        let report = semi_concavity_probe(&solution, &offsets, &region)?;
        rows.push(vec![
            format!("{:e}", g.spacing()),
            format!("{:e}", report.worst_ratio),
            report.samples.to_string(),
        ]);
        ratios.push(report.worst_ratio);
    }
    output::write_table(
        &dir.join("semi_concavity.csv"),
        &["h", "worst_ratio", "samples"],
        &rows,
    )?;
    let worst = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    summary.push_num("semi_concavity_worst", worst);
    let positive: Vec<f64> = ratios.iter().copied().filter(|r| *r > 0.0).collect();
    if positive.len() == ratios.len() {
        let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
        summary.push_num("semi_concavity_spread", worst / lo);
    } else {
        summary.push("semi_concavity_spread", "n/a");
    }

    // pointwise policy convergence
    let reference = reference_for(bench, config.scheme.horizon);
    if let (Some(reference), false) = (&reference, settings.policy_points.is_empty()) {
        let points = settings
            .policy_points
            .iter()
            .map(|row| {
                if row.len() != grid.dim() + 1 {
                    return Err(ConfigError::Invalid(format!(
                        "probes.policy_points rows need t and {} coordinates",
                        grid.dim()
                    )));
                }
                Ok((row[0], Vector::from_slice(&row[1..])))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let report =
            policy_pointwise_convergence_probe(bench, reference, &settings.policy_h, &points)?;
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    format!("{:e}", r.h),
                    format!("{:e}", r.time),
                    format!("{:?}", &*r.point),
                    format!("{:?}", &*r.control),
                    format!("{:?}", &*r.expected),
                    r.matches.to_string(),
                ]
            })
            .collect();
        output::write_table(
            &dir.join("policy_probe.csv"),
            &["h", "t", "x", "control", "expected", "matches"],
            &rows,
        )?;
        summary.push("policy_probes_skipped", report.skipped.len());
        summary.push(
            "policy_probes_stabilized",
            report.stabilized.iter().filter(|s| **s).count(),
        );
        summary.push("policy_probes_evaluated", report.stabilized.len());
    }

    // Euler rollouts of the direct-solve policy from random grid points
    let solution = scheme.solve_hjb_direct()?;
    let policies = solution
        .policy_slices
        .as_ref()
        .expect("direct solve records policies");
    let region = bench.measured_region(&grid, config.scheme.horizon);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    if !region.is_empty() {
        for _ in 0..settings.rollout_starts {
            let index = region[rng.gen_range(0..region.len())];
            let x = grid.coords(index);
            let cost = bench.problem.rollout_cost(policies, 0.0, &x, params.tau)?;
            let value = solution.initial().values()[index];
            worst = worst.max((cost - value).abs());
            let mut row: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
            row.extend([
                format!("{cost:e}"),
                format!("{value:e}"),
                format!("{:e}", (cost - value).abs()),
            ]);
            rows.push(row);
        }
    }
    let mut header: Vec<String> = (0..grid.dim()).map(|i| format!("x_{i}")).collect();
    header.extend(["rollout_cost", "value", "gap"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    output::write_table(&dir.join("rollout.csv"), &header, &rows)?;
    summary.push_num("rollout_worst_gap", worst);
    summary.push_num("rollout_constant", worst / (params.h + 2.0 * params.tau));

    if comparison_violations > 0 {
        return Err(RunError::Invariant(format!(
            "{comparison_violations} comparison pairs lost their order"
        )));
    }
    Ok(())
}
