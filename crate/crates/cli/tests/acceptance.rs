//! Acceptance suite. Each test prints one `PASS`/`FAIL` line with the
//! measured numbers before asserting.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hjbpi_core::analysis::{comparison_gap, reference_for, run_h_rate_study, semi_concavity_probe};
use hjbpi_core::catalog::{
    spec_for, DynamicsForm, RunningCostForm, TerminalCostForm, BENCHMARK_NAMES,
};
use hjbpi_core::fit::fit_geometric_rate;
use hjbpi_core::legendre::{
    generalized_pi, legendre_transform_numeric, modify_hamiltonian, to_backward_time,
    ConvexHamiltonian, GeneralizedProblem,
};
use hjbpi_core::pi::{run_policy_iteration, InitialPolicy, PIConfig, PIRun};
use hjbpi_core::{Benchmark, Field, Scheme, SchemeParams, Topology, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn report(name: &str, pass: bool, detail: &str) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn default_scheme(bench: &Benchmark, h: f64, horizon: f64) -> Scheme<'_> {
    let grid = bench.grid(h).unwrap();
    let params = SchemeParams::resolve(
        grid.spacing(),
        None,
        None,
        horizon,
        bench.problem.f_sup_bound(),
        grid.dim(),
    )
    .unwrap();
    Scheme::new(&bench.problem, grid, params).unwrap()
}

fn pi_run(bench: &Benchmark, h: f64, initial: InitialPolicy) -> (PIRun, Duration) {
    let start = Instant::now();
    let scheme = default_scheme(bench, h, 1.0);
    let region = bench.measured_region(scheme.grid(), 1.0);
    let config = PIConfig {
        initial_policy: initial,
        ..PIConfig::default()
    };
    let run = run_policy_iteration(&scheme, &region, &config).unwrap();
    (run, start.elapsed())
}

#[test]
fn geometric_pi_convergence() {
    let cases = [
        ("quadratic-lq", 0.05, InitialPolicy::FirstControl),
        ("eikonal-cos", 0.1, InitialPolicy::FirstControl),
    ];
    let mut all = true;
    let mut details = Vec::new();
    for (name, h, initial) in cases {
        let bench = Benchmark::by_name(name).unwrap();
        let (run, elapsed) = pi_run(&bench, h, initial);
        let limit = *run.errors_to_fixed_point.last().unwrap();
        let fit = fit_geometric_rate(&run.errors_to_fixed_point, 2);
        let fit_ok = matches!(fit, Ok(f) if f.rho <= 0.8 && f.r_squared >= 0.9);
        let ok = fit_ok && limit <= 1e-8 && elapsed <= Duration::from_secs(60);
        all &= ok;
        let fit_text = match fit {
            Ok(f) => format!("rho={:.3} r2={:.3}", f.rho, f.r_squared),
            Err(e) => format!("fit unavailable ({e})"),
        };
        details.push(format!(
            "{name}: {fit_text}, limit distance {limit:.1e}, errors {}, {:.1}s",
            sci(&run.errors_to_fixed_point),
            elapsed.as_secs_f64()
        ));
    }
    report("geometric PI convergence", all, &details.join("; "));
    assert!(all, "{}", details.join("\n"));
}

#[test]
fn sqrt_h_discretization_order() {
    let start = Instant::now();
    let hs = [0.2, 0.1, 0.05, 0.025];
    let eik = Benchmark::eikonal_cos();
    let eik_study = run_h_rate_study(&eik, &reference_for(&eik, 1.0).unwrap(), &hs, None).unwrap();
    let tr = Benchmark::transport_sin();
    let tr_study = run_h_rate_study(&tr, &reference_for(&tr, 1.0).unwrap(), &hs, None).unwrap();
    let elapsed = start.elapsed();
    let eik_order = eik_study.fitted_order().unwrap_or(f64::NAN);
    let tr_order = tr_study.fitted_order().unwrap_or(f64::NAN);
    let pass = eik_order >= 0.45 && tr_order >= 0.9 && elapsed <= Duration::from_secs(120);
    let detail = format!(
        "eikonal-cos order {eik_order:.3} (errors {}), transport-sin order {tr_order:.3} (errors {}), {:.1}s",
        sci(&eik_study.errors),
        sci(&tr_study.errors),
        elapsed.as_secs_f64()
    );
    report("sqrt(h) discretization order", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn monotone_iterates() {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut runs = 0;
    for name in BENCHMARK_NAMES {
        let bench = Benchmark::by_name(name).unwrap();
        let h = if name == "quadratic-lq" { 0.05 } else { 0.1 };
        for initial in [
            InitialPolicy::FirstControl,
            InitialPolicy::ArgminCost,
            InitialPolicy::LinearFeedback { gain: 1.0 },
        ] {
            let (run, _) = pi_run(&bench, h, initial);
            violations += run.monotonicity.violations;
            worst = worst.max(run.monotonicity.worst);
            runs += 1;
        }
    }
    let pass = violations == 0;
    let detail =
        format!("{runs} runs, {violations} violations above 1e-10, worst excess {worst:.1e}");
    report("monotone iterates", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn discrete_comparison_principle() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for name in BENCHMARK_NAMES {
        let bench = Benchmark::by_name(name).unwrap();
        let scheme = default_scheme(&bench, 0.1, 1.0);
        let grid = scheme.grid().clone();
        let steps = scheme.params().steps;
        for _ in 0..100 {
            let t = scheme.params().time(rng.gen_range(1..=steps));
            let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let v: Vec<f64> = u.iter().map(|x| x + rng.gen_range(0.0..2.0)).collect();
            let gap = comparison_gap(
                &scheme,
                t,
                &Field::new(grid.clone(), u, t).unwrap(),
                &Field::new(grid.clone(), v, t).unwrap(),
            )
            .unwrap();
            worst = worst.max(gap);
            if gap > 1e-14 {
                failures += 1;
            }
        }
    }
    let pass = failures == 0;
    let detail = format!("400 pairs, {failures} out of order, worst F(U)-F(V) {worst:.1e}");
    report("discrete comparison principle", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn a_priori_bounds() {
    let mut worst = f64::NEG_INFINITY;
    let mut slices = 0;
    for name in BENCHMARK_NAMES {
        let bench = Benchmark::by_name(name).unwrap();
        let h = if name == "quadratic-lq" { 0.05 } else { 0.1 };
        let scheme = default_scheme(&bench, h, 1.0);
        let q = scheme.terminal_field().sup_norm();
        let c = bench.problem.c_sup_bound();
        let mut check = |s: &Field| {
            worst = worst.max(s.sup_norm() - (q + c * (1.0 - s.time())));
            slices += 1;
        };
        scheme
            .solve_hjb_direct()
            .unwrap()
            .slices
            .iter()
            .for_each(&mut check);
        let (run, _) = pi_run(&bench, h, InitialPolicy::FirstControl);
        for (_, it) in &run.iterates {
            it.slices.iter().for_each(&mut check);
        }
    }
    let pass = worst <= 1e-9;
    let detail = format!("{slices} slices, worst excess over the bound {worst:.2e}");
    report("a-priori bounds", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn semi_concavity_budget() {
    let bench = Benchmark::eikonal_cos();
    let mut ratios = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let scheme = default_scheme(&bench, h, 1.0);
        let solution = scheme.solve_hjb_direct().unwrap();
        let g = scheme.grid();
        let reach = (1.0 / g.spacing()).floor() as usize;
        let offsets: Vec<Vector> = (1..=reach)
            .map(|k| Vector::from_slice(&[k as f64 * g.spacing()]))
            .collect();
        let region = bench.measured_region(g, 1.0);
        ratios.push(
            semi_concavity_probe(&solution, &offsets, &region)
                .unwrap()
                .worst_ratio,
        );
    }
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = hi <= 10.0 && lo > 0.0 && hi / lo <= 2.0;
    let detail = format!(
        "worst ratios {ratios:.3?} for h = 0.1, 0.05, 0.025 (spread {:.2})",
        hi / lo
    );
    report("semi-concavity budget", pass, &detail);
    assert!(pass, "{detail}");
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn legendre_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let numeric = ConvexHamiltonian::new(2, |_, _, p| 0.5 * dot(p, p)).unwrap();
    let mut worst_transform: f64 = 0.0;
    for _ in 0..100 {
        let mu = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let l = legendre_transform_numeric(&numeric, 0.0, &[0.0, 0.0], &mu, None).unwrap();
        worst_transform = worst_transform.max((l - 0.5 * dot(&mu, &mu)).abs());
    }
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let p = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let mu = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let l = legendre_transform_numeric(&numeric, 0.0, &[0.0, 0.0], &mu, None).unwrap();
        worst_gap = worst_gap.max(dot(&p, &mu) - l - numeric.value(0.0, &[0.0, 0.0], &p));
    }

    // 𝓗 = p²/2, q = cos on [−π, π) against f = a, c = a²/2, a ∈ [−M, M]
    let m = 2.0;
    let modified = modify_hamiltonian(ConvexHamiltonian::half_square(1).unwrap(), m).unwrap();
    let mut spec = spec_for("eikonal-cos");
    spec.dynamics = DynamicsForm::Control;
    spec.running_cost = RunningCostForm::HalfSquare;
    spec.terminal_cost = TerminalCostForm::Cos;
    spec.control_lower = -m;
    spec.control_upper = m;
    spec.control_samples = 81;
    assert_eq!(spec.topology, Topology::Periodic);
    let control = Benchmark::from_spec(spec).unwrap();
    let grid = control.grid(0.05).unwrap();
    let params = SchemeParams::resolve(
        grid.spacing(),
        None,
        Some(modified.viscosity()),
        1.0,
        modified.m2,
        1,
    )
    .unwrap();
    let problem = GeneralizedProblem::new(&modified, grid.clone(), params, |x| x[0].cos()).unwrap();
    let run = generalized_pi(&problem, None, 50, 1e-12).unwrap();
    let scheme = Scheme::new(&control.problem, grid.clone(), params).unwrap();
    let all: Vec<usize> = (0..grid.len()).collect();
    let control_run = run_policy_iteration(&scheme, &all, &PIConfig::default()).unwrap();
    let distance =
        to_backward_time(run.final_iterate()).sup_distance(control_run.final_iterate(), &all);
    let gradient = run.max_gradient.iter().copied().fold(0.0, f64::max);

    let pass = worst_transform <= 1e-3 && worst_gap <= 1e-3 && distance <= 2e-2;
    let detail = format!(
        "transform error {worst_transform:.1e} on 100 probes, worst Fenchel-Young gap {worst_gap:.1e} on 10^4 probes, \
         generalized vs control PI {distance:.1e} (max gradient {gradient:.3} <= M = {m})"
    );
    report("Legendre consistency", pass, &detail);
    assert!(pass, "{detail}");
    assert!(gradient <= m);
}

#[test]
fn rollout_matches_value() {
    let mut worst_c: f64 = 0.0;
    let mut details = Vec::new();
    for name in ["eikonal-cos", "quadratic-lq"] {
        let bench = Benchmark::by_name(name).unwrap();
        for h in [0.1, 0.05, 0.025] {
            let (run, _) = pi_run(&bench, h, InitialPolicy::ArgminCost);
            let solution = run.final_iterate();
            let policies = solution.policy_slices.as_ref().unwrap();
            let grid = solution.grid().clone();
            let params = solution.params;
            let region = bench.measured_region(&grid, 1.0);
            let mut c: f64 = 0.0;
            for k in 0..10 {
                let index = region[k * (region.len() - 1) / 9];
                let x = grid.coords(index);
                let dt = params.tau;
                let cost = bench.problem.rollout_cost(policies, 0.0, &x, dt).unwrap();
                let gap = (cost - solution.initial().values()[index]).abs();
                c = c.max(gap / (params.h + params.tau + dt));
            }
            worst_c = worst_c.max(c);
            details.push(format!("{name} h={:.3}: C={c:.3}", grid.spacing()));
        }
    }
    let pass = worst_c <= 10.0;
    let detail = format!("fitted C {worst_c:.3} ({})", details.join(", "));
    report("rollout/value consistency", pass, &detail);
    assert!(pass, "{detail}");
}

fn run_cli(mode: &str, config: &Path, out: &Path, threads: usize) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_hjbpi"))
        .args([mode, "--config"])
        .arg(config)
        .arg("--output")
        .arg(out)
        .args(["--threads", &threads.to_string(), "--seed", "11"])
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn deterministic_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("eik.toml");
    std::fs::write(
        &config,
        "mode = \"pi\"\nbenchmark = \"eikonal-cos\"\n[scheme]\nh = 0.1\nT = 1.0\n\
         [study]\nh_values = [0.4, 0.2, 0.1, 0.05]\n\
         [probes]\npolicy_points = [[0.0, 1.5707963267948966]]\nsemi_concavity_h = [0.2, 0.1]\npolicy_h = [0.2, 0.1]\n",
    )
    .unwrap();
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for mode in [
        "solve",
        "pi",
        "h-study",
        "tau-study",
        "legendre-pi",
        "probes",
    ] {
        let a = tmp.path().join(format!("{mode}-a"));
        let b = tmp.path().join(format!("{mode}-b"));
        assert_eq!(run_cli(mode, &config, &a, 1), 0, "{mode}");
        assert_eq!(run_cli(mode, &config, &b, 3), 0, "{mode}");
        let (fa, fb) = (dir_files(&a), dir_files(&b));
        compared += fa.len();
        if fa != fb {
            mismatches.push(mode);
        }
    }
    let pass = mismatches.is_empty();
    let detail = format!(
        "{compared} files over 6 modes, thread counts 1 and 3, mismatching modes {mismatches:?}"
    );
    report("deterministic outputs", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn linear_feedback_start_terminates_quickly() {
    // diagnostic companion of the geometric-convergence check: a smooth
    // initial feedback still reaches the fixed point in a handful of steps
    let bench = Benchmark::quadratic_lq();
    let (run, _) = pi_run(&bench, 0.05, InitialPolicy::LinearFeedback { gain: 1.0 });
    let tail = run.errors_to_fixed_point.get(2..).unwrap_or(&[]);
    println!(
        "INFO quadratic-lq from a = -x: errors {}",
        sci(&run.errors_to_fixed_point)
    );
    assert!(tail.iter().filter(|e| **e > 0.0).count() < 4);
}
