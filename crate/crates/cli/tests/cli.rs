use std::path::Path;
use std::process::{Command, Output};

use hjbpi::config::ConfigError;
use hjbpi::output::parse_summary;
use hjbpi::{parse_config, serialize_config, RunError};
use hjbpi_core::Error;
use proptest::prelude::*;

fn run(mode: &str, config_text: &str, dir: &Path) -> Output {
    let config = dir.join("config.toml");
    std::fs::write(&config, config_text).unwrap();
    Command::new(env!("CARGO_BIN_EXE_hjbpi"))
        .args([mode, "--config"])
        .arg(&config)
        .arg("--output")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn summary_value(dir: &Path, key: &str) -> Option<String> {
    let text = std::fs::read_to_string(dir.join("out/summary.txt")).ok()?;
    parse_summary(&text)
        .into_iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v)
}

#[test]
fn solve_on_zero_writes_zeros() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "solve",
        "mode = \"solve\"\nbenchmark = \"zero\"\n[scheme]\nh = 0.1\nT = 1.0\n",
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut reader = csv::Reader::from_path(tmp.path().join("out/solution.csv")).unwrap();
    let value = reader
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == "value")
        .unwrap();
    let mut rows = 0;
    for record in reader.records() {
        let v: f64 = record.unwrap()[value].parse().unwrap();
        assert_eq!(v, 0.0);
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn pi_on_quadratic_reports_a_contraction() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "pi",
        "mode = \"pi\"\nbenchmark = \"quadratic-lq\"\n[scheme]\nh = 0.05\nT = 1.0\n",
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rho = summary_value(tmp.path(), "rho").unwrap();
    let status = summary_value(tmp.path(), "fit_status").unwrap_or_default();
    let parsed: Option<f64> = rho.parse().ok();
    assert!(
        matches!(parsed, Some(r) if r <= 0.75),
        "rho = {rho} ({status})"
    );
}

#[test]
fn cfl_violation_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "solve",
        "mode = \"solve\"\nbenchmark = \"eikonal-cos\"\n[scheme]\nh = 0.1\nT = 1.0\ntau = 0.2\n",
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("CFL"), "{err}");
}

#[test]
fn unknown_key_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "solve",
        "mode = \"solve\"\nbenchmark = \"zero\"\nspeed = 3\n[scheme]\nh = 0.1\nT = 1.0\n",
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("speed"));
}

#[test]
fn missing_config_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hjbpi"))
        .args(["solve", "--config"])
        .arg(tmp.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_csv_has_a_header() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "probes",
        "mode = \"probes\"\nbenchmark = \"eikonal-cos\"\n[scheme]\nh = 0.2\nT = 1.0\n\
         [probes]\nsemi_concavity_h = [0.2, 0.1]\npolicy_h = [0.2, 0.1]\n",
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut seen = 0;
    for entry in std::fs::read_dir(tmp.path().join("out")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let text = std::fs::read_to_string(&path).unwrap();
            let first = text.lines().next().unwrap_or_default();
            assert!(
                first
                    .chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_alphabetic()),
                "{path:?}"
            );
            seen += 1;
        }
    }
    assert!(seen >= 3);
}

#[test]
fn failures_map_to_exit_codes() {
    let blowup = RunError::Core(Error::Blowup {
        time: 0.5,
        index: 3,
        value: 1e9,
    });
    assert_eq!(blowup.exit_code(), 3);
    let breach = RunError::Core(Error::Monotonicity {
        iteration: 4,
        worst: 1e-6,
    });
    assert_eq!(breach.exit_code(), 4);
    assert_eq!(RunError::Invariant("a-priori bound".into()).exit_code(), 4);
    assert_eq!(
        RunError::Config(ConfigError::Invalid("h".into())).exit_code(),
        2
    );
}

fn config_text() -> impl Strategy<Value = String> {
    let modes = prop::sample::select(vec![
        "solve",
        "pi",
        "h-study",
        "tau-study",
        "legendre-pi",
        "probes",
    ]);
    let benches =
        prop::sample::select(vec!["zero", "eikonal-cos", "transport-sin", "quadratic-lq"]);
    let policies = prop_oneof![
        Just("\"first-control\"".to_owned()),
        Just("\"argmin-cost\"".to_owned()),
        (0.1f64..3.0).prop_map(|g| format!("{{ linear-feedback = {{ gain = {g} }} }}")),
    ];
    (
        modes,
        benches,
        0.03f64..0.4,
        0.2f64..2.0,
        0..=i64::MAX as u64,
        policies,
        1usize..200,
        prop::option::of(1usize..16),
        prop::collection::vec(0.02f64..0.5, 4..6).prop_map(|mut hs| {
            hs.sort_by(|a, b| b.total_cmp(a));
            hs.dedup();
            hs
        }),
    )
        .prop_map(
            |(mode, bench, h, horizon, seed, policy, iters, threads, hs)| {
                let threads = threads
                    .map(|k| format!("threads = {k}\n"))
                    .unwrap_or_default();
                format!(
                    "mode = \"{mode}\"\nbenchmark = \"{bench}\"\nseed = {seed}\n{threads}\
                 [scheme]\nh = {h}\nT = {horizon}\n\
                 [pi]\ninitial_policy = {policy}\nmax_iterations = {iters}\n\
                 [study]\nh_values = {hs:?}\n"
                )
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn configs_round_trip(text in config_text()) {
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&serialize_config(&cfg)).unwrap();
        prop_assert_eq!(again, cfg);
    }
}
