//! Experiment configuration: a TOML document naming a benchmark (or an
//! inline problem), the scheme parameters and per-mode settings.
//!
//! ```toml
//! mode = "pi"
//! benchmark = "eikonal-cos"
//!
//! [scheme]
//! h = 0.1
//! T = 1.0
//! ```
//!
//! [`parse_config`] applies every default, so the returned value serializes
//! to a complete document that parses back to itself.

use std::fmt;
use std::path::PathBuf;

use hjbpi_core::legendre::{modify_hamiltonian, ConvexHamiltonian};
use hjbpi_core::pi::InitialPolicy;
use hjbpi_core::{validate_cfl, Benchmark, ProblemSpec, SchemeParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Pi,
    HStudy,
    TauStudy,
    LegendrePi,
    Probes,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Solve,
        Mode::Pi,
        Mode::HStudy,
        Mode::TauStudy,
        Mode::LegendrePi,
        Mode::Probes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Pi => "pi",
            Mode::HStudy => "h-study",
            Mode::TauStudy => "tau-study",
            Mode::LegendrePi => "legendre-pi",
            Mode::Probes => "probes",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A catalog name or an inline problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BenchmarkChoice {
    Named(String),
    Inline(ProblemSpec),
}

impl BenchmarkChoice {
    pub fn build(&self) -> Result<Benchmark, ConfigError> {
        match self {
            BenchmarkChoice::Named(name) => Benchmark::by_name(name),
            BenchmarkChoice::Inline(spec) => Benchmark::from_spec(spec.clone()),
        }
        .map_err(|e| ConfigError::Invalid(format!("benchmark: {e}")))
    }

    pub fn label(&self) -> &str {
        match self {
            BenchmarkChoice::Named(name) => name,
            BenchmarkChoice::Inline(_) => "inline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    /// Nominal mesh size; the grid uses the largest spacing `≥ h` that
    /// divides the box.
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub viscosity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPolicyChoice {
    FirstControl,
    ArgminCost,
    LinearFeedback { gain: f64 },
}

impl InitialPolicyChoice {
    pub fn to_core(self) -> InitialPolicy {
        match self {
            InitialPolicyChoice::FirstControl => InitialPolicy::FirstControl,
            InitialPolicyChoice::ArgminCost => InitialPolicy::ArgminCost,
            InitialPolicyChoice::LinearFeedback { gain } => InitialPolicy::LinearFeedback { gain },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiSection {
    pub initial_policy: InitialPolicyChoice,
    pub max_iterations: usize,
    pub stop_tolerance: f64,
    pub record_every: usize,
    /// Iterations skipped by the geometric-rate fit.
    pub burn_in: usize,
}

impl Default for PiSection {
    fn default() -> Self {
        PiSection {
            initial_policy: InitialPolicyChoice::ArgminCost,
            max_iterations: 100,
            stop_tolerance: 1e-12,
            record_every: 1,
            burn_in: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub h_values: Vec<f64>,
    /// Empty means `τ, τ/2, τ/4, τ/8` from the resolved scheme.
    pub tau_values: Vec<f64>,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            h_values: vec![0.2, 0.1, 0.05, 0.025],
            tau_values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianForm {
    /// `|p|² / 2`.
    HalfSquare,
    /// `√(1 + |p|²) − 1`.
    SoftNorm,
}

impl HamiltonianForm {
    pub fn build(self, dim: usize, analytic: bool) -> hjbpi_core::Result<ConvexHamiltonian> {
        fn dot(p: &[f64]) -> f64 {
            p.iter().map(|v| v * v).sum()
        }
        match self {
            HamiltonianForm::HalfSquare if analytic => ConvexHamiltonian::half_square(dim),
            HamiltonianForm::HalfSquare => ConvexHamiltonian::new(dim, |_, _, p| 0.5 * dot(p)),
            HamiltonianForm::SoftNorm => {
                ConvexHamiltonian::new(dim, |_, _, p| (1.0 + dot(p)).sqrt() - 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegendreSection {
    pub hamiltonian: HamiltonianForm,
    /// Gradient bound `M` of the solution.
    pub lipschitz_bound: f64,
    /// Use the numeric transform even when a closed form exists.
    pub numeric: bool,
    pub max_iterations: usize,
    pub stop_tolerance: f64,
    /// Samples of `[−M, M]` for the control-formulation comparison run.
    pub control_samples: usize,
}

impl Default for LegendreSection {
    fn default() -> Self {
        LegendreSection {
            hamiltonian: HamiltonianForm::HalfSquare,
            lipschitz_bound: 2.0,
            numeric: false,
            max_iterations: 50,
            stop_tolerance: 1e-12,
            control_samples: 81,
        }
    }
}

impl LegendreSection {
    pub fn modified(
        &self,
        dim: usize,
    ) -> hjbpi_core::Result<hjbpi_core::legendre::ModifiedHamiltonian> {
        modify_hamiltonian(
            self.hamiltonian.build(dim, !self.numeric)?,
            self.lipschitz_bound,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbesSection {
    /// Random ordered pairs for the comparison check.
    pub comparison_pairs: usize,
    pub semi_concavity_h: Vec<f64>,
    /// Offsets `k h` with `k h ≤ offset_range` enter the semi-concavity probe.
    pub offset_range: f64,
    /// `[t, x_0, …]` rows for the policy probe.
    pub policy_points: Vec<Vec<f64>>,
    pub policy_h: Vec<f64>,
    pub rollout_starts: usize,
}

impl Default for ProbesSection {
    fn default() -> Self {
        ProbesSection {
            comparison_pairs: 100,
            semi_concavity_h: vec![0.1, 0.05, 0.025],
            offset_range: 1.0,
            policy_points: Vec::new(),
            policy_h: vec![0.1, 0.05, 0.025],
            rollout_starts: 10,
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub benchmark: BenchmarkChoice,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; absent means all cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub scheme: SchemeSection,
    #[serde(default)]
    pub pi: PiSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub legendre: LegendreSection,
    #[serde(default)]
    pub probes: ProbesSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("scheme parameters violate the CFL condition: {0}")]
    Cfl(hjbpi_core::CflReport),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: ExperimentConfig = toml::from_str(text)?;
    raw.resolve()
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text)
}

pub fn serialize_config(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("config values are always representable")
}

impl ExperimentConfig {
    /// Fills `N`, `τ` and the τ-study list by the default rules and checks
    /// every parameter, including the CFL condition of the main run.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        let bench = self.benchmark.build()?;
        let grid = bench
            .grid(self.scheme.h)
            .map_err(|e| ConfigError::Invalid(format!("scheme.h: {e}")))?;
        let dim = grid.dim();
        let (f_sup, default_n) = if self.mode == Mode::LegendrePi {
            let m = self
                .legendre
                .modified(dim)
                .map_err(|e| ConfigError::Invalid(format!("legendre: {e}")))?;
            (m.m2, m.viscosity())
        } else {
            let f = bench.problem.f_sup_bound();
            (f, SchemeParams::default_viscosity(f))
        };
        let n = self.scheme.viscosity.unwrap_or(default_n);
        let params = SchemeParams::resolve(
            grid.spacing(),
            self.scheme.tau,
            Some(n),
            self.scheme.horizon,
            f_sup,
            dim,
        )
        .map_err(|e| ConfigError::Invalid(format!("scheme: {e}")))?;
        validate_cfl(&params, f_sup, dim).map_err(ConfigError::Cfl)?;
        self.scheme.viscosity = Some(params.viscosity);
        self.scheme.tau = Some(params.tau);

        if self.study.tau_values.is_empty() {
            self.study.tau_values = (0..4).map(|k| params.tau / f64::from(1u32 << k)).collect();
        }
        self.check_ranges()?;
        Ok(self)
    }

    fn check_ranges(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_owned()));
        let decreasing =
            |v: &[f64]| v.iter().all(|x| *x > 0.0) && v.windows(2).all(|w| w[1] < w[0]);
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        if self.pi.max_iterations == 0
            || self.pi.record_every == 0
            || !(self.pi.stop_tolerance > 0.0)
        {
            return bad("pi: max_iterations and record_every must be >= 1, stop_tolerance > 0");
        }
        if self.study.h_values.len() < 4 || !decreasing(&self.study.h_values) {
            return bad("study.h_values: need at least 4 positive, strictly decreasing values");
        }
        if self.study.tau_values.len() < 2 || !decreasing(&self.study.tau_values) {
            return bad("study.tau_values: need at least 2 positive, strictly decreasing values");
        }
        if !(self.legendre.lipschitz_bound > 0.0)
            || self.legendre.max_iterations == 0
            || !(self.legendre.stop_tolerance > 0.0)
            || self.legendre.control_samples < 2
        {
            return bad("legendre: lipschitz_bound > 0, max_iterations >= 1, stop_tolerance > 0, control_samples >= 2");
        }
        if self.probes.semi_concavity_h.is_empty()
            || self.probes.semi_concavity_h.iter().any(|h| !(*h > 0.0))
        {
            return bad("probes.semi_concavity_h: need positive values");
        }
        if self.probes.policy_h.is_empty() || !decreasing(&self.probes.policy_h) {
            return bad("probes.policy_h: need positive, strictly decreasing values");
        }
        if !(self.probes.offset_range > 0.0) {
            return bad("probes.offset_range must be positive");
        }
        Ok(())
    }

    /// Resolved scheme parameters on the benchmark grid.
    pub fn params(&self, spacing: f64) -> hjbpi_core::Result<SchemeParams> {
        SchemeParams::new(
            spacing,
            self.scheme.tau.expect("resolved config"),
            self.scheme.viscosity.expect("resolved config"),
            self.scheme.horizon,
        )
    }
}
