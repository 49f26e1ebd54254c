//! Experiment configuration: one TOML file describes the problem, the
//! solver, the feasibility schedule, and the replication protocol.

use std::path::{Path, PathBuf};

use randfeas::schedules::SampleSizeSchedule;
use serde::Deserialize;

use crate::HarnessError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "RANDFEAS_OUT_DIR";

/// Top-level experiment description, deserialized from TOML.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base seed; problem generation and every replica derive their random
    /// streams from it.
    pub seed: u64,
    /// Number of independent replicas (>= 1).
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Outer iteration budget.
    pub iterations: usize,
    /// Logging cadence; omitted means the solver default, 0 disables
    /// average/infeasibility logging.
    #[serde(default)]
    pub log_every: Option<usize>,
    /// Output directory; falls back to `RANDFEAS_OUT_DIR`, then `.`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Run replicas on one thread instead of concurrently. Output is
    /// byte-identical either way.
    #[serde(default)]
    pub serial: bool,
    /// Degenerate test mode: every replica reuses replica 0's streams, so
    /// all replicas are identical and standard deviations vanish.
    #[serde(default)]
    pub duplicate_streams: bool,
    /// Also write one CSV per replica next to the aggregate file.
    #[serde(default)]
    pub emit_replicas: bool,
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    /// Sample-size schedule for solvers that run feasibility passes.
    #[serde(default)]
    pub schedule: Option<SampleSizeSchedule>,
    /// Stepsize grid for the `grid-search` command (primal-dual baselines
    /// on SVM problems only).
    #[serde(default)]
    pub grid: Option<crate::grid::GridConfig>,
}

fn default_replicas() -> usize {
    1
}

/// Problem section.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Quadratically constrained quadratic program.
    Qcqp {
        n: usize,
        m: usize,
        /// 1 = planted optimum, 2 = strongly convex, 3 = convex.
        case: u8,
        /// Optimal value reference for gap reporting; case 1 supplies its
        /// own. Mutually exclusive with `reference_file`.
        #[serde(default)]
        f_star: Option<f64>,
        /// JSON file produced by `reference-solve` holding the optimal value.
        #[serde(default)]
        reference_file: Option<PathBuf>,
    },
    /// Soft-margin linear SVM.
    Svm {
        #[serde(default = "default_c_reg")]
        c_reg: f64,
        /// Synthetic separable planar data.
        #[serde(default)]
        synthetic: Option<SyntheticDataConfig>,
        /// CSV dataset on disk.
        #[serde(default)]
        dataset: Option<DatasetConfig>,
        #[serde(default)]
        f_star: Option<f64>,
        #[serde(default)]
        reference_file: Option<PathBuf>,
    },
}

fn default_c_reg() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDataConfig {
    pub count: usize,
    pub margin: f64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// Label column: header name.
    #[serde(default)]
    pub label: Option<String>,
    /// Label column: zero-based index (alternative to `label`).
    #[serde(default)]
    pub label_index: Option<usize>,
    pub positive_label: String,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Standardize features using training-split statistics.
    #[serde(default = "default_true")]
    pub standardize: bool,
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_true() -> bool {
    true
}

/// Solver section.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverConfig {
    /// Gradient method, adaptive stepsize targeting accuracy `eps`.
    GradAdaptive {
        eps: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// Gradient method, diminishing stepsizes.
    GradDiminishing {
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// Distance-over-weights subgradient method.
    Dows {
        r: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// Tamed distance-over-weights.
    Tdows {
        r: f64,
        #[serde(default)]
        p0: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// Simultaneous primal-dual baseline.
    ArrowHurwicz { eta_primal: f64, eta_dual: f64 },
    /// Alternating primal-dual baseline.
    AltGda { eta_primal: f64, eta_dual: f64 },
}

fn default_beta() -> f64 {
    1.0
}

impl SolverConfig {
    /// Whether the solver consumes a sample-size schedule.
    pub fn needs_schedule(&self) -> bool {
        !matches!(
            self,
            SolverConfig::ArrowHurwicz { .. } | SolverConfig::AltGda { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverConfig::GradAdaptive { .. } => "grad-adaptive",
            SolverConfig::GradDiminishing { .. } => "grad-diminishing",
            SolverConfig::Dows { .. } => "dows",
            SolverConfig::Tdows { .. } => "tdows",
            SolverConfig::ArrowHurwicz { .. } => "arrow-hurwicz",
            SolverConfig::AltGda { .. } => "alt-gda",
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML config file.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            context: format!("reading config {}", path.display()),
            source,
        })?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| HarnessError::Config {
                message: format!("{}: {e}", path.display()),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |message: String| Err(HarnessError::Config { message });
        if self.replicas == 0 {
            return fail("replicas must be at least 1".into());
        }
        if self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        match &self.problem {
            ProblemConfig::Qcqp {
                n,
                m,
                case,
                f_star,
                reference_file,
            } => {
                if *n == 0 || *m == 0 {
                    return fail("qcqp needs n >= 1 and m >= 1".into());
                }
                if !(1..=3).contains(case) {
                    return fail(format!("qcqp case must be 1, 2, or 3, got {case}"));
                }
                if f_star.is_some() && reference_file.is_some() {
                    return fail("give at most one of f_star and reference_file".into());
                }
            }
            ProblemConfig::Svm {
                c_reg,
                synthetic,
                dataset,
                f_star,
                reference_file,
            } => {
                if !(c_reg.is_finite() && *c_reg > 0.0) {
                    return fail(format!("c_reg must be positive, got {c_reg}"));
                }
                match (synthetic, dataset) {
                    (Some(_), Some(_)) | (None, None) => {
                        return fail(
                            "svm needs exactly one of [problem.synthetic] and [problem.dataset]"
                                .into(),
                        );
                    }
                    (Some(s), None) => {
                        if s.count < 2 {
                            return fail("synthetic count must be at least 2".into());
                        }
                        if !(s.margin.is_finite() && s.margin > 0.0) {
                            return fail(format!("margin must be positive, got {}", s.margin));
                        }
                        if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
                            return fail("train_fraction must lie in (0, 1)".into());
                        }
                    }
                    (None, Some(d)) => {
                        if d.label.is_some() == d.label_index.is_some() {
                            return fail(
                                "dataset needs exactly one of label and label_index".into(),
                            );
                        }
                        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
                            return fail("train_fraction must lie in (0, 1)".into());
                        }
                    }
                }
                if f_star.is_some() && reference_file.is_some() {
                    return fail("give at most one of f_star and reference_file".into());
                }
            }
        }
        match &self.solver {
            SolverConfig::GradAdaptive { eps, beta } => {
                check_positive("eps", *eps)?;
                check_beta(*beta)?;
            }
            SolverConfig::GradDiminishing { beta } => check_beta(*beta)?,
            SolverConfig::Dows { r, beta } => {
                check_positive("r", *r)?;
                check_beta(*beta)?;
            }
            SolverConfig::Tdows { r, p0, beta } => {
                check_positive("r", *r)?;
                if !(p0.is_finite() && *p0 >= 0.0) {
                    return fail(format!("p0 must be nonnegative, got {p0}"));
                }
                check_beta(*beta)?;
            }
            SolverConfig::ArrowHurwicz {
                eta_primal,
                eta_dual,
            }
            | SolverConfig::AltGda {
                eta_primal,
                eta_dual,
            } => {
                check_positive("eta_primal", *eta_primal)?;
                if !(eta_dual.is_finite() && *eta_dual >= 0.0) {
                    return fail(format!("eta_dual must be nonnegative, got {eta_dual}"));
                }
            }
        }
        match &self.schedule {
            Some(schedule) => {
                if !self.solver.needs_schedule() {
                    return fail(format!(
                        "solver {} does not take a [schedule] section",
                        self.solver.name()
                    ));
                }
                schedule.validate().map_err(|e| HarnessError::Config {
                    message: format!("schedule: {e}"),
                })?;
            }
            None => {
                if self.solver.needs_schedule() {
                    return fail(format!(
                        "solver {} requires a [schedule] section",
                        self.solver.name()
                    ));
                }
            }
        }
        if let Some(grid) = &self.grid {
            if self.solver.needs_schedule() {
                return fail(format!(
                    "[grid] only applies to the primal-dual baselines, not {}",
                    self.solver.name()
                ));
            }
            if !matches!(self.problem, ProblemConfig::Svm { .. }) {
                return fail("[grid] search needs an svm problem".into());
            }
            grid.validate()?;
        }
        Ok(())
    }

    /// Resolved output directory: config value, then the environment
    /// variable, then the current directory.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(dir) = &self.output_dir {
            return dir.clone();
        }
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from(".")
    }
}

fn check_positive(name: &str, value: f64) -> Result<(), HarnessError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(HarnessError::Config {
            message: format!("{name} must be positive, got {value}"),
        });
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<(), HarnessError> {
    if !(beta.is_finite() && beta > 0.0 && beta < 2.0) {
        return Err(HarnessError::Config {
            message: format!("beta must lie in (0, 2), got {beta}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const QCQP_EXAMPLE: &str = r#"
        seed = 42
        replicas = 5
        iterations = 1000

        [problem]
        kind = "qcqp"
        n = 10
        m = 100
        case = 1

        [solver]
        kind = "grad-adaptive"
        eps = 1e-2

        [schedule]
        type = "power"
        p = 2.0
    "#;

    #[test]
    fn qcqp_example_parses() {
        let config: ExperimentConfig = toml::from_str(QCQP_EXAMPLE).unwrap();
        config.validate().unwrap();
        assert_eq!(config.replicas, 5);
        assert!(matches!(
            config.problem,
            ProblemConfig::Qcqp { n: 10, m: 100, case: 1, .. }
        ));
        assert!(config.schedule.is_some());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_path() {
        let bad = QCQP_EXAMPLE.replace("replicas = 5", "replicas = 5\nbogus_key = 1");
        let err = toml::from_str::<ExperimentConfig>(&bad).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn schedule_is_mandatory_for_sampling_solvers() {
        let mut config: ExperimentConfig = toml::from_str(QCQP_EXAMPLE).unwrap();
        config.schedule = None;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("requires a [schedule]"), "{err}");
    }

    #[test]
    fn baselines_reject_schedule_sections() {
        let text = QCQP_EXAMPLE.replace(
            "kind = \"grad-adaptive\"\n        eps = 1e-2",
            "kind = \"arrow-hurwicz\"\n        eta_primal = 0.1\n        eta_dual = 0.1",
        );
        let config: ExperimentConfig = toml::from_str(&text).unwrap();
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("does not take"), "{err}");
    }

    #[test]
    fn svm_requires_exactly_one_data_source() {
        let text = r#"
            seed = 1
            iterations = 10

            [problem]
            kind = "svm"

            [solver]
            kind = "dows"
            r = 0.1

            [schedule]
            type = "constant"
            n = 50
        "#;
        let config: ExperimentConfig = toml::from_str(text).unwrap();
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("exactly one of"), "{err}");
    }

    #[test]
    fn invalid_case_number_is_rejected() {
        let text = QCQP_EXAMPLE.replace("case = 1", "case = 7");
        let config: ExperimentConfig = toml::from_str(&text).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn output_dir_falls_back_to_dot() {
        let config: ExperimentConfig = toml::from_str(QCQP_EXAMPLE).unwrap();
        // The environment variable may be set by the surrounding shell; only
        // assert the config-file override wins.
        let mut with_dir = config.clone();
        with_dir.output_dir = Some(PathBuf::from("/tmp/somewhere"));
        assert_eq!(with_dir.output_dir(), PathBuf::from("/tmp/somewhere"));
    }
}
