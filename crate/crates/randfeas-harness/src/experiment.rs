//! Replica orchestration: build the problem once from the seed, run every
//! replica on its own random streams (serially or on scoped threads), and
//! aggregate the logged trajectories.

use randfeas::problems::dataset::{split, Dataset};
use randfeas::problems::qcqp::{generate_qcqp, qcqp_problem, QcqpCase};
use randfeas::problems::svm::{
    build_svm, classifier_from_point, generate_separable_2d, misclassification_error,
};
use randfeas::solvers::dows::{solve_dows_family, DowsSolverConfig, Taming};
use randfeas::solvers::gradient::{solve_gradient_feasibility, GradSolverConfig, StepMode};
use randfeas::{
    infeasibility, ConstrainedProblem, FeasibilityConfig, RandomSource, SampleSizeSchedule,
    SolverError, SolverOutput, SolverStreams, Vector,
};
use randfeas::baselines::{solve_primal_dual, PrimalDualConfig, PrimalDualMode};

use crate::config::{DatasetConfig, ExperimentConfig, ProblemConfig, SolverConfig};
use crate::HarnessError;

/// Random streams are laid out as `stream = scope * 16 + purpose`: scope 0
/// is problem construction, scope `i + 1` is replica `i`. Changing the
/// replica count therefore never shifts any other stream.
const STREAMS_PER_SCOPE: u64 = 16;

/// Purpose slots within a scope.
const PURPOSE_INSTANCE: u64 = 0;
const PURPOSE_DATA_SPLIT: u64 = 1;
const PURPOSE_CONSTRAINT_SAMPLING: u64 = 1;
const PURPOSE_SCHEDULE: u64 = 2;

fn problem_stream(seed: u64, purpose: u64) -> RandomSource {
    RandomSource::new(seed, purpose)
}

/// The instance-generation stream for a base seed (scope 0, purpose 0).
pub fn instance_stream(seed: u64) -> RandomSource {
    problem_stream(seed, PURPOSE_INSTANCE)
}

/// Maps the config's 1/2/3 case number onto the generator's enum.
pub fn qcqp_case(case: u8) -> QcqpCase {
    match case {
        1 => QcqpCase::KnownOptimum,
        2 => QcqpCase::StronglyConvex,
        _ => QcqpCase::Convex,
    }
}

/// Streams for one replica; `duplicate` collapses every replica onto
/// replica 0's streams (degenerate test mode with zero spread).
pub fn replica_streams(seed: u64, replica: usize, duplicate: bool) -> SolverStreams {
    let scope = if duplicate { 1 } else { replica as u64 + 1 };
    SolverStreams::new(
        RandomSource::new(seed, scope * STREAMS_PER_SCOPE + PURPOSE_CONSTRAINT_SAMPLING),
        RandomSource::new(seed, scope * STREAMS_PER_SCOPE + PURPOSE_SCHEDULE),
    )
}

/// Held-out data for classifier evaluation.
#[derive(Debug, Clone)]
pub struct SvmData {
    pub train: Dataset,
    pub test: Dataset,
    pub c_reg: f64,
}

/// A problem instance ready to run, with everything the reporting layer
/// needs alongside the oracles.
pub struct BuiltProblem {
    pub problem: ConstrainedProblem,
    /// Optimal value when known (planted, configured, or from a reference
    /// file); gaps are reported against it.
    pub f_star: Option<f64>,
    /// Planted optimizer, when the instance has one.
    pub optimum: Option<Vector>,
    pub start: Vector,
    /// Present for SVM problems; used for test-error reporting and grids.
    pub svm: Option<SvmData>,
}

/// Builds the problem exactly once from the base seed. Replica indices never
/// influence the instance.
pub fn build_problem(config: &ExperimentConfig) -> Result<BuiltProblem, HarnessError> {
    match &config.problem {
        ProblemConfig::Qcqp {
            n,
            m,
            case,
            f_star,
            reference_file,
        } => {
            let mut rng = instance_stream(config.seed);
            let instance = generate_qcqp(*n, *m, qcqp_case(*case), &mut rng)?;
            let problem = qcqp_problem(&instance);
            let f_star = match (&instance.planted, f_star, reference_file) {
                (Some(planted), _, _) => Some(planted.value),
                (None, Some(value), _) => Some(*value),
                (None, None, Some(path)) => Some(
                    crate::reference::load_reference_checked(
                        path,
                        &crate::reference::problem_fingerprint(config),
                    )?
                    .f_star,
                ),
                (None, None, None) => None,
            };
            let start = Vector::zeros(instance.objective_linear.dim());
            Ok(BuiltProblem {
                problem,
                f_star,
                optimum: instance.planted.map(|p| p.point),
                start,
                svm: None,
            })
        }
        ProblemConfig::Svm {
            c_reg,
            synthetic,
            dataset,
            f_star,
            reference_file,
        } => {
            let (train, test) = match (synthetic, dataset) {
                (Some(synth), None) => {
                    let mut gen_rng = problem_stream(config.seed, PURPOSE_INSTANCE);
                    let (features, labels) =
                        generate_separable_2d(synth.count, synth.margin, &mut gen_rng)?;
                    let data = Dataset { features, labels };
                    let mut split_rng = problem_stream(config.seed, PURPOSE_DATA_SPLIT);
                    split(&data, synth.train_fraction, &mut split_rng)
                        .map_err(|e| HarnessError::Config { message: e.to_string() })?
                }
                (None, Some(spec)) => load_dataset(config.seed, spec)?,
                // validate() rules the other combinations out.
                _ => unreachable!("validated config has exactly one data source"),
            };
            let problem = build_svm(&train.features, &train.labels, *c_reg)?;
            let f_star = match (f_star, reference_file) {
                (Some(value), _) => Some(*value),
                (None, Some(path)) => Some(
                    crate::reference::load_reference_checked(
                        path,
                        &crate::reference::problem_fingerprint(config),
                    )?
                    .f_star,
                ),
                (None, None) => None,
            };
            let start = Vector::zeros(problem.dim());
            Ok(BuiltProblem {
                problem,
                f_star,
                optimum: None,
                start,
                svm: Some(SvmData {
                    train,
                    test,
                    c_reg: *c_reg,
                }),
            })
        }
    }
}

fn load_dataset(seed: u64, spec: &DatasetConfig) -> Result<(Dataset, Dataset), HarnessError> {
    use randfeas::problems::dataset::{load_split_standardize, CsvOptions, LabelColumn};
    let label = match (&spec.label, spec.label_index) {
        (Some(name), None) => LabelColumn::Name(name.clone()),
        (None, Some(index)) => LabelColumn::Index(index),
        _ => unreachable!("validated config has exactly one label selector"),
    };
    let options = CsvOptions {
        label,
        positive_label: spec.positive_label.clone(),
        has_header: spec.has_header,
    };
    let mut split_rng = problem_stream(seed, PURPOSE_DATA_SPLIT);
    load_split_standardize(
        &spec.path,
        &options,
        spec.train_fraction,
        spec.standardize,
        &mut split_rng,
    )
    .map_err(|e| HarnessError::Config { message: e.to_string() })
}

/// Runs one replica of the configured solver.
pub fn run_replica(
    built: &BuiltProblem,
    config: &ExperimentConfig,
    replica: usize,
) -> Result<SolverOutput, SolverError> {
    let mut streams = replica_streams(config.seed, replica, config.duplicate_streams);
    let feasibility = |beta: f64| FeasibilityConfig {
        beta,
        ..FeasibilityConfig::default()
    };
    let schedule = || -> SampleSizeSchedule {
        config
            .schedule
            .clone()
            .expect("validated config carries a schedule for sampling solvers")
    };
    let gradient = |mode: StepMode, beta: f64, streams: &mut SolverStreams| {
        let objective = built.problem.objective.as_ref();
        let (smoothness, strong_convexity) =
            match (objective.smoothness(), objective.strong_convexity()) {
                (Some(l), Some(mu)) => (l, mu),
                _ => {
                    return Err(SolverError::Core(randfeas::CoreError::InvalidParameter {
                        name: "solver",
                        reason: "gradient solvers need known smoothness and strong convexity \
                                 (qcqp case 1 or 2)"
                            .into(),
                    }))
                }
            };
        let solver_config = GradSolverConfig {
            mode,
            smoothness,
            strong_convexity,
            iterations: config.iterations,
            schedule: schedule(),
            feasibility: feasibility(beta),
            log_every: config.log_every,
            record_vectors: false,
        };
        solve_gradient_feasibility(&built.problem, &solver_config, &built.start, streams)
    };
    match &config.solver {
        SolverConfig::GradAdaptive { eps, beta } => {
            gradient(StepMode::AdaptiveEps { eps: *eps }, *beta, &mut streams)
        }
        SolverConfig::GradDiminishing { beta } => {
            gradient(StepMode::Diminishing, *beta, &mut streams)
        }
        SolverConfig::Dows { r, beta } => {
            let solver_config = DowsSolverConfig {
                taming: Taming::Off,
                initial_distance: *r,
                iterations: config.iterations,
                schedule: schedule(),
                feasibility: feasibility(*beta),
                log_every: config.log_every,
                record_vectors: false,
            };
            solve_dows_family(&built.problem, &solver_config, &built.start, &mut streams)
        }
        SolverConfig::Tdows { r, p0, beta } => {
            let solver_config = DowsSolverConfig {
                taming: Taming::On { p0: *p0 },
                initial_distance: *r,
                iterations: config.iterations,
                schedule: schedule(),
                feasibility: feasibility(*beta),
                log_every: config.log_every,
                record_vectors: false,
            };
            solve_dows_family(&built.problem, &solver_config, &built.start, &mut streams)
        }
        SolverConfig::ArrowHurwicz {
            eta_primal,
            eta_dual,
        }
        | SolverConfig::AltGda {
            eta_primal,
            eta_dual,
        } => {
            let mode = match &config.solver {
                SolverConfig::ArrowHurwicz { .. } => PrimalDualMode::ArrowHurwicz,
                _ => PrimalDualMode::AltGda,
            };
            let solver_config = PrimalDualConfig {
                mode,
                eta_primal: *eta_primal,
                eta_dual: *eta_dual,
                iterations: config.iterations,
                log_every: config.log_every,
                record_vectors: false,
            };
            solve_primal_dual(&built.problem, &solver_config, &built.start)
        }
    }
}

/// One surviving replica: its id, full solver output, and (for SVM) the
/// held-out misclassification rate of the averaged classifier.
pub struct ReplicaRun {
    pub id: usize,
    pub output: SolverOutput,
    pub test_error: Option<f64>,
}

/// A replica excluded from aggregation because the solver diverged.
#[derive(Debug, Clone)]
pub struct DivergedReplica {
    pub id: usize,
    pub iteration: usize,
    pub reason: String,
}

/// One aggregate CSV row: statistics across surviving replicas at a logged
/// iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub k: usize,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub mean_infeas: f64,
    pub std_infeas: f64,
    pub mean_step: f64,
    /// Mean sample count across replicas (replicas draw independently).
    pub n_k: f64,
}

/// One per-replica CSV row at a logged iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaRow {
    pub k: usize,
    pub gap: f64,
    pub infeas: f64,
    pub step: f64,
    pub n_k: f64,
}

/// Everything a run produces, before any file is written.
pub struct ExperimentOutcome {
    pub f_star: Option<f64>,
    pub aggregate: Vec<AggregateRow>,
    pub survivors: Vec<ReplicaRun>,
    pub diverged: Vec<DivergedReplica>,
}

impl ExperimentOutcome {
    /// Gap of a value against the reference optimum: `|f - f*|` when the
    /// optimum is known, the raw value otherwise.
    pub fn gap(&self, value: f64) -> f64 {
        match self.f_star {
            Some(f_star) => (value - f_star).abs(),
            None => value,
        }
    }

    /// Logged rows of one surviving replica, gap-adjusted like the
    /// aggregate.
    pub fn replica_rows(&self, run: &ReplicaRun) -> Vec<ReplicaRow> {
        run.output
            .trace
            .records
            .iter()
            .filter_map(|record| {
                let average = record.average_objective?;
                Some(ReplicaRow {
                    k: record.k,
                    gap: self.gap(average),
                    infeas: record.infeasibility.unwrap_or(f64::NAN),
                    step: record.stepsize,
                    n_k: record.samples as f64,
                })
            })
            .collect()
    }
}

/// Runs every replica and aggregates. Divergent replicas are reported and
/// excluded; only a fully divergent run is an error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    let built = build_problem(config)?;
    run_experiment_on(&built, config)
}

/// Like [`run_experiment`] for an already-built problem (grid search and
/// tests reuse instances).
pub fn run_experiment_on(
    built: &BuiltProblem,
    config: &ExperimentConfig,
) -> Result<ExperimentOutcome, HarnessError> {
    let results: Vec<Result<SolverOutput, SolverError>> = if config.serial {
        (0..config.replicas)
            .map(|replica| run_replica(built, config, replica))
            .collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..config.replicas)
                .map(|replica| scope.spawn(move || run_replica(built, config, replica)))
                .collect();
            handles
                .into_iter()
                .map(|handle| handle.join().expect("replica thread panicked"))
                .collect()
        })
    };

    let mut survivors = Vec::new();
    let mut diverged = Vec::new();
    for (id, result) in results.into_iter().enumerate() {
        match result {
            Ok(output) => {
                let test_error = match &built.svm {
                    Some(svm) => {
                        let dim = svm.train.feature_dim();
                        let (weights, bias) = classifier_from_point(&output.final_average, dim);
                        Some(misclassification_error(
                            &weights,
                            bias,
                            &svm.test.features,
                            &svm.test.labels,
                        )?)
                    }
                    None => None,
                };
                survivors.push(ReplicaRun {
                    id,
                    output,
                    test_error,
                });
            }
            Err(SolverError::Diverged {
                iteration, reason, ..
            }) => diverged.push(DivergedReplica {
                id,
                iteration,
                reason,
            }),
            Err(other) => return Err(other.into()),
        }
    }
    if survivors.is_empty() {
        return Err(HarnessError::AllReplicasDiverged {
            replicas: config.replicas,
            first_iteration: diverged.first().map_or(0, |d| d.iteration),
        });
    }

    let mut outcome = ExperimentOutcome {
        f_star: built.f_star,
        aggregate: Vec::new(),
        survivors,
        diverged,
    };
    outcome.aggregate = aggregate_rows(&outcome)?;
    Ok(outcome)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

fn aggregate_rows(outcome: &ExperimentOutcome) -> Result<Vec<AggregateRow>, HarnessError> {
    let per_replica: Vec<Vec<ReplicaRow>> = outcome
        .survivors
        .iter()
        .map(|run| outcome.replica_rows(run))
        .collect();
    aggregate_from_rows(&per_replica)
}

/// Aggregates per-replica logged rows into mean/std rows. All replicas must
/// share the same logged iterations.
pub fn aggregate_from_rows(
    per_replica: &[Vec<ReplicaRow>],
) -> Result<Vec<AggregateRow>, HarnessError> {
    if per_replica.is_empty() {
        return Err(HarnessError::Config {
            message: "no replicas to aggregate".into(),
        });
    }
    let logged = per_replica[0].len();
    for rows in per_replica {
        if rows.len() != logged
            || rows
                .iter()
                .zip(&per_replica[0])
                .any(|(a, b)| a.k != b.k)
        {
            return Err(HarnessError::Config {
                message: "replicas disagree on logged iterations".into(),
            });
        }
    }
    Ok((0..logged)
        .map(|row| {
            let column = |f: fn(&ReplicaRow) -> f64| -> Vec<f64> {
                per_replica.iter().map(|rows| f(&rows[row])).collect()
            };
            let (mean_gap, std_gap) = mean_std(&column(|r| r.gap));
            let (mean_infeas, std_infeas) = mean_std(&column(|r| r.infeas));
            let (mean_step, _) = mean_std(&column(|r| r.step));
            let (n_k, _) = mean_std(&column(|r| r.n_k));
            AggregateRow {
                k: per_replica[0][row].k,
                mean_gap,
                std_gap,
                mean_infeas,
                std_infeas,
                mean_step,
                n_k,
            }
        })
        .collect())
}

/// Final infeasibility of each surviving replica's averaged iterate.
pub fn final_infeasibilities(built: &BuiltProblem, outcome: &ExperimentOutcome) -> Vec<f64> {
    outcome
        .survivors
        .iter()
        .map(|run| infeasibility(built.problem.constraints.as_ref(), &run.output.final_average))
        .collect()
}
