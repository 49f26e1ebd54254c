//! Long-run reference solves. Gap reporting for problems without a planted
//! optimum needs a trustworthy optimal value; this module computes one with
//! a deterministic method that shares no code path with the solvers under
//! test: projected gradient steps on the objective interleaved with full
//! deterministic cut sweeps over every constraint, tracking the best value
//! seen at (numerically) feasible points.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use randfeas::problems::qcqp::{QcqpInstance, BOX_HALF_WIDTH};
use randfeas::{max_violation, ConstrainedProblem, Vector};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ProblemConfig};
use crate::HarnessError;

/// Iterates at or below this violation count as feasible for value tracking.
pub const FEASIBLE_TOLERANCE: f64 = 1e-9;
/// Sweeps stop once the violation falls to this level.
const SWEEP_TOLERANCE: f64 = 1e-12;
/// Cap on consecutive sweeps per outer iteration.
const MAX_SWEEPS: usize = 200;

/// Stored reference value, serialized as JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceValue {
    /// Best objective value found at a feasible point.
    pub f_star: f64,
    /// Constraint violation at that point (at most [`FEASIBLE_TOLERANCE`]).
    pub infeasibility: f64,
    /// Outer iterations of the reference solve.
    pub iterations: usize,
    pub method: String,
    /// Problem identity (`problem_fingerprint`); guards against pairing a
    /// reference file with a different instance.
    pub fingerprint: String,
}

/// Identity of the generated instance: problem shape plus the seed. Solver
/// settings deliberately excluded — the instance only depends on these.
pub fn problem_fingerprint(config: &ExperimentConfig) -> String {
    match &config.problem {
        ProblemConfig::Qcqp { n, m, case, .. } => {
            format!("qcqp n={n} m={m} case={case} seed={}", config.seed)
        }
        ProblemConfig::Svm {
            c_reg,
            synthetic,
            dataset,
            ..
        } => match (synthetic, dataset) {
            (Some(s), _) => format!(
                "svm synthetic count={} margin={} train_fraction={} c_reg={c_reg} seed={}",
                s.count, s.margin, s.train_fraction, config.seed
            ),
            (_, Some(d)) => format!(
                "svm dataset path={} train_fraction={} c_reg={c_reg} seed={}",
                d.path.display(),
                d.train_fraction,
                config.seed
            ),
            _ => format!("svm c_reg={c_reg} seed={}", config.seed),
        },
    }
}

pub fn load_reference(path: &Path) -> Result<ReferenceValue, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::io(format!("reading reference {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config {
        message: format!("{}: {e}", path.display()),
    })
}

/// Loads a reference value and insists it belongs to `fingerprint`.
pub fn load_reference_checked(
    path: &Path,
    fingerprint: &str,
) -> Result<ReferenceValue, HarnessError> {
    let value = load_reference(path)?;
    if value.fingerprint != fingerprint {
        return Err(HarnessError::Config {
            message: format!(
                "reference {} was computed for {:?}, not {:?}",
                path.display(),
                value.fingerprint,
                fingerprint
            ),
        });
    }
    Ok(value)
}

pub fn save_reference(path: &Path, value: &ReferenceValue) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Config {
        message: format!("serializing reference: {e}"),
    })?;
    text.push('\n');
    crate::csvout::write_text(path, &text)
}

/// Full deterministic cut sweeps until the worst violation falls below
/// tolerance. Returns the number of sweeps spent.
fn restore_feasibility(
    problem: &ConstrainedProblem,
    x: &mut Vector,
) -> Result<usize, HarnessError> {
    let constraints = problem.constraints.as_ref();
    for sweep in 0..MAX_SWEEPS {
        if max_violation(constraints, x) <= SWEEP_TOLERANCE {
            return Ok(sweep);
        }
        for i in 0..constraints.len() {
            let violation = constraints.value(i, x);
            if violation <= 0.0 {
                continue;
            }
            let direction = constraints.subgradient(i, x);
            let norm_sq = direction.dot(&direction);
            if norm_sq <= 0.0 {
                return Err(HarnessError::Config {
                    message: format!(
                        "constraint {i} is violated with a zero subgradient; \
                         the instance is inconsistent"
                    ),
                });
            }
            *x = problem
                .easy_set
                .project(&x.add_scaled(-violation / norm_sq, &direction))?;
        }
    }
    Ok(MAX_SWEEPS)
}

/// Runs the reference solve for `iterations` outer steps and returns the
/// best feasible value. Deterministic: no randomness is consumed.
pub fn reference_solve(
    problem: &ConstrainedProblem,
    start: &Vector,
    iterations: usize,
) -> Result<(f64, f64, Vector), HarnessError> {
    if iterations == 0 {
        return Err(HarnessError::Config {
            message: "reference solve needs at least 1 iteration".into(),
        });
    }
    let objective = problem.objective.as_ref();
    let constraints = problem.constraints.as_ref();

    let mut x = problem.easy_set.project(start)?;
    restore_feasibility(problem, &mut x)?;

    // Base stepsize: 1/L when the smoothness constant is known, otherwise
    // a diameter-over-gradient estimate at the start.
    let base_step = match objective.smoothness() {
        Some(l) if l > 0.0 => 1.0 / l,
        _ => {
            let g0 = objective.subgradient(&x).norm();
            let scale = x.norm().max(1.0);
            scale / g0.max(1.0)
        }
    };

    let mut best_value = f64::INFINITY;
    let mut best_violation = f64::INFINITY;
    let mut best_point = x.clone();
    // Phase A holds the stepsize fixed to travel fast; phase B decays it as
    // 1/sqrt(t) so the alternation bias vanishes.
    let phase_a = iterations / 4;
    for t in 1..=iterations {
        let violation = max_violation(constraints, &x);
        if violation <= FEASIBLE_TOLERANCE {
            let value = objective.value(&x);
            if value < best_value {
                best_value = value;
                best_violation = violation;
                best_point = x.clone();
            }
        }
        let step = if t <= phase_a {
            base_step
        } else {
            base_step / (((t - phase_a) as f64).sqrt())
        };
        let gradient = objective.subgradient(&x);
        x = problem.easy_set.project(&x.add_scaled(-step, &gradient))?;
        restore_feasibility(problem, &mut x)?;
        if !x.is_finite() {
            return Err(HarnessError::Config {
                message: format!("reference solve diverged at iteration {t}"),
            });
        }
    }
    if !best_value.is_finite() {
        return Err(HarnessError::Config {
            message: "reference solve never reached a feasible point".into(),
        });
    }
    Ok((best_value, best_violation, best_point))
}

/// Interior-point solve of a quadratic instance: Newton's method on the
/// log-barrier of the functional constraints and the box, with the usual
/// geometric increase of the objective weight. Certifies the optimal value
/// to roughly `(m + 2n) / t_final`. Needs a strictly feasible start, which
/// the generator guarantees at the origin (offsets at least 1) or at the
/// planted point (slack at least 1).
pub fn barrier_solve_qcqp(
    instance: &QcqpInstance,
    iterations: usize,
) -> Result<(f64, f64, Vector), HarnessError> {
    let n = instance.objective_linear.dim();
    let m = instance.constraint_offsets.len();
    let rows_to_hessian = |rows: &[Vector]| -> DMatrix<f64> {
        // Symmetric generator rows M become the quadratic-form Hessian 2M.
        DMatrix::from_fn(n, n, |i, j| 2.0 * rows[i][j])
    };
    let objective_hessian = rows_to_hessian(&instance.objective_quad);
    let objective_linear = DVector::from_row_slice(instance.objective_linear.as_slice());
    let constraint_hessians: Vec<DMatrix<f64>> = instance
        .constraint_quads
        .iter()
        .map(|rows| rows_to_hessian(rows))
        .collect();
    let constraint_linears: Vec<DVector<f64>> = instance
        .constraint_linears
        .iter()
        .map(|u| DVector::from_row_slice(u.as_slice()))
        .collect();

    let objective = |x: &DVector<f64>| -> f64 {
        0.5 * (x.transpose() * &objective_hessian * x)[(0, 0)] + objective_linear.dot(x)
    };
    let constraint = |i: usize, x: &DVector<f64>| -> f64 {
        0.5 * (x.transpose() * &constraint_hessians[i] * x)[(0, 0)]
            + constraint_linears[i].dot(x)
            - instance.constraint_offsets[i]
    };
    let strictly_feasible = |x: &DVector<f64>| -> bool {
        x.iter().all(|v| v.abs() < BOX_HALF_WIDTH)
            && (0..m).all(|i| constraint(i, x) < 0.0)
    };

    let mut x = DVector::zeros(n);
    if !strictly_feasible(&x) {
        match &instance.planted {
            Some(planted) if strictly_feasible(&DVector::from_row_slice(planted.point.as_slice())) => {
                x = DVector::from_row_slice(planted.point.as_slice());
            }
            _ => {
                return Err(HarnessError::Config {
                    message: "no strictly feasible start for the barrier solve".into(),
                })
            }
        }
    }

    // Stop once the barrier duality gap certifies ~1e-11 accuracy.
    let total_constraints = (m + 2 * n) as f64;
    let target_gap = 1e-11;
    let mut t = 1.0;
    let mut newton_steps = 0usize;
    while total_constraints / t > target_gap && newton_steps < iterations {
        // Newton loop at fixed t.
        for _ in 0..60 {
            newton_steps += 1;
            let mut grad = &objective_hessian * &x * t + &objective_linear * t;
            let mut hess = &objective_hessian * t;
            for i in 0..m {
                let value = constraint(i, &x);
                let slack = -value; // > 0 strictly inside
                let cgrad = &constraint_hessians[i] * &x + &constraint_linears[i];
                grad += &cgrad / slack;
                hess += &constraint_hessians[i] / slack;
                hess += &cgrad * cgrad.transpose() / (slack * slack);
            }
            for j in 0..n {
                let hi = BOX_HALF_WIDTH - x[j];
                let lo = BOX_HALF_WIDTH + x[j];
                grad[j] += 1.0 / hi - 1.0 / lo;
                hess[(j, j)] += 1.0 / (hi * hi) + 1.0 / (lo * lo);
            }
            let direction = match hess.clone().cholesky() {
                Some(factor) => factor.solve(&(-&grad)),
                None => {
                    return Err(HarnessError::Config {
                        message: "barrier Hessian lost positive definiteness".into(),
                    })
                }
            };
            let decrement = -grad.dot(&direction);
            if decrement <= 2e-12 {
                break;
            }
            // Backtrack to stay strictly feasible and decrease the barrier.
            let barrier = |x: &DVector<f64>| -> f64 {
                let mut value = t * objective(x);
                for i in 0..m {
                    value -= (-constraint(i, x)).ln();
                }
                for j in 0..n {
                    value -= (BOX_HALF_WIDTH - x[j]).ln() + (BOX_HALF_WIDTH + x[j]).ln();
                }
                value
            };
            let current = barrier(&x);
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let candidate = &x + &direction * step;
                if strictly_feasible(&candidate)
                    && barrier(&candidate) <= current - 0.25 * step * decrement
                {
                    x = candidate;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        t *= 10.0;
    }

    let point = Vector::new(x.iter().copied().collect()).map_err(|e| HarnessError::Config {
        message: format!("barrier produced a non-finite point: {e}"),
    })?;
    let value = objective(&x);
    let violation = (0..m)
        .map(|i| constraint(i, &x).max(0.0))
        .fold(0.0, f64::max);
    Ok((value, violation, point))
}

/// Builds the instance described by the config and runs the reference
/// solve; the returned record carries the problem fingerprint.
pub fn reference_solve_for_config(
    config: &ExperimentConfig,
    iterations: usize,
) -> Result<ReferenceValue, HarnessError> {
    config.validate()?;
    // The solve computes f*; drop any configured reference so a config that
    // points at the file being (re)generated still works.
    let mut config = config.clone();
    match &mut config.problem {
        ProblemConfig::Qcqp {
            f_star,
            reference_file,
            ..
        }
        | ProblemConfig::Svm {
            f_star,
            reference_file,
            ..
        } => {
            *f_star = None;
            *reference_file = None;
        }
    }
    // Quadratic instances get the interior-point route (certified to
    // ~1e-11); anything else falls back to the oracle-only method.
    let (f_star, infeasibility, method) = match &config.problem {
        ProblemConfig::Qcqp { n, m, case, .. } => {
            let mut rng = crate::experiment::instance_stream(config.seed);
            let instance = randfeas::problems::qcqp::generate_qcqp(
                *n,
                *m,
                crate::experiment::qcqp_case(*case),
                &mut rng,
            )?;
            let (value, violation, _) = barrier_solve_qcqp(&instance, iterations)?;
            (
                value,
                violation,
                "interior-point barrier Newton on the generated instance",
            )
        }
        ProblemConfig::Svm { .. } => {
            let built = crate::experiment::build_problem(&config)?;
            let (value, violation, _) =
                reference_solve(&built.problem, &built.start, iterations)?;
            (
                value,
                violation,
                "projected gradient with full deterministic cut sweeps",
            )
        }
    };
    Ok(ReferenceValue {
        f_star,
        infeasibility,
        iterations,
        method: method.into(),
        fingerprint: problem_fingerprint(&config),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use randfeas::problems::qcqp::{generate_qcqp, qcqp_problem, QcqpCase};
    use randfeas::RandomSource;

    #[test]
    fn recovers_a_planted_optimum() {
        let mut rng = RandomSource::new(21, 0);
        let instance = generate_qcqp(6, 30, QcqpCase::KnownOptimum, &mut rng).unwrap();
        let planted = instance.planted.clone().unwrap();
        let problem = qcqp_problem(&instance);
        let start = Vector::zeros(6);
        let (value, violation, point) = reference_solve(&problem, &start, 3000).unwrap();
        assert!(violation <= FEASIBLE_TOLERANCE);
        assert!(
            (value - planted.value).abs() <= 1e-6,
            "reference {value} vs planted {}",
            planted.value
        );
        assert!(point.distance(&planted.point) <= 1e-2);
    }

    #[test]
    fn reference_file_round_trips_with_fingerprint_check() {
        let value = ReferenceValue {
            f_star: -1.25,
            infeasibility: 1e-12,
            iterations: 10,
            method: "test".into(),
            fingerprint: "qcqp n=2 m=3 case=3 seed=5".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reference.json");
        save_reference(&path, &value).unwrap();
        let loaded = load_reference_checked(&path, "qcqp n=2 m=3 case=3 seed=5").unwrap();
        assert_eq!(loaded.f_star, value.f_star);
        let err = load_reference_checked(&path, "qcqp n=9 m=9 case=1 seed=5").unwrap_err();
        assert!(err.to_string().contains("was computed for"), "{err}");
    }

    #[test]
    fn barrier_recovers_a_planted_optimum_tightly() {
        let mut rng = RandomSource::new(21, 0);
        let instance = generate_qcqp(6, 30, QcqpCase::KnownOptimum, &mut rng).unwrap();
        let planted = instance.planted.clone().unwrap();
        let (value, violation, point) = barrier_solve_qcqp(&instance, 100_000).unwrap();
        assert!(violation == 0.0, "barrier iterates stay strictly feasible");
        assert!(
            (value - planted.value).abs() <= 1e-8,
            "barrier {value} vs planted {}",
            planted.value
        );
        assert!(point.distance(&planted.point) <= 1e-4);
    }

    #[test]
    fn barrier_and_sweep_references_agree_on_a_convex_instance() {
        let mut rng = RandomSource::new(33, 0);
        let instance = generate_qcqp(5, 20, QcqpCase::Convex, &mut rng).unwrap();
        let problem = qcqp_problem(&instance);
        let (barrier_value, _, _) = barrier_solve_qcqp(&instance, 100_000).unwrap();
        let start = Vector::zeros(5);
        let (sweep_value, _, _) = reference_solve(&problem, &start, 20_000).unwrap();
        // The sweep route is the slower of the two; agreement at 1e-3 is
        // already strong evidence both target the same optimum.
        assert!(
            (barrier_value - sweep_value).abs() <= 1e-3,
            "barrier {barrier_value} vs sweeps {sweep_value}"
        );
        assert!(barrier_value <= sweep_value + 1e-9, "barrier is at least as tight");
    }

    #[test]
    fn solve_is_deterministic() {
        let mut rng = RandomSource::new(22, 0);
        let instance = generate_qcqp(4, 12, QcqpCase::Convex, &mut rng).unwrap();
        let problem = qcqp_problem(&instance);
        let start = Vector::zeros(4);
        let a = reference_solve(&problem, &start, 500).unwrap();
        let b = reference_solve(&problem, &start, 500).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
