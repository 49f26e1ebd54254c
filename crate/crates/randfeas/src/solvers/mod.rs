//! Outer solvers that alternate objective steps with randomized feasibility
//! passes.
//!
//! Two families are implemented: a gradient method for smooth objectives with
//! known curvature constants ([`gradient::solve_gradient_feasibility`]) and a
//! parameter-free distance-over-weights subgradient method with optional
//! taming ([`dows::solve_dows_family`]). Both share the trace and output
//! types defined here.

pub mod dows;
pub mod gradient;

use std::time::Instant;

use thiserror::Error;

use crate::error::CoreError;
use crate::feasibility::FeasibilityError;
use crate::problem::{infeasibility, ConstrainedProblem};
use crate::rng::RandomSource;
use crate::vector::Vector;

/// Independent random streams a solver consumes, one per purpose, so that
/// e.g. changing the sample-size schedule never perturbs constraint sampling.
#[derive(Debug, Clone)]
pub struct SolverStreams {
    /// Feeds the uniform constraint sampling inside feasibility passes.
    pub constraint_sampling: RandomSource,
    /// Feeds the sample-size schedule draws.
    pub schedule: RandomSource,
}

impl SolverStreams {
    pub fn new(constraint_sampling: RandomSource, schedule: RandomSource) -> Self {
        SolverStreams {
            constraint_sampling,
            schedule,
        }
    }
}

/// One row of a solver trace, describing outer iterate `k`.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// Outer iteration index, starting at 1.
    pub k: usize,
    /// Objective value at the iterate `x_k`.
    pub objective: f64,
    /// Objective value at the averaged iterate; only at logging points.
    pub average_objective: Option<f64>,
    /// Total constraint violation at the averaged iterate; only at logging
    /// points.
    pub infeasibility: Option<f64>,
    /// Stepsize of the objective step that led to this iterate.
    pub stepsize: f64,
    /// Inner feasibility steps spent producing this iterate.
    pub samples: u64,
    /// Running distance estimate (distance-over-weights solvers only).
    pub rbar: Option<f64>,
    /// Accumulated weight `p_k` (distance-over-weights solvers only).
    pub weight_sum: Option<f64>,
    /// Wall-clock seconds since the solver started.
    pub elapsed_secs: f64,
}

/// Full per-iteration record of a solver run.
#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    /// One record per outer iteration, in order `k = 1..=T`.
    pub records: Vec<TraceRecord>,
    /// Outer iterates, recorded only on request (see the solver configs for
    /// the exact index range each solver stores).
    pub xs: Option<Vec<Vector>>,
    /// Pre-feasibility points `v_k`, recorded only on request.
    pub vs: Option<Vec<Vector>>,
}

/// Result of a solver run.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    /// The averaged iterate the convergence guarantees speak about.
    pub final_average: Vector,
    /// The last raw iterate produced.
    pub final_iterate: Vector,
    /// Selected averaging horizon (distance-over-weights solvers only).
    pub tau: Option<usize>,
    /// Final running distance estimate, one index past the last trace row
    /// (distance-over-weights solvers only).
    pub final_rbar: Option<f64>,
    /// Largest objective (sub)gradient norm observed during the run.
    pub max_subgradient_norm: f64,
    pub trace: RunTrace,
}

/// Errors from outer solvers.
#[derive(Debug, Error)]
pub enum SolverError {
    /// An iterate, objective value, or gradient became non-finite. Carries
    /// the trace accumulated so far for post-mortem inspection.
    #[error("diverged at outer iteration {iteration}: {reason}")]
    Diverged {
        iteration: usize,
        reason: String,
        trace: Box<RunTrace>,
    },

    /// The first objective subgradient is zero, so the distance-over-weights
    /// stepsize is undefined (the start point already minimizes the
    /// objective; no outer steps are needed).
    #[error("objective subgradient at the first iterate is zero")]
    ZeroInitialSubgradient,

    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),

    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Logging cadence: which outer iterations evaluate the averaged iterate.
///
/// `None` picks the default (every iteration up to 2000 total, then thinned
/// to ~2000 points); `Some(0)` disables average/infeasibility logging
/// entirely; `Some(c)` logs every `c`-th iteration and the final one.
pub(crate) fn is_log_point(k: usize, total: usize, log_every: Option<usize>) -> bool {
    let cadence = log_every.unwrap_or(if total <= 2000 { 1 } else { total.div_ceil(2000) });
    if cadence == 0 {
        return false;
    }
    k.is_multiple_of(cadence) || k == total
}

/// Weighted average `sum w_t x_t / sum w_t` over `points = [(w_t, x_t)]`.
pub(crate) fn weighted_average(points: &[(f64, &Vector)]) -> Result<Vector, CoreError> {
    let (_, first) = points.first().ok_or(CoreError::Empty {
        context: "weighted_average",
    })?;
    let mut numerator = Vector::zeros(first.dim());
    let mut denominator = 0.0;
    for (w, x) in points {
        numerator.axpy(*w, x);
        denominator += w;
    }
    if denominator <= 0.0 || !denominator.is_finite() {
        return Err(CoreError::invalid(
            "weights",
            format!("total weight {denominator}"),
        ));
    }
    numerator.scale_mut(1.0 / denominator);
    Ok(numerator)
}

/// Shared trace bookkeeping for the solver loops.
pub(crate) struct TraceBuilder {
    started: Instant,
    total: usize,
    log_every: Option<usize>,
    trace: RunTrace,
}

impl TraceBuilder {
    pub(crate) fn new(total: usize, log_every: Option<usize>, record_vectors: bool) -> Self {
        TraceBuilder {
            started: Instant::now(),
            total,
            log_every,
            trace: RunTrace {
                records: Vec::with_capacity(total),
                xs: record_vectors.then(Vec::new),
                vs: record_vectors.then(Vec::new),
            },
        }
    }

    pub(crate) fn is_log_point(&self, k: usize) -> bool {
        is_log_point(k, self.total, self.log_every)
    }

    /// Pushes the row for iteration `k`; `average` is the averaged iterate
    /// when `k` is a logging point.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push(
        &mut self,
        k: usize,
        problem: &ConstrainedProblem,
        objective: f64,
        average: Option<&Vector>,
        stepsize: f64,
        samples: u64,
        rbar: Option<f64>,
        weight_sum: Option<f64>,
    ) {
        let (average_objective, infeas) = match average {
            Some(avg) => (
                Some(problem.objective.value(avg)),
                Some(infeasibility(problem.constraints.as_ref(), avg)),
            ),
            None => (None, None),
        };
        self.trace.records.push(TraceRecord {
            k,
            objective,
            average_objective,
            infeasibility: infeas,
            stepsize,
            samples,
            rbar,
            weight_sum,
            elapsed_secs: self.started.elapsed().as_secs_f64(),
        });
    }

    pub(crate) fn record_x(&mut self, x: &Vector) {
        if let Some(xs) = &mut self.trace.xs {
            xs.push(x.clone());
        }
    }

    pub(crate) fn record_v(&mut self, v: &Vector) {
        if let Some(vs) = &mut self.trace.vs {
            vs.push(v.clone());
        }
    }

    pub(crate) fn finish(self) -> RunTrace {
        self.trace
    }
}
