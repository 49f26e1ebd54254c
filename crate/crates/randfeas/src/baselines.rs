//! Primal-dual baselines: gradient descent-ascent on the Lagrangian.
//!
//! These methods touch every constraint on every iteration (cost linear in
//! the family size), in contrast to the sampling-based feasibility passes.
//! They serve as comparison points, not as recommended solvers: their
//! stepsizes need tuning and their guarantees require compactness.

use crate::error::CoreError;
use crate::problem::ConstrainedProblem;
use crate::solvers::{SolverError, SolverOutput, TraceBuilder};
use crate::vector::Vector;

/// Order of the primal and dual updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimalDualMode {
    /// Simultaneous updates: the dual step evaluates constraints at the
    /// current iterate `x_k`.
    ArrowHurwicz,
    /// Alternating updates: the dual step evaluates constraints at the fresh
    /// iterate `x_{k+1}`.
    AltGda,
}

/// Configuration of [`solve_primal_dual`].
#[derive(Debug, Clone)]
pub struct PrimalDualConfig {
    pub mode: PrimalDualMode,
    /// Primal stepsize `eta_p > 0`.
    pub eta_primal: f64,
    /// Dual stepsize `eta_d >= 0` (zero freezes the multipliers).
    pub eta_dual: f64,
    /// Number of iterations `T >= 1`.
    pub iterations: usize,
    /// See [`crate::solvers::is_log_point`] for the convention.
    pub log_every: Option<usize>,
    /// Record `x_0..x_T` in the trace.
    pub record_vectors: bool,
}

impl PrimalDualConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.eta_primal.is_finite() && self.eta_primal > 0.0) {
            return Err(CoreError::invalid("eta_primal", self.eta_primal.to_string()));
        }
        if !(self.eta_dual.is_finite() && self.eta_dual >= 0.0) {
            return Err(CoreError::invalid("eta_dual", self.eta_dual.to_string()));
        }
        if self.iterations == 0 {
            return Err(CoreError::invalid("iterations", "need at least 1"));
        }
        Ok(())
    }
}

/// Runs projected gradient descent-ascent on the Lagrangian
/// `f(x) + sum_i lambda_i g_i(x)` from `start` with multipliers starting at
/// zero. Reports the arithmetic mean of the iterates as the average.
pub fn solve_primal_dual(
    problem: &ConstrainedProblem,
    config: &PrimalDualConfig,
    start: &Vector,
) -> Result<SolverOutput, SolverError> {
    config.validate()?;
    let objective = problem.objective.as_ref();
    let constraints = problem.constraints.as_ref();
    let m = constraints.len();
    let total = config.iterations;
    let mut builder = TraceBuilder::new(total, config.log_every, config.record_vectors);

    let mut x = problem.easy_set.project(start)?;
    builder.record_x(&x);
    let mut multipliers = vec![0.0f64; m];
    let mut running_sum = Vector::zeros(x.dim());
    let mut max_grad_norm: f64 = 0.0;

    for k in 1..=total {
        let grad = objective.subgradient(&x);
        let grad_norm = grad.norm();
        max_grad_norm = max_grad_norm.max(grad_norm);
        let mut lagrangian_grad = grad;
        for (i, lambda) in multipliers.iter().enumerate() {
            if *lambda > 0.0 {
                lagrangian_grad.axpy(*lambda, &constraints.subgradient(i, &x));
            }
        }
        let x_next = problem
            .easy_set
            .project(&x.add_scaled(-config.eta_primal, &lagrangian_grad))?;

        // One full constraint sweep per iteration: the simultaneous mode
        // evaluates at x_k, the alternating mode at the fresh x_{k+1}.
        let dual_point = match config.mode {
            PrimalDualMode::ArrowHurwicz => &x,
            PrimalDualMode::AltGda => &x_next,
        };
        for (i, lambda) in multipliers.iter_mut().enumerate() {
            *lambda = (*lambda + config.eta_dual * constraints.value(i, dual_point)).max(0.0);
        }

        let objective_value = objective.value(&x_next);
        if !(x_next.is_finite()
            && objective_value.is_finite()
            && multipliers.iter().all(|l| l.is_finite()))
        {
            return Err(SolverError::Diverged {
                iteration: k,
                reason: format!("non-finite iterate or multipliers ({objective_value})"),
                trace: Box::new(builder.finish()),
            });
        }

        running_sum.axpy(1.0, &x_next);
        builder.record_x(&x_next);
        let average = if builder.is_log_point(k) {
            Some(running_sum.scale(1.0 / k as f64))
        } else {
            None
        };
        builder.push(
            k,
            problem,
            objective_value,
            average.as_ref(),
            config.eta_primal,
            0,
            None,
            None,
        );
        x = x_next;
    }

    let final_average = running_sum.scale(1.0 / total as f64);
    Ok(SolverOutput {
        final_average,
        final_iterate: x,
        tau: None,
        final_rbar: None,
        max_subgradient_norm: max_grad_norm,
        trace: builder.finish(),
    })
}
