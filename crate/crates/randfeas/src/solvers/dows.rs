//! Parameter-free distance-over-weights subgradient solvers with randomized
//! feasibility passes.
//!
//! The stepsize is built from two running quantities: `rbar_k`, the largest
//! distance of any iterate from the first one (kicked off by a user guess
//! `r`), and `p_k`, the accumulated sum of `rbar^2 |subgradient|^2`. The
//! untamed rule uses `rbar_k^2 / sqrt(p_k)`; the tamed variant divides by an
//! extra logarithmic factor, which keeps the iterates provably bounded even
//! when the initial distance guess is too large.
//!
//! The reported average is not the full mean: a horizon `tau` is selected
//! where the distance estimate stopped growing relative to its history, and
//! the average weights iterates `1..=tau` by `rbar^2`.

use crate::error::CoreError;
use crate::feasibility::{feasibility_pass, FeasibilityConfig};
use crate::problem::ConstrainedProblem;
use crate::schedules::SampleSizeSchedule;
use crate::solvers::{
    weighted_average, SolverError, SolverOutput, SolverStreams, TraceBuilder,
};
use crate::vector::Vector;

/// Whether the logarithmically tamed stepsize is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Taming {
    /// Plain distance-over-weights stepsize.
    Off,
    /// Tamed stepsize with initial weight offset `p0 >= 0`.
    On { p0: f64 },
}

/// Configuration of [`solve_dows_family`].
#[derive(Debug, Clone)]
pub struct DowsSolverConfig {
    pub taming: Taming,
    /// Initial distance guess `r > 0` seeding the running estimate.
    pub initial_distance: f64,
    /// Number of outer iterations `T >= 1`.
    pub iterations: usize,
    pub schedule: SampleSizeSchedule,
    pub feasibility: FeasibilityConfig,
    /// See [`crate::solvers::is_log_point`] for the convention.
    pub log_every: Option<usize>,
    /// Record `x_1..x_{T+1}` and `v_1..v_{T+1}` in the trace.
    pub record_vectors: bool,
}

impl DowsSolverConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.initial_distance.is_finite() && self.initial_distance > 0.0) {
            return Err(CoreError::invalid(
                "initial_distance",
                self.initial_distance.to_string(),
            ));
        }
        if let Taming::On { p0 } = self.taming {
            if !(p0.is_finite() && p0 >= 0.0) {
                return Err(CoreError::invalid("p0", p0.to_string()));
            }
        }
        if self.iterations == 0 {
            return Err(CoreError::invalid("iterations", "need at least 1"));
        }
        self.schedule.validate()?;
        self.feasibility.validate()
    }
}

/// Untamed stepsize `rbar^2 / sqrt(p)`.
pub fn dows_stepsize(rbar: f64, p: f64) -> Result<f64, CoreError> {
    check_positive("rbar", rbar)?;
    check_positive("p", p)?;
    Ok(rbar * rbar / p.sqrt())
}

/// Tamed stepsize when the weight offset is zero:
/// `rbar^2 / (2 sqrt(p) ln(e p / p_first))`, where `p_first` is the first
/// accumulated weight `p_1` (so the logarithm is at least 1).
pub fn tdows_stepsize_zero_offset(rbar: f64, p: f64, p_first: f64) -> Result<f64, CoreError> {
    check_positive("rbar", rbar)?;
    check_positive("p", p)?;
    check_positive("p_first", p_first)?;
    let log_term = (std::f64::consts::E * p / p_first).ln();
    Ok(rbar * rbar / (2.0 * p.sqrt() * log_term))
}

/// Tamed stepsize with a positive weight offset `p0`:
/// `rbar^2 / (sqrt(2 p) ln(e p / p0))`.
pub fn tdows_stepsize_positive_offset(rbar: f64, p: f64, p0: f64) -> Result<f64, CoreError> {
    check_positive("rbar", rbar)?;
    check_positive("p", p)?;
    check_positive("p0", p0)?;
    let log_term = (std::f64::consts::E * p / p0).ln();
    Ok(rbar * rbar / ((2.0 * p).sqrt() * log_term))
}

fn check_positive(name: &'static str, value: f64) -> Result<(), CoreError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(CoreError::invalid(name, value.to_string()));
    }
    Ok(())
}

/// Selects the averaging horizon from the distance estimates
/// `rbars = [rbar_1, ..., rbar_{T+1}]`: the first `tau` in `1..=T`
/// minimizing `rbar_{tau+1}^2 / sum_{i<=tau} rbar_i^2`.
pub fn select_tau(rbars: &[f64]) -> Result<usize, CoreError> {
    if rbars.len() < 2 {
        return Err(CoreError::invalid(
            "rbars",
            format!("need at least 2 entries, got {}", rbars.len()),
        ));
    }
    if rbars.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(CoreError::invalid("rbars", "entries must be positive"));
    }
    let mut prefix = 0.0;
    let mut best_ratio = f64::INFINITY;
    let mut best_k = 1;
    for k in 1..rbars.len() {
        prefix += rbars[k - 1] * rbars[k - 1];
        let ratio = rbars[k] * rbars[k] / prefix;
        if ratio < best_ratio {
            best_ratio = ratio;
            best_k = k;
        }
    }
    Ok(best_k)
}

/// Runs the distance-over-weights solver (tamed or not) for `T` outer
/// iterations from `start` (projected onto the easy set, then pushed through
/// an initial feasibility pass).
pub fn solve_dows_family(
    problem: &ConstrainedProblem,
    config: &DowsSolverConfig,
    start: &Vector,
    streams: &mut SolverStreams,
) -> Result<SolverOutput, SolverError> {
    config.validate()?;
    let objective = problem.objective.as_ref();
    let total = config.iterations;
    let mut builder = TraceBuilder::new(total, config.log_every, config.record_vectors);

    // Initialization pass: v_1 = projected start, x_1 = pass(v_1, N_1), and
    // the anchor point for all distance measurements is x_1 itself.
    let v1 = problem.easy_set.project(start)?;
    builder.record_v(&v1);
    let mut samples_for_current = config.schedule.draw(1, &mut streams.schedule)?;
    let (x1, _) = feasibility_pass(
        &v1,
        samples_for_current as usize,
        problem.constraints.as_ref(),
        &problem.easy_set,
        &config.feasibility,
        &mut streams.constraint_sampling,
    )?;
    let anchor = x1.clone();
    builder.record_x(&x1);

    let mut x = x1;
    let mut rbar = config.initial_distance;
    let mut weight_sum = match config.taming {
        Taming::Off => 0.0,
        Taming::On { p0 } => p0,
    };
    let mut first_weight = None; // p_1, the taming reference when p0 = 0.
    let mut max_grad_norm: f64 = 0.0;
    let mut rbars: Vec<f64> = Vec::with_capacity(total + 1);
    let mut iterates: Vec<Vector> = Vec::with_capacity(total + 1);
    iterates.push(x.clone());

    for k in 1..=total {
        let subgrad = objective.subgradient(&x);
        let objective_value = objective.value(&x);
        if !(subgrad.is_finite() && objective_value.is_finite() && x.is_finite()) {
            return Err(SolverError::Diverged {
                iteration: k,
                reason: "non-finite iterate, objective, or subgradient".into(),
                trace: Box::new(builder.finish()),
            });
        }
        let grad_norm = subgrad.norm();
        max_grad_norm = max_grad_norm.max(grad_norm);

        rbar = x.distance(&anchor).max(rbar);
        weight_sum += rbar * rbar * grad_norm * grad_norm;
        rbars.push(rbar);
        if weight_sum <= 0.0 {
            // Only reachable at k = 1 with no offset: the start point already
            // minimizes the objective and the stepsize is undefined.
            return Err(SolverError::ZeroInitialSubgradient);
        }
        let alpha = match config.taming {
            Taming::Off => dows_stepsize(rbar, weight_sum)?,
            Taming::On { p0: 0.0 } => {
                let p_first = *first_weight.get_or_insert(weight_sum);
                tdows_stepsize_zero_offset(rbar, weight_sum, p_first)?
            }
            Taming::On { p0 } => tdows_stepsize_positive_offset(rbar, weight_sum, p0)?,
        };

        let v_next = problem.easy_set.project(&x.add_scaled(-alpha, &subgrad))?;
        builder.record_v(&v_next);
        let samples_next = config
            .schedule
            .draw(k as u64 + 1, &mut streams.schedule)?;
        let (x_next, _) = feasibility_pass(
            &v_next,
            samples_next as usize,
            problem.constraints.as_ref(),
            &problem.easy_set,
            &config.feasibility,
            &mut streams.constraint_sampling,
        )?;
        builder.record_x(&x_next);

        let average = if builder.is_log_point(k) {
            // Anytime view: select the horizon from distances known so far,
            // including the one revealed by the iterate just produced.
            let rbar_peek = x_next.distance(&anchor).max(rbar);
            let mut known = rbars.clone();
            known.push(rbar_peek);
            let tau = select_tau(&known)?;
            Some(average_up_to(&iterates, &rbars, tau)?)
        } else {
            None
        };
        builder.push(
            k,
            problem,
            objective_value,
            average.as_ref(),
            alpha,
            samples_for_current,
            Some(rbar),
            Some(weight_sum),
        );

        samples_for_current = samples_next;
        x = x_next;
        iterates.push(x.clone());
    }

    let final_rbar = x.distance(&anchor).max(rbar);
    rbars.push(final_rbar);
    let tau = select_tau(&rbars)?;
    let final_average = average_up_to(&iterates, &rbars, tau)?;
    Ok(SolverOutput {
        final_average,
        final_iterate: x,
        tau: Some(tau),
        final_rbar: Some(final_rbar),
        max_subgradient_norm: max_grad_norm,
        trace: builder.finish(),
    })
}

/// `rbar^2`-weighted average of `x_1..x_tau`.
fn average_up_to(
    iterates: &[Vector],
    rbars: &[f64],
    tau: usize,
) -> Result<Vector, CoreError> {
    let points: Vec<(f64, &Vector)> = (0..tau)
        .map(|i| (rbars[i] * rbars[i], &iterates[i]))
        .collect();
    weighted_average(&points)
}
