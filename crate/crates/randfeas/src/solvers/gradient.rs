//! Gradient method with interleaved randomized feasibility passes, for smooth
//! objectives with known smoothness and strong-convexity constants.
//!
//! Each outer iteration takes a projected gradient step on the easy set and
//! then runs a feasibility pass over the sampled functional constraints. Two
//! stepsize modes are supported:
//!
//! * **adaptive**: `alpha_k = min{ 1/(2(L - mu)), 1/L, eps / (2 |grad|^2) }`,
//!   where degenerate branches (`L = mu`, zero gradient) drop out as `+inf`;
//!   reported averages use geometrically decaying weights driven by the
//!   largest gradient norm observed so far.
//! * **diminishing**: `alpha_k = 4 / (mu (k + 1))` with quadratically growing
//!   averaging weights `(t + 1)^2`, requiring no accuracy target.

use crate::error::CoreError;
use crate::feasibility::{feasibility_pass, FeasibilityConfig};
use crate::problem::ConstrainedProblem;
use crate::schedules::SampleSizeSchedule;
use crate::solvers::{
    weighted_average, SolverError, SolverOutput, SolverStreams, TraceBuilder,
};
use crate::vector::Vector;

/// Stepsize selection mode for the gradient solver.
#[derive(Debug, Clone)]
pub enum StepMode {
    /// Adaptive stepsize targeting additive accuracy `eps`.
    AdaptiveEps { eps: f64 },
    /// Classic `4 / (mu (k + 1))` decay for strongly convex objectives.
    Diminishing,
}

/// Configuration of [`solve_gradient_feasibility`].
#[derive(Debug, Clone)]
pub struct GradSolverConfig {
    pub mode: StepMode,
    /// Gradient Lipschitz constant `L > 0`.
    pub smoothness: f64,
    /// Strong-convexity modulus `mu`, `0 < mu <= L`.
    pub strong_convexity: f64,
    /// Number of outer iterations `T >= 1`.
    pub iterations: usize,
    pub schedule: SampleSizeSchedule,
    pub feasibility: FeasibilityConfig,
    /// See [`crate::solvers::is_log_point`] for the convention.
    pub log_every: Option<usize>,
    /// Record `x_0..x_T` and `v_1..v_T` in the trace.
    pub record_vectors: bool,
}

impl GradSolverConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        let l = self.smoothness;
        let mu = self.strong_convexity;
        if !(l.is_finite() && l > 0.0) {
            return Err(CoreError::invalid("smoothness", l.to_string()));
        }
        if !(mu.is_finite() && mu > 0.0 && mu <= l) {
            return Err(CoreError::invalid(
                "strong_convexity",
                format!("{mu} not in (0, {l}]"),
            ));
        }
        if let StepMode::AdaptiveEps { eps } = self.mode {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(CoreError::invalid("eps", eps.to_string()));
            }
        }
        if self.iterations == 0 {
            return Err(CoreError::invalid("iterations", "need at least 1"));
        }
        self.schedule.validate()?;
        self.feasibility.validate()
    }
}

/// The adaptive stepsize `min{ 1/(2(L - mu)), 1/L, eps/(2 g^2) }` where `g`
/// is the current gradient norm; the first branch is dropped when `L = mu`
/// and the last when `g = 0`. Always finite and at most `1/L`.
pub fn adaptive_stepsize(
    smoothness: f64,
    strong_convexity: f64,
    eps: f64,
    grad_norm: f64,
) -> Result<f64, CoreError> {
    if !(smoothness.is_finite() && smoothness > 0.0) {
        return Err(CoreError::invalid("smoothness", smoothness.to_string()));
    }
    if !(strong_convexity.is_finite()
        && strong_convexity > 0.0
        && strong_convexity <= smoothness)
    {
        return Err(CoreError::invalid(
            "strong_convexity",
            strong_convexity.to_string(),
        ));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(CoreError::invalid("eps", eps.to_string()));
    }
    if !(grad_norm.is_finite() && grad_norm >= 0.0) {
        return Err(CoreError::invalid("grad_norm", grad_norm.to_string()));
    }
    let mut alpha = 1.0 / smoothness;
    if smoothness > strong_convexity {
        alpha = alpha.min(1.0 / (2.0 * (smoothness - strong_convexity)));
    }
    if grad_norm > 0.0 {
        alpha = alpha.min(eps / (2.0 * grad_norm * grad_norm));
    }
    Ok(alpha)
}

/// Average with geometrically decaying weights: given `points = [(w_t, x_t)]`
/// for `t = 1..=k`, returns
/// `sum_t decay^(k-t) w_t x_t / sum_t decay^(k-t) w_t`.
///
/// `decay = 1` is the `w`-weighted mean; `decay = 0` returns the last point.
pub fn exp_weighted_average(points: &[(f64, Vector)], decay: f64) -> Result<Vector, CoreError> {
    if !(decay.is_finite() && (0.0..=1.0).contains(&decay)) {
        return Err(CoreError::invalid("decay", decay.to_string()));
    }
    // Walk backwards so the factor decay^(k-t) builds up multiplicatively;
    // ancient terms underflow harmlessly to zero weight.
    let mut geo = 1.0;
    let mut scaled: Vec<(f64, &Vector)> = Vec::with_capacity(points.len());
    for (w, x) in points.iter().rev() {
        scaled.push((geo * w, x));
        geo *= decay;
    }
    weighted_average(&scaled)
}

/// Runs `T` outer iterations of the gradient + feasibility-pass method from
/// `start` (projected onto the easy set first) and reports the averaged
/// iterate prescribed by the stepsize mode.
pub fn solve_gradient_feasibility(
    problem: &ConstrainedProblem,
    config: &GradSolverConfig,
    start: &Vector,
    streams: &mut SolverStreams,
) -> Result<SolverOutput, SolverError> {
    config.validate()?;
    let objective = problem.objective.as_ref();
    let total = config.iterations;
    let mut builder = TraceBuilder::new(total, config.log_every, config.record_vectors);

    let mut x = problem.easy_set.project(start)?;
    builder.record_x(&x);

    // Pipeline the gradient so each iterate is differentiated exactly once:
    // the gradient at x_k both drives the step to v_{k+1} and supplies the
    // averaging weight of x_k.
    let mut grad = objective.subgradient(&x);
    let mut max_grad_norm: f64 = 0.0;
    // (weight, iterate) pairs for t = 1..=k; weights are alpha_t in adaptive
    // mode and (t + 1)^2 in diminishing mode.
    let mut weighted_points: Vec<(f64, Vector)> = Vec::with_capacity(total);

    let stepsize_at = |grad_norm: f64, t: usize| -> Result<f64, CoreError> {
        match config.mode {
            StepMode::AdaptiveEps { eps } => adaptive_stepsize(
                config.smoothness,
                config.strong_convexity,
                eps,
                grad_norm,
            ),
            // t is the 0-based iterate index, so this is 4 / (mu (t + 1)).
            StepMode::Diminishing => Ok(4.0 / (config.strong_convexity * (t + 1) as f64)),
        }
    };

    let mut alpha = {
        let g = grad.norm();
        max_grad_norm = max_grad_norm.max(g);
        stepsize_at(g, 0)?
    };

    for k in 1..=total {
        let v = problem.easy_set.project(&x.add_scaled(-alpha, &grad))?;
        builder.record_v(&v);
        let samples = config
            .schedule
            .draw(k as u64, &mut streams.schedule)?;
        let (x_next, _) = feasibility_pass(
            &v,
            samples as usize,
            problem.constraints.as_ref(),
            &problem.easy_set,
            &config.feasibility,
            &mut streams.constraint_sampling,
        )?;
        let objective_value = objective.value(&x_next);
        if !(x_next.is_finite() && objective_value.is_finite()) {
            return Err(SolverError::Diverged {
                iteration: k,
                reason: format!("non-finite iterate or objective ({objective_value})"),
                trace: Box::new(builder.finish()),
            });
        }
        let step_used = alpha;
        let grad_next = objective.subgradient(&x_next);
        if !grad_next.is_finite() {
            return Err(SolverError::Diverged {
                iteration: k,
                reason: "non-finite gradient".into(),
                trace: Box::new(builder.finish()),
            });
        }
        let grad_norm = grad_next.norm();
        max_grad_norm = max_grad_norm.max(grad_norm);
        let alpha_next = stepsize_at(grad_norm, k)?;

        let weight = match config.mode {
            StepMode::AdaptiveEps { .. } => alpha_next,
            StepMode::Diminishing => ((k + 1) * (k + 1)) as f64,
        };
        weighted_points.push((weight, x_next.clone()));
        builder.record_x(&x_next);

        let average = if builder.is_log_point(k) {
            Some(current_average(
                &weighted_points,
                config,
                max_grad_norm,
            )?)
        } else {
            None
        };
        builder.push(
            k,
            problem,
            objective_value,
            average.as_ref(),
            step_used,
            samples,
            None,
            None,
        );

        x = x_next;
        grad = grad_next;
        alpha = alpha_next;
    }

    let final_average = current_average(&weighted_points, config, max_grad_norm)?;
    Ok(SolverOutput {
        final_average,
        final_iterate: x,
        tau: None,
        final_rbar: None,
        max_subgradient_norm: max_grad_norm,
        trace: builder.finish(),
    })
}

/// Averaged iterate over the stored points, using the decay implied by the
/// largest gradient norm seen so far (adaptive mode) or plain weighted mean
/// (diminishing mode). Recomputing from scratch keeps the average exact when
/// the running maximum grows.
fn current_average(
    weighted_points: &[(f64, Vector)],
    config: &GradSolverConfig,
    max_grad_norm: f64,
) -> Result<Vector, CoreError> {
    let decay = match config.mode {
        StepMode::AdaptiveEps { eps } => {
            let alpha_bar = adaptive_stepsize(
                config.smoothness,
                config.strong_convexity,
                eps,
                max_grad_norm,
            )?;
            1.0 - alpha_bar * config.strong_convexity
        }
        StepMode::Diminishing => 1.0,
    };
    exp_weighted_average(weighted_points, decay)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_stepsize_examples() {
        // Large gradient: the accuracy branch binds.
        let a = adaptive_stepsize(10.0, 1.0, 0.01, 100.0).unwrap();
        assert_eq!(a, 0.01 / 20000.0);
        // L = mu and zero gradient: both degenerate branches drop, leaving 1/L.
        let b = adaptive_stepsize(5.0, 5.0, 1.0, 0.0).unwrap();
        assert_eq!(b, 0.2);
        // Moderate gradient: curvature branch binds.
        let c = adaptive_stepsize(10.0, 1.0, 1e6, 1.0).unwrap();
        assert_eq!(c, 1.0 / 18.0);
    }

    #[test]
    fn adaptive_stepsize_never_exceeds_inverse_smoothness() {
        let mut rng = crate::rng::RandomSource::new(0, 0);
        for _ in 0..1000 {
            let l = rng.uniform_range(0.1, 50.0);
            let mu = rng.uniform_range(0.0, 1.0) * l;
            let mu = mu.max(1e-6);
            let eps = rng.uniform_range(1e-6, 1e7);
            let g = rng.uniform_range(0.0, 1e3);
            let a = adaptive_stepsize(l, mu, eps, g).unwrap();
            assert!(a > 0.0 && a <= 1.0 / l + 1e-18);
        }
    }

    #[test]
    fn invalid_constants_rejected() {
        assert!(adaptive_stepsize(-1.0, 0.5, 1.0, 1.0).is_err());
        assert!(adaptive_stepsize(1.0, 2.0, 1.0, 1.0).is_err(), "mu > L");
        assert!(adaptive_stepsize(1.0, 0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn exp_average_extremes() {
        let pts = vec![
            (1.0, Vector::new(vec![0.0]).unwrap()),
            (1.0, Vector::new(vec![1.0]).unwrap()),
            (1.0, Vector::new(vec![5.0]).unwrap()),
        ];
        // decay = 1: arithmetic mean of equally weighted points.
        let mean = exp_weighted_average(&pts, 1.0).unwrap();
        assert!((mean[0] - 2.0).abs() < 1e-15);
        // decay = 0: the most recent point.
        let last = exp_weighted_average(&pts, 0.0).unwrap();
        assert_eq!(last[0], 5.0);
    }

    #[test]
    fn exp_average_matches_direct_formula() {
        let pts: Vec<(f64, Vector)> = (1..=6)
            .map(|t| (0.1 * t as f64, Vector::new(vec![t as f64]).unwrap()))
            .collect();
        let decay = 0.8_f64;
        let k = pts.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for (t, (w, x)) in pts.iter().enumerate() {
            let geo = decay.powi((k - 1 - t) as i32);
            num += geo * w * x[0];
            den += geo * w;
        }
        let avg = exp_weighted_average(&pts, decay).unwrap();
        assert!((avg[0] - num / den).abs() < 1e-14);
    }
}
