//! Randomized feasibility passes.
//!
//! A pass starts from a point `v` in the easy set `Y`, repeatedly samples one
//! constraint uniformly at random, and applies a Polyak-type cut step toward
//! that constraint's feasible halfspace, projecting back onto `Y` after every
//! step. Each step is non-expansive with respect to every point of the full
//! feasible region, and the expected distance to the feasible region decays
//! geometrically in the number of inner steps.

use thiserror::Error;

use crate::error::CoreError;
use crate::problem::ConstraintFamily;
use crate::rng::RandomSource;
use crate::sets::EasySet;
use crate::vector::Vector;

/// Tuning for the feasibility inner loop.
#[derive(Debug, Clone)]
pub struct FeasibilityConfig {
    /// Relaxation parameter of the cut step; must lie in `(0, 2)`.
    pub beta: f64,
    /// A violated constraint whose subgradient norm falls at or below this
    /// threshold is reported as an error instead of dividing by ~zero.
    pub zero_grad_tolerance: f64,
    /// When set, the trace records every inner iterate `z^0, ..., z^N`.
    pub record_iterates: bool,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        FeasibilityConfig {
            beta: 1.0,
            zero_grad_tolerance: 1e-14,
            record_iterates: false,
        }
    }
}

impl FeasibilityConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !self.beta.is_finite() || self.beta <= 0.0 || self.beta >= 2.0 {
            return Err(CoreError::invalid(
                "beta",
                format!("{} not in (0, 2)", self.beta),
            ));
        }
        if !self.zero_grad_tolerance.is_finite() || self.zero_grad_tolerance < 0.0 {
            return Err(CoreError::invalid(
                "zero_grad_tolerance",
                self.zero_grad_tolerance.to_string(),
            ));
        }
        Ok(())
    }
}

/// Diagnostics of one feasibility pass.
#[derive(Debug, Clone, Default)]
pub struct FeasibilityTrace {
    /// Constraint index sampled at each inner step.
    pub indices: Vec<usize>,
    /// Violation `g_i(z)^+` observed at each inner step (before the step).
    pub violations: Vec<f64>,
    /// Inner iterates `z^0, ..., z^N`; populated only when
    /// [`FeasibilityConfig::record_iterates`] is set.
    pub iterates: Vec<Vector>,
}

impl FeasibilityTrace {
    /// Number of inner steps performed (skipped steps included).
    pub fn inner_count(&self) -> usize {
        self.indices.len()
    }
}

/// Errors from the feasibility machinery.
#[derive(Debug, Error)]
pub enum FeasibilityError {
    /// A constraint is violated but its reported subgradient is (numerically)
    /// zero, so no cut step exists. For convex `g_i` this indicates a broken
    /// oracle: a true subgradient at a violated point cannot vanish.
    #[error(
        "constraint {index} is violated (value {violation:.3e}) but its subgradient norm \
         {grad_norm:.3e} is below tolerance"
    )]
    InconsistentSubgradient {
        index: usize,
        violation: f64,
        grad_norm: f64,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

/// One Polyak cut step: moves `z` along `-d` far enough to zero the
/// linearization of the violated constraint, scaled by `beta`.
///
/// `violation` must be the positive part `g_i(z)^+`; when it is 0 the step
/// is the identity. No projection is applied here; callers project onto the
/// easy set afterwards.
pub fn polyak_step(
    z: &Vector,
    violation: f64,
    d: &Vector,
    config: &FeasibilityConfig,
) -> Result<Vector, FeasibilityError> {
    if violation <= 0.0 {
        return Ok(z.clone());
    }
    let grad_norm_sq = d.norm_squared();
    if grad_norm_sq.sqrt() <= config.zero_grad_tolerance {
        return Err(FeasibilityError::InconsistentSubgradient {
            index: usize::MAX,
            violation,
            grad_norm: grad_norm_sq.sqrt(),
        });
    }
    Ok(z.add_scaled(-config.beta * violation / grad_norm_sq, d))
}

/// Runs `n` randomized inner steps from `v` (which must already lie in `set`)
/// and returns the final iterate together with its trace.
///
/// Every inner step samples a constraint index uniformly, applies
/// [`polyak_step`] to its positive part, and projects back onto `set`. Steps
/// that sample an already-satisfied constraint are skipped (zero step) but
/// still count toward `n`. The iterate never moves farther from any point of
/// the feasible region.
pub fn feasibility_pass(
    v: &Vector,
    n: usize,
    constraints: &dyn ConstraintFamily,
    set: &EasySet,
    config: &FeasibilityConfig,
    rng: &mut RandomSource,
) -> Result<(Vector, FeasibilityTrace), FeasibilityError> {
    config.validate()?;
    let m = constraints.len();
    if m == 0 {
        return Err(CoreError::Empty {
            context: "feasibility_pass constraints",
        }
        .into());
    }
    let mut z = v.clone();
    let mut trace = FeasibilityTrace::default();
    trace.indices.reserve(n);
    trace.violations.reserve(n);
    if config.record_iterates {
        trace.iterates.reserve(n + 1);
        trace.iterates.push(z.clone());
    }
    for _ in 0..n {
        let i = rng.uniform_index(m)?;
        let violation = constraints.value(i, &z).max(0.0);
        trace.indices.push(i);
        trace.violations.push(violation);
        if violation > 0.0 {
            let d = constraints.subgradient(i, &z);
            let stepped = polyak_step(&z, violation, &d, config).map_err(|e| match e {
                FeasibilityError::InconsistentSubgradient {
                    violation,
                    grad_norm,
                    ..
                } => FeasibilityError::InconsistentSubgradient {
                    index: i,
                    violation,
                    grad_norm,
                },
                other => other,
            })?;
            z = set.project(&stepped)?;
        } else {
            // Zero step; the projection is still applied to mirror the
            // unconditional project-after-step structure of the update.
            z = set.project(&z)?;
        }
        if config.record_iterates {
            trace.iterates.push(z.clone());
        }
    }
    Ok((z, trace))
}
