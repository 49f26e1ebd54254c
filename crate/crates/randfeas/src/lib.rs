//! Projection-free first-order methods for convex programs with many
//! functional constraints.
//!
//! The crate targets problems of the form `min f(x)` subject to
//! `g_i(x) <= 0` for a large family of convex constraints and `x` in a set
//! with a cheap exact projection. Instead of projecting onto the full
//! feasible region, the solvers interleave gradient steps on `f` with short
//! bursts of randomized Polyak-style corrections: each burst samples
//! constraints one at a time and steps just far enough to cancel the sampled
//! violation.
//!
//! Main entry points:
//!
//! - [`feasibility::feasibility_pass`] — one randomized correction burst.
//! - [`solvers::gradient::solve_gradient_feasibility`] — gradient descent on
//!   a smooth strongly convex objective with feasibility bursts between
//!   steps, in adaptive or diminishing stepsize mode.
//! - [`solvers::dows::solve_dows_family`] — parameter-free subgradient
//!   variant that calibrates stepsizes from an online distance estimate,
//!   with an optional tamed schedule for unbounded domains.
//! - [`baselines::solve_primal_dual`] — classical primal-dual baselines that
//!   sweep every constraint each iteration.
//! - [`schedules`] — per-burst sample-size schedules and the decay
//!   analytics used to pick them.
//! - [`problems`] — quadratically constrained quadratic program and linear
//!   SVM generators used by the benchmark harness.
//!
//! All randomness flows through [`rng::RandomSource`], a counter-based
//! generator with independent streams, so every run is reproducible from a
//! `(seed, stream)` pair.

pub mod baselines;
pub mod error;
pub mod feasibility;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod schedules;
pub mod sets;
pub mod solvers;
pub mod vector;

pub use error::CoreError;
pub use feasibility::{feasibility_pass, FeasibilityConfig, FeasibilityError, FeasibilityTrace};
pub use problem::{infeasibility, max_violation, ConstrainedProblem, ConstraintFamily, Objective};
pub use rng::RandomSource;
pub use schedules::{DecayDiagnostics, ParamMap, SampleSizeSchedule, ScheduleKind};
pub use sets::EasySet;
pub use solvers::{RunTrace, SolverError, SolverOutput, SolverStreams, TraceRecord};
pub use vector::Vector;
