//! Schedule self-verification: Monte Carlo estimates of the expected decay
//! factor against the closed forms, plus partial-sum checks against the
//! series bound. Produces a machine-readable JSON report.

use randfeas::schedules::{sum_decay_bound, ParamMap, ScheduleKind};
use randfeas::{DecayDiagnostics, RandomSource, SampleSizeSchedule};
use serde::Serialize;

use crate::HarnessError;

/// Monte Carlo z-scores above this fail the check.
pub const Z_THRESHOLD: f64 = 4.0;
/// Absolute tolerance for checks whose estimator has no spread.
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloCheck {
    pub schedule: String,
    pub q: f64,
    pub k: u64,
    pub expected: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialSumCheck {
    pub p: f64,
    pub q: f64,
    pub terms: usize,
    pub partial_sum: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub draws: usize,
    pub monte_carlo: Vec<MonteCarloCheck>,
    pub partial_sums: Vec<PartialSumCheck>,
    pub all_pass: bool,
}

/// Monte Carlo mean and standard error of `(1-q)^(N_k/2)` under the
/// schedule's draw distribution.
pub fn decay_estimate(
    schedule: &SampleSizeSchedule,
    k: u64,
    q: f64,
    draws: usize,
    rng: &mut RandomSource,
) -> Result<(f64, f64), HarnessError> {
    let base = 1.0 - q;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let n = schedule.draw(k, rng)?;
        let value = base.powf(n as f64 / 2.0);
        sum += value;
        sum_sq += value * value;
    }
    let n = draws as f64;
    let mean = sum / n;
    let variance = (sum_sq / n - mean * mean).max(0.0);
    Ok((mean, (variance / n).sqrt()))
}

fn describe(schedule: &SampleSizeSchedule) -> String {
    let kind = match &schedule.kind {
        ScheduleKind::Constant { n } => format!("constant(n={n})"),
        ScheduleKind::Power { p } => format!("power(p={p})"),
        ScheduleKind::Log { base_count, base } => {
            format!("log(base_count={base_count}, base={base:.3})")
        }
        ScheduleKind::Poisson { lambda } => format!("poisson(lambda={})", describe_map(lambda)),
        ScheduleKind::UniformInt { a, b } => {
            format!("uniform-int(a={}, b={})", describe_map(a), describe_map(b))
        }
        ScheduleKind::Binomial { n, p } => format!("binomial(n={}, p={p})", describe_map(n)),
    };
    if schedule.floor > 0 {
        format!("{kind}, floor={}", schedule.floor)
    } else {
        kind
    }
}

fn describe_map(map: &ParamMap) -> String {
    match map {
        ParamMap::Fixed(value) => format!("{value}"),
        ParamMap::Power { p } => format!("k^(1/{p})"),
        ParamMap::Log { offset, base } => format!("{offset}+log_{base:.3}(k+1)"),
    }
}

/// The schedule battery: every distribution family, with and without floors,
/// plus one iteration-dependent parameter map.
pub fn battery() -> Vec<(SampleSizeSchedule, u64)> {
    let fixed = |kind: ScheduleKind, floor: u64| (SampleSizeSchedule { kind, floor }, 1);
    let mut entries = vec![
        fixed(ScheduleKind::Constant { n: 3 }, 0),
        fixed(ScheduleKind::Power { p: 2.0 }, 1),
        fixed(
            ScheduleKind::Log {
                base_count: 3,
                base: std::f64::consts::E,
            },
            0,
        ),
    ];
    for lambda in [1.0, 2.0, 5.0] {
        entries.push(fixed(
            ScheduleKind::Poisson {
                lambda: ParamMap::Fixed(lambda),
            },
            0,
        ));
    }
    entries.push(fixed(
        ScheduleKind::Poisson {
            lambda: ParamMap::Fixed(2.0),
        },
        2,
    ));
    entries.push(fixed(
        ScheduleKind::UniformInt {
            a: ParamMap::Fixed(2.0),
            b: ParamMap::Fixed(9.0),
        },
        0,
    ));
    entries.push(fixed(
        ScheduleKind::UniformInt {
            a: ParamMap::Fixed(2.0),
            b: ParamMap::Fixed(9.0),
        },
        4,
    ));
    for (n, p) in [(1.0, 0.7), (5.0, 0.3), (20.0, 0.3), (20.0, 0.7)] {
        entries.push(fixed(
            ScheduleKind::Binomial {
                n: ParamMap::Fixed(n),
                p,
            },
            0,
        ));
    }
    // Iteration-dependent parameter: lambda_k = sqrt(k), checked at k = 100.
    entries.push((
        SampleSizeSchedule {
            kind: ScheduleKind::Poisson {
                lambda: ParamMap::Power { p: 2.0 },
            },
            floor: 0,
        },
        100,
    ));
    entries
}

/// Runs the full battery and assembles the report.
pub fn run_verification(draws: usize, seed: u64) -> Result<VerificationReport, HarnessError> {
    if draws == 0 {
        return Err(HarnessError::Config {
            message: "draws must be at least 1".into(),
        });
    }
    let mut monte_carlo = Vec::new();
    for (entry_index, (schedule, k)) in battery().into_iter().enumerate() {
        for (q_index, q) in [0.1, 0.5, 0.75].into_iter().enumerate() {
            let diag = DecayDiagnostics::new(q)?;
            let expected = schedule.expected_decay(k, &diag)?;
            // One stream per (schedule, q) pair keeps the checks independent.
            let mut rng =
                RandomSource::new(seed, (entry_index as u64) * 8 + q_index as u64);
            let (estimate, std_error) = decay_estimate(&schedule, k, q, draws, &mut rng)?;
            let diff = (estimate - expected).abs();
            let (z, pass) = if std_error > 0.0 {
                let z = diff / std_error;
                (z, z <= Z_THRESHOLD)
            } else {
                (0.0, diff <= EXACT_TOLERANCE)
            };
            monte_carlo.push(MonteCarloCheck {
                schedule: describe(&schedule),
                q,
                k,
                expected,
                estimate,
                std_error,
                z,
                pass,
            });
        }
    }

    let mut partial_sums = Vec::new();
    const TERMS: usize = 10_000;
    for p in [0.5, 1.0, 2.0] {
        for q in [0.05, 0.5] {
            let partial_sum = power_schedule_partial_sum(p, q, TERMS)?;
            let bound = sum_decay_bound(p, q)?;
            partial_sums.push(PartialSumCheck {
                p,
                q,
                terms: TERMS,
                partial_sum,
                bound,
                pass: partial_sum <= bound,
            });
        }
    }

    let all_pass = monte_carlo.iter().all(|c| c.pass) && partial_sums.iter().all(|c| c.pass);
    Ok(VerificationReport {
        draws,
        monte_carlo,
        partial_sums,
        all_pass,
    })
}

/// `sum_{k=1..terms} (1-q)^(N_k/2)` for the power schedule `N_k =
/// ceil(k^(1/p))`, using the schedule's own deterministic draw.
pub fn power_schedule_partial_sum(p: f64, q: f64, terms: usize) -> Result<f64, HarnessError> {
    let schedule = SampleSizeSchedule {
        kind: ScheduleKind::Power { p },
        floor: 0,
    };
    // Deterministic kinds consume no randomness; the stream is irrelevant.
    let mut rng = RandomSource::new(0, 0);
    let base = 1.0 - q;
    let mut total = 0.0;
    for k in 1..=terms as u64 {
        let n = schedule.draw(k, &mut rng)?;
        total += base.powf(n as f64 / 2.0);
    }
    Ok(total)
}
