//! Sample-size schedules for the feasibility inner loop.
//!
//! The number of inner steps `N_k` spent on feasibility at outer iteration
//! `k` may be deterministic (constant, power, or logarithmic growth) or drawn
//! from a distribution (Poisson, uniform over an integer range, binomial).
//! What the outer analysis consumes is the expected decay factor
//! `E[(1-q)^{N_k/2}]`, where `q` in `(0, 1)` is the per-step contraction
//! constant of the feasibility pass; this module provides exact closed forms
//! for that expectation, together with a summability bound for power-growth
//! schedules.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::rng::RandomSource;

/// Ceiling with a tiny backward tolerance so values that are mathematically
/// integral but computed a hair above (e.g. `9f64.powf(0.5)`) do not round up.
fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

fn default_log_base() -> f64 {
    std::f64::consts::E
}

/// Scalar parameter as a function of the outer iteration index `k >= 1`.
///
/// Serialized forms: a bare number (`3.0`), `{ p = 2.0 }` for `k^(1/p)`, or
/// `{ offset = 1.0, base = 2.0 }` for `offset + log_base(k + 1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamMap {
    /// Constant in `k`.
    Fixed(f64),
    /// `k^(1/p)`.
    Power { p: f64 },
    /// `offset + log_base(k + 1)`; defaults to the natural logarithm.
    Log {
        offset: f64,
        #[serde(default = "default_log_base")]
        base: f64,
    },
}

impl ParamMap {
    /// Evaluates the map at outer iteration `k >= 1`.
    pub fn eval(&self, k: u64) -> Result<f64, CoreError> {
        if k == 0 {
            return Err(CoreError::invalid("k", "outer iterations start at 1"));
        }
        let value = match self {
            ParamMap::Fixed(v) => *v,
            ParamMap::Power { p } => {
                if !(p.is_finite() && *p > 0.0) {
                    return Err(CoreError::invalid("p", p.to_string()));
                }
                (k as f64).powf(1.0 / p)
            }
            ParamMap::Log { offset, base } => {
                if !(base.is_finite() && *base > 1.0) {
                    return Err(CoreError::invalid("base", base.to_string()));
                }
                offset + ((k + 1) as f64).ln() / base.ln()
            }
        };
        if !value.is_finite() {
            return Err(CoreError::NonFinite {
                context: "ParamMap::eval",
            });
        }
        Ok(value)
    }

    /// Evaluates and rounds up to a nonnegative integer.
    pub fn eval_integer(&self, k: u64) -> Result<u64, CoreError> {
        Ok(ceil_tol(self.eval(k)?).max(0.0) as u64)
    }
}

/// The shape of a sample-size schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `N_k = n` for all `k`.
    Constant { n: u64 },
    /// `N_k = ceil(k^(1/p))`.
    Power { p: f64 },
    /// `N_k = base_count + ceil(log_base(k + 1))`.
    Log {
        base_count: u64,
        #[serde(default = "default_log_base")]
        base: f64,
    },
    /// `N_k ~ Poisson(lambda_k)`.
    Poisson { lambda: ParamMap },
    /// `N_k` uniform over the integers `{a_k, ..., b_k}`, `1 <= a_k < b_k`.
    UniformInt { a: ParamMap, b: ParamMap },
    /// `N_k ~ Binomial(n_k, p)` with `p` in `(0, 1]`.
    Binomial { n: ParamMap, p: f64 },
}

/// A schedule plus a floor: the drawn size is `max(N_k, floor)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSizeSchedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    #[serde(default)]
    pub floor: u64,
}

impl SampleSizeSchedule {
    pub fn new(kind: ScheduleKind) -> Self {
        SampleSizeSchedule { kind, floor: 0 }
    }

    pub fn with_floor(kind: ScheduleKind, floor: u64) -> Self {
        SampleSizeSchedule { kind, floor }
    }

    /// Checks the schedule's parameters (maps are spot-checked at `k = 1` and
    /// re-checked on every draw).
    pub fn validate(&self) -> Result<(), CoreError> {
        self.parameters(1).map(|_| ())
    }

    /// Resolves the distribution parameters at outer iteration `k`.
    fn parameters(&self, k: u64) -> Result<ResolvedKind, CoreError> {
        match &self.kind {
            ScheduleKind::Constant { n } => Ok(ResolvedKind::Deterministic(*n)),
            ScheduleKind::Power { p } => {
                let map = ParamMap::Power { p: *p };
                Ok(ResolvedKind::Deterministic(map.eval_integer(k)?))
            }
            ScheduleKind::Log { base_count, base } => {
                let map = ParamMap::Log {
                    offset: 0.0,
                    base: *base,
                };
                Ok(ResolvedKind::Deterministic(base_count + map.eval_integer(k)?))
            }
            ScheduleKind::Poisson { lambda } => {
                let l = lambda.eval(k)?;
                if l <= 0.0 {
                    return Err(CoreError::invalid("lambda", format!("{l} at k = {k}")));
                }
                Ok(ResolvedKind::Poisson(l))
            }
            ScheduleKind::UniformInt { a, b } => {
                let lo = a.eval_integer(k)?;
                let hi = b.eval_integer(k)?;
                if lo < 1 || hi <= lo {
                    return Err(CoreError::invalid(
                        "uniform-int bounds",
                        format!("need 1 <= a < b, got a = {lo}, b = {hi} at k = {k}"),
                    ));
                }
                Ok(ResolvedKind::UniformInt(lo, hi))
            }
            ScheduleKind::Binomial { n, p } => {
                let trials = n.eval_integer(k)?;
                if trials < 1 {
                    return Err(CoreError::invalid("n", format!("{trials} at k = {k}")));
                }
                if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                    return Err(CoreError::invalid("p", format!("{p} not in (0, 1]")));
                }
                Ok(ResolvedKind::Binomial(trials, *p))
            }
        }
    }

    /// Draws `N_k` for outer iteration `k >= 1`. Deterministic variants
    /// consume no randomness; random variants consume exactly one uniform.
    pub fn draw(&self, k: u64, rng: &mut RandomSource) -> Result<u64, CoreError> {
        let n = match self.parameters(k)? {
            ResolvedKind::Deterministic(n) => n,
            ResolvedKind::Poisson(lambda) => poisson_inverse_cdf(lambda, rng.uniform())?,
            ResolvedKind::UniformInt(a, b) => {
                let span = b - a + 1;
                let offset = (rng.uniform() * span as f64) as u64;
                a + offset.min(span - 1)
            }
            ResolvedKind::Binomial(n, p) => binomial_inverse_cdf(n, p, rng.uniform()),
        };
        Ok(n.max(self.floor))
    }

    /// Exact expected decay factor `E[(1-q)^(max(N_k, floor)/2)]`.
    pub fn expected_decay(&self, k: u64, diag: &DecayDiagnostics) -> Result<f64, CoreError> {
        let s = diag.half_decay(); // sqrt(1 - q)
        let f = self.floor;
        Ok(match self.parameters(k)? {
            ResolvedKind::Deterministic(n) => s.powi(n.max(f) as i32),
            ResolvedKind::Poisson(lambda) => {
                // E[s^max(N,F)] = s^F P(N <= F) + (e^{-lambda(1-s)} - sum_{j<=F} e^{-lambda}(lambda s)^j / j!).
                let mut clamped = 0.0; // s^F * P(N <= F)
                let mut below_floor_decay = 0.0; // sum_{j<=F} pmf(j) s^j
                if f > 0 {
                    let mut pmf = (-lambda).exp();
                    let mut decay_term = pmf; // pmf(j) * s^j
                    for j in 0..=f {
                        if j > 0 {
                            pmf *= lambda / j as f64;
                            decay_term *= lambda * s / j as f64;
                        }
                        clamped += pmf;
                        below_floor_decay += decay_term;
                    }
                    clamped *= s.powi(f as i32);
                }
                clamped + (-(lambda * (1.0 - s))).exp() - below_floor_decay
            }
            ResolvedKind::UniformInt(a, b) => {
                let span = (b - a + 1) as f64;
                (a..=b).map(|j| s.powi(j.max(f) as i32)).sum::<f64>() / span
            }
            ResolvedKind::Binomial(n, p) => {
                if f == 0 {
                    (1.0 - p * (1.0 - s)).powi(n as i32)
                } else {
                    // Finite support: clamp each atom at the floor and weight
                    // by the binomial pmf, computed by stable recurrence.
                    let mut pmf = (1.0 - p).powi(n as i32);
                    let mut total = 0.0;
                    for j in 0..=n {
                        if j > 0 {
                            pmf *= (n - j + 1) as f64 / j as f64 * (p / (1.0 - p));
                        }
                        total += pmf * s.powi(j.max(f) as i32);
                    }
                    total
                }
            }
        })
    }
}

enum ResolvedKind {
    Deterministic(u64),
    Poisson(f64),
    UniformInt(u64, u64),
    Binomial(u64, f64),
}

/// Per-step contraction constant `q` of a feasibility pass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayDiagnostics {
    q: f64,
}

impl DecayDiagnostics {
    pub fn new(q: f64) -> Result<Self, CoreError> {
        if !(q.is_finite() && q > 0.0 && q < 1.0) {
            return Err(CoreError::invalid("q", format!("{q} not in (0, 1)")));
        }
        Ok(DecayDiagnostics { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `sqrt(1 - q)`, the per-inner-step decay of expected distance.
    pub fn half_decay(&self) -> f64 {
        (1.0 - self.q).sqrt()
    }
}

/// Upper bound on the uniform-range expected decay via the integral estimate
/// `2 (s^(a-1) - s^b) / ((b - a + 1) ln(1/(1-q)))` with `s = sqrt(1-q)`.
pub fn uniform_int_decay_upper_bound(
    a: u64,
    b: u64,
    diag: &DecayDiagnostics,
) -> Result<f64, CoreError> {
    if a < 1 || b <= a {
        return Err(CoreError::invalid("bounds", format!("a = {a}, b = {b}")));
    }
    let s = diag.half_decay();
    let log_inv = (1.0 / (1.0 - diag.q())).ln();
    Ok(2.0 * (s.powi(a as i32 - 1) - s.powi(b as i32)) / ((b - a + 1) as f64 * log_inv))
}

/// Uniform-in-horizon bound on the series `sum_k (1-q)^(ceil(k^(1/p))/2)`:
/// every partial sum is at most `2^p Gamma(p+1) / ln(1/(1-q))^p`.
pub fn sum_decay_bound(p: f64, q: f64) -> Result<f64, CoreError> {
    if !(p.is_finite() && p > 0.0) {
        return Err(CoreError::invalid("p", p.to_string()));
    }
    let diag = DecayDiagnostics::new(q)?;
    let log_inv = (1.0 / (1.0 - diag.q())).ln();
    Ok(2f64.powf(p) * statrs::function::gamma::gamma(p + 1.0) / log_inv.powf(p))
}

/// Inverse-CDF Poisson draw from a single uniform.
fn poisson_inverse_cdf(lambda: f64, u: f64) -> Result<u64, CoreError> {
    if lambda > 500.0 {
        // e^{-lambda} underflows long before this; keep the linear-time
        // inversion honest rather than silently losing mass.
        return Err(CoreError::invalid(
            "lambda",
            format!("{lambda} too large for CDF inversion"),
        ));
    }
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    let mut j = 0u64;
    let cap = (lambda + 60.0 * (lambda + 10.0).sqrt() + 100.0) as u64;
    while u >= cdf && j < cap {
        j += 1;
        pmf *= lambda / j as f64;
        cdf += pmf;
    }
    Ok(j)
}

/// Inverse-CDF binomial draw from a single uniform.
fn binomial_inverse_cdf(n: u64, p: f64, u: f64) -> u64 {
    if p >= 1.0 {
        return n;
    }
    let ratio = p / (1.0 - p);
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf = pmf;
    let mut j = 0u64;
    while u >= cdf && j < n {
        j += 1;
        pmf *= (n - j + 1) as f64 / j as f64 * ratio;
        cdf += pmf;
    }
    j
}
