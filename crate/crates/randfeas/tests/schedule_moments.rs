//! Monte-Carlo validation of the closed-form schedule analytics: empirical
//! decay factors and draw moments must land within standard-error bands of
//! the exact formulas, and exact formulas must match brute-force summation.

use randfeas::rng::RandomSource;
use randfeas::schedules::{DecayDiagnostics, ParamMap, SampleSizeSchedule, ScheduleKind};

const DRAWS: usize = 100_000;

/// Empirical mean and standard error of `s^N` over many draws.
fn decay_monte_carlo(
    schedule: &SampleSizeSchedule,
    k: u64,
    s: f64,
    stream: u64,
) -> (f64, f64) {
    let mut rng = RandomSource::new(2024, stream);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..DRAWS {
        let n = schedule.draw(k, &mut rng).unwrap();
        let value = s.powi(n as i32);
        sum += value;
        sum_sq += value * value;
    }
    let mean = sum / DRAWS as f64;
    let variance = (sum_sq / DRAWS as f64 - mean * mean).max(0.0);
    (mean, (variance / DRAWS as f64).sqrt())
}

#[test]
fn random_schedule_decays_match_closed_forms_within_four_sigma() {
    let mut stream = 0;
    for &q in &[0.1, 0.5, 0.75] {
        let diag = DecayDiagnostics::new(q).unwrap();
        let s = diag.half_decay();

        let mut cases: Vec<SampleSizeSchedule> = Vec::new();
        for &lambda in &[1.0, 2.0, 5.0] {
            cases.push(SampleSizeSchedule::new(ScheduleKind::Poisson {
                lambda: ParamMap::Fixed(lambda),
            }));
            cases.push(SampleSizeSchedule::with_floor(
                ScheduleKind::Poisson {
                    lambda: ParamMap::Fixed(lambda),
                },
                2,
            ));
        }
        for &n in &[1.0, 5.0, 20.0] {
            for &p in &[0.3, 0.7] {
                cases.push(SampleSizeSchedule::new(ScheduleKind::Binomial {
                    n: ParamMap::Fixed(n),
                    p,
                }));
            }
        }
        cases.push(SampleSizeSchedule::new(ScheduleKind::UniformInt {
            a: ParamMap::Fixed(2.0),
            b: ParamMap::Fixed(9.0),
        }));

        for schedule in &cases {
            stream += 1;
            let exact = schedule.expected_decay(1, &diag).unwrap();
            let (mc, se) = decay_monte_carlo(schedule, 1, s, stream);
            let z = (mc - exact).abs() / se.max(1e-12);
            assert!(
                z <= 4.0,
                "q {q}: schedule {schedule:?} exact {exact} vs Monte-Carlo {mc} (z = {z:.2})"
            );
        }
    }
}

#[test]
fn poisson_draw_mean_matches_parameter() {
    let schedule = SampleSizeSchedule::new(ScheduleKind::Poisson {
        lambda: ParamMap::Fixed(4.0),
    });
    let mut rng = RandomSource::new(99, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..DRAWS {
        let n = schedule.draw(1, &mut rng).unwrap() as f64;
        sum += n;
        sum_sq += n * n;
    }
    let mean = sum / DRAWS as f64;
    let variance = sum_sq / DRAWS as f64 - mean * mean;
    let se = (variance / DRAWS as f64).sqrt();
    assert!(
        (mean - 4.0).abs() <= 4.0 * se,
        "Poisson(4) sample mean {mean} off by more than 4 standard errors"
    );
    // The sample variance of a Poisson should be close to its mean as well.
    assert!((variance - 4.0).abs() < 0.2);
}

#[test]
fn binomial_draw_mean_matches_np() {
    let schedule = SampleSizeSchedule::new(ScheduleKind::Binomial {
        n: ParamMap::Fixed(20.0),
        p: 0.3,
    });
    let mut rng = RandomSource::new(17, 0);
    let mut sum = 0.0;
    for _ in 0..DRAWS {
        sum += schedule.draw(1, &mut rng).unwrap() as f64;
    }
    let mean = sum / DRAWS as f64;
    // SE of the mean = sqrt(np(1-p)/DRAWS) ~ 0.0065; allow 4x.
    assert!((mean - 6.0).abs() <= 4.0 * (20.0 * 0.3 * 0.7 / DRAWS as f64).sqrt());
}

#[test]
fn uniform_int_decay_matches_brute_force_everywhere() {
    for &q in &[0.1, 0.5, 0.75] {
        let diag = DecayDiagnostics::new(q).unwrap();
        let s = diag.half_decay();
        for &(a, b, floor) in &[(1.0, 6.0, 0u64), (2.0, 9.0, 0), (1.0, 10.0, 4)] {
            let schedule = SampleSizeSchedule::with_floor(
                ScheduleKind::UniformInt {
                    a: ParamMap::Fixed(a),
                    b: ParamMap::Fixed(b),
                },
                floor,
            );
            let exact = schedule.expected_decay(1, &diag).unwrap();
            let span = (b - a + 1.0) as u64;
            let brute: f64 = (a as u64..=b as u64)
                .map(|j| s.powi(j.max(floor) as i32))
                .sum::<f64>()
                / span as f64;
            assert!(
                (exact - brute).abs() <= 1e-12,
                "a {a} b {b} floor {floor} q {q}: {exact} vs {brute}"
            );
        }
    }
}

#[test]
fn growing_parameter_maps_change_the_draw_distribution() {
    // With lambda_k = k^(1/2), the mean at k = 100 should be near 10.
    let schedule = SampleSizeSchedule::new(ScheduleKind::Poisson {
        lambda: ParamMap::Power { p: 2.0 },
    });
    let mut rng = RandomSource::new(5, 3);
    let mut sum = 0.0;
    for _ in 0..DRAWS {
        sum += schedule.draw(100, &mut rng).unwrap() as f64;
    }
    let mean = sum / DRAWS as f64;
    assert!((mean - 10.0).abs() <= 4.0 * (10.0f64 / DRAWS as f64).sqrt());
}

#[test]
fn deterministic_schedules_have_degenerate_monte_carlo() {
    let diag = DecayDiagnostics::new(0.5).unwrap();
    let schedule = SampleSizeSchedule::new(ScheduleKind::Power { p: 2.0 });
    // k = 9 -> N = 3 always; the sample is degenerate, so the only deviation
    // from the closed form is accumulated summation rounding.
    // The standard error is pure cancellation residue of sum-of-squares
    // accumulation, several orders below any genuine sampling noise.
    let (mc, se) = decay_monte_carlo(&schedule, 9, diag.half_decay(), 77);
    assert!(se <= 1e-8);
    assert!((mc - schedule.expected_decay(9, &diag).unwrap()).abs() <= 1e-10);
}
