//! Schedules that keep some runner out of a shaded arc forever, and speed
//! sequences that force every runner into an arc infinitely often.

use crate::error::{Error, Result};
use crate::model::{harmonic_prefix, in_arc, position, Arc, Circle, Runner, RunnerSchedule, SpeedValue};
use crate::periodic::{intersect_all, occupancy, union_all, PeriodicIntervalSet};
use crate::rational::Rational;

/// Default cap on the number of runners `min_runner_count` will report.
pub const DEFAULT_RUNNER_CAP: u64 = 10_000_000;

/// Largest construction `build_no_shade` will materialize; exact start
/// positions need `H_{k-1}`, whose denominator grows like `e^k`.
pub const MAX_BUILD_RUNNERS: u64 = 20_000;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// Below this value of 1/a the threshold is found by exact summation.
const EXACT_SUMMATION_LIMIT: f64 = 7.0;

/// Smallest `k` with `H_k ≥ 1/a`, for `0 < a ≤ 1`.
pub fn min_runner_count(a: &Rational) -> Result<u64> {
    min_runner_count_capped(a, DEFAULT_RUNNER_CAP)
}

pub fn min_runner_count_capped(a: &Rational, cap: u64) -> Result<u64> {
    if !a.is_positive() || a > &Rational::one() {
        return Err(Error::OutOfRange(format!("a = {a} must lie in (0, 1]")));
    }
    let target = a.recip();
    let target_f = target.to_f64();
    let infeasible = || Error::InfeasibleScale {
        inverse_a: short_form(&target),
        ln_k_min: target_f - EULER_GAMMA,
        cap,
    };

    if target_f <= EXACT_SUMMATION_LIMIT {
        let mut acc = Rational::zero();
        let mut k = 0u64;
        while acc < target {
            k += 1;
            if k > cap {
                return Err(infeasible());
            }
            acc += &Rational::integer(k).recip();
        }
        return Ok(k);
    }

    // H_n lies in (ln n + γ + 1/2n − 1/12n², same + 1/120n⁴) for n ≥ 1.
    if !target_f.is_finite() || target_f - EULER_GAMMA > (cap as f64).ln() + 1.0 {
        return Err(infeasible());
    }
    let lower = |n: u64| {
        let n = n as f64;
        n.ln() + EULER_GAMMA + 0.5 / n - 1.0 / (12.0 * n * n)
    };
    let upper = |n: u64| lower(n) + 1.0 / (120.0 * (n as f64).powi(4));
    let margin = 1e-12;
    let smallest = |pred: &dyn Fn(u64) -> bool| -> Option<u64> {
        if !pred(cap) {
            return None;
        }
        let (mut lo, mut hi) = (1u64, cap);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if pred(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    };
    let possible = smallest(&|n| upper(n) + margin >= target_f);
    let certain = smallest(&|n| lower(n) - margin >= target_f);
    match (possible, certain) {
        (Some(p), Some(c)) if p == c => Ok(c),
        (_, Some(_)) => Err(Error::HarmonicAmbiguous(target.to_string())),
        (Some(_), None) => Err(Error::HarmonicAmbiguous(target.to_string())),
        (None, None) => Err(infeasible()),
    }
}

/// `p` for integers, `p/q` otherwise.
fn short_form(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        x.to_string()
    }
}

/// Runners `1..=k` at speeds `1..=k` on the unit circle, started so that
/// their visits to the complement of the shade relay one another.
#[derive(Clone, Debug, PartialEq)]
pub struct NoShadeConstruction {
    pub schedule: RunnerSchedule,
    pub shade_arc: Arc,
    /// Length of the complement of the shade.
    pub a: Rational,
    pub k: u64,
    /// `t_i = a·H_i` for `i = 0..=k`: runner `i` covers the complement
    /// during `[t_{i-1}, t_i]`.
    pub exit_times: Vec<Rational>,
}

/// Builds the relay schedule for a shade arc of length `ℓ < 1` on the unit
/// circle. Without `k`, the minimal feasible runner count is used.
///
/// Internally the complement is `[0, a]` and runner `i` follows
/// `f_i(t) = i·t − i·a·H_{i−1}`; output starts are rotated back so the
/// complement sits where the shade arc leaves it.
pub fn build_no_shade(shade_arc: &Arc, k: Option<u64>) -> Result<NoShadeConstruction> {
    let circle = Circle::unit();
    if shade_arc.length() >= circle.length() {
        return Err(Error::ShadeTooLong(shade_arc.length().to_string()));
    }
    let a = Rational::one() - shade_arc.length();
    let required = min_runner_count(&a)?;
    let k = match k {
        Some(k) if k < required => return Err(Error::BelowThreshold { k, required }),
        Some(k) => k,
        None => required,
    };
    if k > MAX_BUILD_RUNNERS {
        return Err(Error::OutOfRange(format!(
            "k = {k} exceeds the construction limit of {MAX_BUILD_RUNNERS} runners"
        )));
    }
    let rotation = circle.wrap(&(shade_arc.start() + shade_arc.length()));
    let h = harmonic_prefix(k);
    let runners = (1..=k)
        .map(|i| {
            let speed = Rational::integer(i);
            let start = circle.wrap(&(&rotation - &(&speed * &a * &h[(i - 1) as usize])));
            Runner::new(SpeedValue::rational(speed).expect("positive"), start)
        })
        .collect();
    let schedule = RunnerSchedule::new(circle, runners)?;
    let exit_times = h.iter().map(|hi| &a * hi).collect();
    Ok(NoShadeConstruction {
        schedule,
        shade_arc: shade_arc.clone(),
        a,
        k,
        exit_times,
    })
}

/// Outcome of a universally quantified check over one period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    /// Present exactly when `holds` is false.
    pub witness: Option<Rational>,
}

/// Times at which at least one runner is in the closed complement of `shade`.
pub fn complement_coverage(schedule: &RunnerSchedule, shade: &Arc) -> Result<PeriodicIntervalSet> {
    let circle = schedule.circle();
    let Some(complement) = shade.complement(circle) else {
        return Ok(PeriodicIntervalSet::empty(circle.length().clone()));
    };
    if schedule.is_empty() {
        return Ok(PeriodicIntervalSet::empty(circle.length().clone()));
    }
    let sets = schedule
        .runners()
        .iter()
        .map(|r| occupancy(r, &complement, circle))
        .collect::<Result<Vec<_>>>()?;
    union_all(&sets)
}

/// Checks that at every time some runner is outside the shade (in its
/// closed complement). A failing verdict carries a time at which every
/// runner is strictly inside the shade, confirmed by direct evaluation.
pub fn verify_no_shade(schedule: &RunnerSchedule, shade: &Arc) -> Result<Verdict> {
    schedule.rational_speeds()?;
    let coverage = complement_coverage(schedule, shade)?;
    if coverage.covers_period() {
        return Ok(Verdict {
            holds: true,
            witness: None,
        });
    }
    let gaps = coverage.complement();
    let gap = gaps
        .intervals()
        .iter()
        .find(|iv| !iv.is_point())
        .expect("an uncovered periodic closed set leaves an open gap");
    let witness = (&gap.lo + &gap.hi) / Rational::integer(2);
    let circle = schedule.circle();
    if let Some(complement) = shade.complement(circle) {
        for r in schedule.runners() {
            let x = position(r, &witness, circle)?;
            assert!(
                !in_arc(&x, &complement, circle),
                "witness {witness} failed direct evaluation"
            );
        }
    }
    Ok(Verdict {
        holds: false,
        witness: Some(witness),
    })
}

/// Speeds `v_1 < … < v_k` for which every start configuration brings all
/// runners into an arc of length `a` after any time.
///
/// `speeds(1, a) = [1]`; `speeds(k, a) = speeds(k−1, a/2)` followed by
/// `(2/a)` times its last entry.
pub fn build_rendezvous_speeds(k: u64, a: &Rational) -> Result<Vec<SpeedValue>> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be at least 1".into()));
    }
    if !a.is_positive() || a >= &Rational::one() {
        return Err(Error::OutOfRange(format!("arc length {a} must lie in (0, 1)")));
    }
    Ok(rendezvous_speeds(k, a)
        .into_iter()
        .map(|v| SpeedValue::rational(v).expect("positive"))
        .collect())
}

fn rendezvous_speeds(k: u64, a: &Rational) -> Vec<Rational> {
    if k == 1 {
        return vec![Rational::one()];
    }
    let mut speeds = rendezvous_speeds(k - 1, &(a / Rational::integer(2)));
    let next = Rational::integer(2) / a * speeds.last().expect("nonempty");
    speeds.push(next);
    speeds
}

/// Times at which every runner is inside the closed `arc`.
pub fn rendezvous_set(schedule: &RunnerSchedule, arc: &Arc) -> Result<PeriodicIntervalSet> {
    if schedule.is_empty() {
        return Err(Error::OutOfRange("schedule has no runners".into()));
    }
    let circle = schedule.circle();
    let sets = schedule
        .runners()
        .iter()
        .map(|r| occupancy(r, arc, circle))
        .collect::<Result<Vec<_>>>()?;
    intersect_all(&sets)
}

/// A time `t > after` at which every runner is inside the closed `arc`,
/// taken from a window of positive length during which all runners stay
/// inside. Isolated instants where runners merely touch the arc boundary
/// are not reported. `None` means no such window exists at any time.
pub fn find_rendezvous_time(schedule: &RunnerSchedule, arc: &Arc, after: &Rational) -> Result<Option<Rational>> {
    if after.is_negative() {
        return Err(Error::OutOfRange(format!("T = {after} must be nonnegative")));
    }
    Ok(rendezvous_set(schedule, arc)?.interior_point_after(after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::harmonic;

    fn q(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    fn shade(start: Rational, len: Rational) -> Arc {
        Arc::new(start, len, &Circle::unit()).unwrap()
    }

    #[test]
    fn min_runner_count_examples() {
        assert_eq!(min_runner_count(&q(1, 1)).unwrap(), 1);
        assert_eq!(min_runner_count(&q(1, 2)).unwrap(), 4);
        assert_eq!(min_runner_count(&q(1, 3)).unwrap(), 11);
        assert_eq!(min_runner_count(&q(3, 10)).unwrap(), 16);
    }

    #[test]
    fn min_runner_count_rejects_bad_a() {
        assert!(min_runner_count(&q(0, 1)).is_err());
        assert!(min_runner_count(&q(3, 2)).is_err());
        assert!(min_runner_count(&q(-1, 2)).is_err());
    }

    #[test]
    fn min_runner_count_agrees_with_exact_sums() {
        let h = harmonic_prefix(3000);
        for &(n, d) in &[(1i64, 7i64), (1, 8), (2, 17), (10, 81), (3, 25)] {
            let a = q(n, d);
            let target = a.recip();
            let exact = h.iter().position(|x| x >= &target).unwrap() as u64;
            assert_eq!(min_runner_count(&a).unwrap(), exact, "a = {a}");
        }
    }

    #[test]
    fn min_runner_count_within_exponential_bound() {
        for d in 1..=14i64 {
            for n in 1..=d {
                let a = q(n, d);
                let k = min_runner_count(&a).unwrap();
                assert!((k as f64) <= (1.0 / a.to_f64()).exp().ceil(), "a = {a}");
            }
        }
    }

    #[test]
    fn min_runner_count_reports_infeasible_scale() {
        match min_runner_count(&q(1, 1000)) {
            Err(Error::InfeasibleScale {
                inverse_a, ln_k_min, ..
            }) => {
                assert_eq!(inverse_a, "1000");
                assert!(ln_k_min > 999.0 && ln_k_min <= 1000.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            min_runner_count_capped(&q(1, 4), 20),
            Err(Error::InfeasibleScale { cap: 20, .. })
        ));
    }

    #[test]
    fn no_shade_half_circle() {
        let c = build_no_shade(&shade(q(1, 2), q(1, 2)), None).unwrap();
        assert_eq!(c.k, 4);
        assert_eq!(c.a, q(1, 2));
        let starts: Vec<_> = c.schedule.runners().iter().map(|r| r.start.clone()).collect();
        assert_eq!(starts, vec![q(0, 1), q(0, 1), q(3, 4), q(1, 3)]);
        let speeds: Vec<_> = c.schedule.runners().iter().map(|r| r.speed.clone()).collect();
        assert_eq!(speeds, (1..=4).map(SpeedValue::int).collect::<Vec<_>>());
        assert_eq!(&c.exit_times[1..], &[q(1, 2), q(3, 4), q(11, 12), q(25, 24)]);
        assert_eq!(c.exit_times[0], Rational::zero());
        assert!(verify_no_shade(&c.schedule, &c.shade_arc).unwrap().holds);
    }

    #[test]
    fn no_shade_rotation_round_trips() {
        let base = build_no_shade(&shade(q(1, 2), q(1, 2)), None).unwrap();
        let rotated = build_no_shade(&shade(q(1, 5), q(1, 2)), None).unwrap();
        let offset = q(1, 5) - q(1, 2);
        for (a, b) in base.schedule.runners().iter().zip(rotated.schedule.runners()) {
            assert_eq!(Circle::unit().wrap(&(&a.start + &offset)), b.start);
        }
        assert!(verify_no_shade(&rotated.schedule, &rotated.shade_arc).unwrap().holds);
    }

    #[test]
    fn no_shade_exit_times_close_the_period() {
        for (n, d) in [(1, 10), (1, 4), (1, 2), (2, 3), (3, 4)] {
            let c = build_no_shade(&shade(q(0, 1), q(n, d)), None).unwrap();
            assert!(c.exit_times.last().unwrap() >= &Rational::one());
            for i in 1..c.exit_times.len() {
                assert_eq!(
                    &c.exit_times[i] - &c.exit_times[i - 1],
                    &c.a / &Rational::integer(i as i64)
                );
            }
        }
    }

    #[test]
    fn no_shade_rejects_bad_inputs() {
        assert!(matches!(
            build_no_shade(&shade(q(0, 1), q(1, 2)), Some(3)),
            Err(Error::BelowThreshold { k: 3, required: 4 })
        ));
        assert!(matches!(
            build_no_shade(&Arc::full(&Circle::unit()), None),
            Err(Error::ShadeTooLong(_))
        ));
        assert!(matches!(
            build_no_shade(&shade(q(0, 1), q(999, 1000)), None),
            Err(Error::InfeasibleScale { .. })
        ));
        let c = build_no_shade(&shade(q(0, 1), q(1, 2)), Some(6)).unwrap();
        assert_eq!(c.k, 6);
    }

    #[test]
    fn occupancy_contains_relay_interval() {
        for len in [q(1, 2), q(7, 10), q(1, 5)] {
            let c = build_no_shade(&shade(q(1, 3), len), None).unwrap();
            let comp = c.shade_arc.complement(c.schedule.circle()).unwrap();
            for (i, r) in c.schedule.runners().iter().enumerate() {
                let occ = occupancy(r, &comp, c.schedule.circle()).unwrap();
                let (enter, exit) = (&c.exit_times[i], &c.exit_times[i + 1]);
                let eta = &c.a / &Rational::integer(1000 * (i as i64 + 1));
                assert!(occ.contains(enter) && occ.contains(exit), "runner {}", i + 1);
                assert!(!occ.contains(&(exit + &eta)), "runner {}", i + 1);
                if enter.is_positive() {
                    assert!(!occ.contains(&(enter - &eta)), "runner {}", i + 1);
                }
            }
        }
    }

    #[test]
    fn truncated_construction_fails_with_witness() {
        let c = build_no_shade(&shade(q(1, 2), q(1, 2)), None).unwrap();
        let v = verify_no_shade(&c.schedule.without(3), &c.shade_arc).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert!(w > q(11, 12) && w < q(1, 1));
    }

    #[test]
    fn full_shade_traps_everyone() {
        let s = RunnerSchedule::new(Circle::unit(), vec![Runner::rational(q(1, 1), q(0, 1)).unwrap()]).unwrap();
        let v = verify_no_shade(&s, &Arc::full(&Circle::unit())).unwrap();
        assert!(!v.holds);
        assert!(v.witness.is_some());
    }

    #[test]
    fn rendezvous_speed_examples() {
        let ints = |v: &[i64]| v.iter().map(|&x| SpeedValue::int(x)).collect::<Vec<_>>();
        assert_eq!(build_rendezvous_speeds(1, &q(1, 3)).unwrap(), ints(&[1]));
        assert_eq!(build_rendezvous_speeds(2, &q(1, 2)).unwrap(), ints(&[1, 4]));
        assert_eq!(build_rendezvous_speeds(4, &q(1, 2)).unwrap(), ints(&[1, 16, 128, 512]));
        assert!(build_rendezvous_speeds(3, &q(1, 1)).is_err());
        assert!(build_rendezvous_speeds(0, &q(1, 2)).is_err());
    }

    #[test]
    fn rendezvous_speed_recursion_identity() {
        for k in 2..=6u64 {
            for (n, d) in [(1, 2), (1, 3), (2, 5), (9, 10)] {
                let a = q(n, d);
                let full = rendezvous_speeds(k, &a);
                let prefix = rendezvous_speeds(k - 1, &(&a / &Rational::integer(2)));
                assert_eq!(&full[..(k - 1) as usize], &prefix[..]);
                let ratio = &full[(k - 1) as usize] / &full[(k - 2) as usize];
                assert_eq!(ratio, Rational::integer(2) / &a);
                assert!(full.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn rendezvous_time_examples() {
        let c = Circle::unit();
        let s = RunnerSchedule::new(
            c.clone(),
            vec![
                Runner::rational(q(1, 1), q(0, 1)).unwrap(),
                Runner::rational(q(4, 1), q(0, 1)).unwrap(),
            ],
        )
        .unwrap();
        let arc = Arc::new(q(0, 1), q(1, 2), &c).unwrap();
        assert_eq!(find_rendezvous_time(&s, &arc, &q(1, 5)).unwrap(), Some(q(1, 4)));
        let t = find_rendezvous_time(&s, &arc, &q(0, 1)).unwrap().unwrap();
        assert!(t > Rational::zero());
        assert!(s.positions(&t).unwrap().iter().all(|x| in_arc(x, &arc, &c)));
    }

    #[test]
    fn no_shade_schedule_never_rendezvous_in_its_shade() {
        let c = build_no_shade(&shade(q(1, 2), q(1, 2)), None).unwrap();
        assert_eq!(find_rendezvous_time(&c.schedule, &c.shade_arc, &q(0, 1)).unwrap(), None);
        // The closed shade is touched only at isolated relay instants.
        let touch = rendezvous_set(&c.schedule, &c.shade_arc).unwrap();
        assert!(touch.contains(&q(11, 12)));
        assert_eq!(touch.measure_per_period(), Rational::zero());
    }

    #[test]
    fn harmonic_matches_exit_times() {
        let c = build_no_shade(&shade(q(0, 1), q(7, 10)), None).unwrap();
        assert_eq!(c.k, 16);
        assert_eq!(c.exit_times[16], q(3, 10) * harmonic(16));
    }
}
