//! Exact periodic subsets of the time axis.
//!
//! A [`PeriodicIntervalSet`] is a closed set `S ⊂ [0, ∞)` with `S + P = S`,
//! stored as the components of `S ∩ [0, P)`. Each component is a closed
//! interval `[lo, hi]` with `0 ≤ lo < P` and `hi ≤ P`; an interval with
//! `hi = P` stands for `[lo, P)` and continues across the seam into the
//! interval that starts at `0`. Components are sorted and separated by
//! positive gaps. A component ending at `P` always has a partner starting
//! at `0` (possibly the single point `[0, 0]`), which keeps the set closed.
//!
//! Binary operations lift both operands to the least common period first.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::model::{Arc, Circle, Runner};
use crate::rational::Rational;

/// Upper limit on the number of intervals any single lifted set may hold.
pub const MAX_LIFTED_INTERVALS: u128 = 1 << 26;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeriodicIntervalSet {
    period: Rational,
    intervals: Vec<Interval>,
}

impl PeriodicIntervalSet {
    pub fn empty(period: Rational) -> Self {
        assert!(period.is_positive(), "period must be positive");
        PeriodicIntervalSet {
            period,
            intervals: Vec::new(),
        }
    }

    pub fn full(period: Rational) -> Self {
        assert!(period.is_positive(), "period must be positive");
        PeriodicIntervalSet {
            intervals: vec![Interval::new(Rational::zero(), period.clone())],
            period,
        }
    }

    /// The periodic closure of arbitrary closed intervals on the real line:
    /// the union over `n ∈ ℤ` of `[lo + nP, hi + nP]`.
    pub fn from_intervals<I>(period: Rational, raw: I) -> Self
    where
        I: IntoIterator<Item = Interval>,
    {
        assert!(period.is_positive(), "period must be positive");
        let mut pieces = Vec::new();
        for iv in raw {
            if !push_periodic(&period, &iv.lo, &iv.hi, &mut pieces) {
                return PeriodicIntervalSet::full(period);
            }
        }
        PeriodicIntervalSet::from_pieces(period, pieces)
    }

    /// Pieces already lie in `[0, P]`; sorts, merges and restores the seam rule.
    fn from_pieces(period: Rational, mut pieces: Vec<Interval>) -> Self {
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
        let mut merged: Vec<Interval> = Vec::with_capacity(pieces.len());
        for iv in pieces {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        let ends_at_period = merged.last().is_some_and(|l| l.hi == period);
        let starts_at_zero = merged.first().is_some_and(|f| f.lo.is_zero());
        if ends_at_period && !starts_at_zero {
            merged.insert(0, Interval::new(Rational::zero(), Rational::zero()));
        }
        PeriodicIntervalSet {
            period,
            intervals: merged,
        }
    }

    pub fn period(&self) -> &Rational {
        &self.period
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// True iff every time belongs to the set.
    pub fn covers_period(&self) -> bool {
        self.intervals.len() == 1 && self.intervals[0].lo.is_zero() && self.intervals[0].hi == self.period
    }

    pub fn measure_per_period(&self) -> Rational {
        self.intervals.iter().map(Interval::length).sum()
    }

    pub fn contains(&self, t: &Rational) -> bool {
        let s = t.rem_euclid(&self.period);
        // First interval with hi >= s.
        let idx = self.intervals.partition_point(|iv| iv.hi < s);
        self.intervals.get(idx).is_some_and(|iv| iv.lo <= s)
    }

    /// Re-expresses the set over `period`, which must be a positive integer
    /// multiple of the current period.
    pub fn lift(&self, period: &Rational) -> Result<Self> {
        if period == &self.period {
            return Ok(self.clone());
        }
        let ratio = period / &self.period;
        if !ratio.is_integer() || !ratio.is_positive() {
            return Err(Error::OutOfRange(format!(
                "{period} is not a multiple of the period {}",
                self.period
            )));
        }
        let copies = ratio.numer().to_u128().unwrap_or(u128::MAX);
        let count = copies.saturating_mul(self.intervals.len() as u128);
        if count > MAX_LIFTED_INTERVALS {
            return Err(Error::IntervalBudget {
                count,
                budget: MAX_LIFTED_INTERVALS,
            });
        }
        let mut pieces = Vec::with_capacity(count as usize);
        let mut offset = Rational::zero();
        for _ in 0..copies {
            for iv in &self.intervals {
                pieces.push(Interval::new(&iv.lo + &offset, &iv.hi + &offset));
            }
            offset += &self.period;
        }
        Ok(PeriodicIntervalSet::from_pieces(period.clone(), pieces))
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        let (a, b) = lift_pair(self, other)?;
        let mut pieces = a.intervals;
        pieces.extend(b.intervals);
        Ok(PeriodicIntervalSet::from_pieces(a.period, pieces))
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        let (a, b) = lift_pair(self, other)?;
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.intervals.len() && j < b.intervals.len() {
            let x = &a.intervals[i];
            let y = &b.intervals[j];
            let lo = if x.lo >= y.lo { &x.lo } else { &y.lo };
            let hi = if x.hi <= y.hi { &x.hi } else { &y.hi };
            if lo <= hi {
                out.push(Interval::new(lo.clone(), hi.clone()));
            }
            match x.hi.cmp(&y.hi) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(PeriodicIntervalSet::from_pieces(a.period, out))
    }

    /// Closure of the complement. Isolated points of `self` do not survive
    /// (the complement of a point is the whole line, after closure).
    pub fn complement(&self) -> Self {
        let period = &self.period;
        if self.intervals.is_empty() {
            return PeriodicIntervalSet::full(period.clone());
        }
        if self.covers_period() {
            return PeriodicIntervalSet::empty(period.clone());
        }
        // View S ∩ [0, P] as closed: P belongs to it exactly when 0 does.
        let mut closed: Vec<&Interval> = self.intervals.iter().collect();
        let seam_point = Interval::new(period.clone(), period.clone());
        let contains_zero = self.intervals[0].lo.is_zero();
        if contains_zero && self.intervals.last().is_some_and(|l| &l.hi < period) {
            closed.push(&seam_point);
        }
        let mut gaps = Vec::with_capacity(closed.len() + 1);
        if !contains_zero {
            gaps.push(Interval::new(Rational::zero(), closed[0].lo.clone()));
        }
        for pair in closed.windows(2) {
            gaps.push(Interval::new(pair[0].hi.clone(), pair[1].lo.clone()));
        }
        let last_hi = &closed[closed.len() - 1].hi;
        if last_hi < period {
            gaps.push(Interval::new(last_hi.clone(), period.clone()));
        }
        PeriodicIntervalSet::from_pieces(period.clone(), gaps)
    }

    /// The closure of the interior: drops isolated points.
    pub fn regularized(&self) -> Self {
        let keeps_seam = self
            .intervals
            .last()
            .is_some_and(|l| l.hi == self.period && !l.is_point());
        let intervals = self
            .intervals
            .iter()
            .filter(|iv| !iv.is_point() || (keeps_seam && iv.lo.is_zero()))
            .cloned()
            .collect();
        PeriodicIntervalSet {
            period: self.period.clone(),
            intervals,
        }
    }

    /// Smallest member `t ≥ after`, or `None` for the empty set. When present
    /// the result is below `after + P`.
    pub fn first_point_at_or_after(&self, after: &Rational) -> Option<Rational> {
        let first = self.intervals.first()?;
        let s = after.rem_euclid(&self.period);
        let base = after - &s;
        let idx = self.intervals.partition_point(|iv| iv.hi < s);
        Some(match self.intervals.get(idx) {
            Some(iv) if iv.lo <= s => after.clone(),
            Some(iv) => base + &iv.lo,
            None => base + &self.period + &first.lo,
        })
    }

    /// A member strictly greater than `after` lying in a component of positive
    /// length: the start of the next such component, or, when `after` sits
    /// inside one, the midpoint between `after` and that component's end.
    pub fn interior_point_after(&self, after: &Rational) -> Option<Rational> {
        let reg = self.regularized();
        let first = reg.intervals.first()?;
        let s = after.rem_euclid(&reg.period);
        let base = after - &s;
        let idx = reg.intervals.partition_point(|iv| iv.hi <= s);
        Some(match reg.intervals.get(idx) {
            Some(iv) if iv.lo <= s => {
                let end = &base + &iv.hi;
                (after + &end) / Rational::integer(2)
            }
            Some(iv) => base + &iv.lo,
            None => base + &reg.period + &first.lo,
        })
    }

    /// CSV: a `period,P` header row followed by one `lo,hi` row per interval.
    pub fn to_csv(&self) -> String {
        let mut out = format!("period,{}\n", self.period);
        for iv in &self.intervals {
            let _ = writeln!(out, "{},{}", iv.lo, iv.hi);
        }
        out
    }
}

/// Pushes the reduction of `[lo, hi]` modulo `period`. Returns `false` if the
/// interval is at least one period long (the set is then everything).
fn push_periodic(period: &Rational, lo: &Rational, hi: &Rational, out: &mut Vec<Interval>) -> bool {
    let width = hi - lo;
    assert!(!width.is_negative(), "interval endpoints out of order");
    if &width >= period {
        return false;
    }
    let lo = lo.rem_euclid(period);
    let hi = &lo + &width;
    if &hi <= period {
        out.push(Interval::new(lo, hi));
    } else {
        let wrapped = &hi - period;
        out.push(Interval::new(lo, period.clone()));
        out.push(Interval::new(Rational::zero(), wrapped));
    }
    true
}

fn lift_pair(a: &PeriodicIntervalSet, b: &PeriodicIntervalSet) -> Result<(PeriodicIntervalSet, PeriodicIntervalSet)> {
    let period = a.period.lcm(&b.period);
    Ok((a.lift(&period)?, b.lift(&period)?))
}

/// Least common multiple of the periods; `None` for an empty list.
pub fn common_period(sets: &[PeriodicIntervalSet]) -> Option<Rational> {
    let mut iter = sets.iter();
    let first = iter.next()?.period.clone();
    Some(iter.fold(first, |acc, s| acc.lcm(&s.period)))
}

/// The set of times at which `runner` is inside the closed `arc`.
///
/// The period is `L / v`; the runner enters the arc at `((s - β) mod L) / v`
/// and stays for `|arc| / v`.
pub fn occupancy(runner: &Runner, arc: &Arc, circle: &Circle) -> Result<PeriodicIntervalSet> {
    let speed = runner.rational_speed()?;
    let period = circle.length() / speed;
    if arc.is_full(circle) {
        return Ok(PeriodicIntervalSet::full(period));
    }
    let enter = circle.wrap(&(arc.start() - &runner.start)) / speed;
    let leave = &enter + &(arc.length() / speed);
    Ok(PeriodicIntervalSet::from_intervals(
        period,
        [Interval::new(enter, leave)],
    ))
}

fn lift_all(sets: &[PeriodicIntervalSet]) -> Result<Vec<PeriodicIntervalSet>> {
    let period = common_period(sets).ok_or_else(|| Error::OutOfRange("no sets to combine".into()))?;
    let total: u128 = sets
        .iter()
        .map(|s| {
            let copies = (&period / &s.period).numer().to_u128().unwrap_or(u128::MAX);
            copies.saturating_mul(s.intervals.len().max(1) as u128)
        })
        .fold(0u128, u128::saturating_add);
    if total > MAX_LIFTED_INTERVALS {
        return Err(Error::IntervalBudget {
            count: total,
            budget: MAX_LIFTED_INTERVALS,
        });
    }
    sets.iter().map(|s| s.lift(&period)).collect()
}

fn reduce_pairwise<F>(sets: Vec<PeriodicIntervalSet>, op: &F) -> Result<PeriodicIntervalSet>
where
    F: Fn(&PeriodicIntervalSet, &PeriodicIntervalSet) -> Result<PeriodicIntervalSet> + Sync,
{
    if sets.len() == 1 {
        return Ok(sets.into_iter().next().expect("one set"));
    }
    let mut left = sets;
    let right = left.split_off(left.len() / 2);
    #[cfg(feature = "parallel")]
    let (l, r) = rayon::join(|| reduce_pairwise(left, op), || reduce_pairwise(right, op));
    #[cfg(not(feature = "parallel"))]
    let (l, r) = (reduce_pairwise(left, op), reduce_pairwise(right, op));
    op(&l?, &r?)
}

/// Union of every set, over their common period.
pub fn union_all(sets: &[PeriodicIntervalSet]) -> Result<PeriodicIntervalSet> {
    reduce_pairwise(lift_all(sets)?, &PeriodicIntervalSet::union)
}

/// Intersection of every set, over their common period.
pub fn intersect_all(sets: &[PeriodicIntervalSet]) -> Result<PeriodicIntervalSet> {
    reduce_pairwise(lift_all(sets)?, &PeriodicIntervalSet::intersect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{in_arc, position};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    fn iv(lo: Rational, hi: Rational) -> Interval {
        Interval::new(lo, hi)
    }

    fn set(period: Rational, ivs: &[(i64, i64, i64, i64)]) -> PeriodicIntervalSet {
        PeriodicIntervalSet::from_intervals(period, ivs.iter().map(|&(a, b, c, d)| iv(q(a, b), q(c, d))))
    }

    #[test]
    fn occupancy_examples() {
        let c = Circle::unit();
        let a = q(1, 3);
        let r = Runner::rational(q(1, 1), q(0, 1)).unwrap();
        let occ = occupancy(&r, &Arc::new(q(0, 1), a.clone(), &c).unwrap(), &c).unwrap();
        assert_eq!(occ.period(), &q(1, 1));
        assert_eq!(occ.intervals(), &[iv(q(0, 1), a)]);

        let full = occupancy(&Runner::rational(q(3, 1), q(1, 7)).unwrap(), &Arc::full(&c), &c).unwrap();
        assert_eq!(full.period(), &q(1, 3));
        assert!(full.covers_period());

        let r2 = Runner::rational(q(2, 1), q(0, 1)).unwrap();
        let occ = occupancy(&r2, &Arc::new(q(0, 1), q(1, 4), &c).unwrap(), &c).unwrap();
        assert_eq!(occ.period(), &q(1, 2));
        assert_eq!(occ.intervals(), &[iv(q(0, 1), q(1, 8))]);
    }

    #[test]
    fn occupancy_ending_on_the_seam_keeps_zero() {
        let c = Circle::unit();
        let r = Runner::rational(q(1, 1), q(1, 2)).unwrap();
        let occ = occupancy(&r, &Arc::new(q(0, 1), q(1, 2), &c).unwrap(), &c).unwrap();
        assert_eq!(occ.intervals(), &[iv(q(0, 1), q(0, 1)), iv(q(1, 2), q(1, 1))]);
        assert!(occ.contains(&q(0, 1)));
        assert!(occ.contains(&q(3, 1)));
    }

    #[test]
    fn common_period_examples() {
        let s = |p: Rational| PeriodicIntervalSet::empty(p);
        assert_eq!(common_period(&[s(q(1, 2)), s(q(1, 3))]), Some(q(1, 1)));
        assert_eq!(common_period(&[s(q(1, 1))]), Some(q(1, 1)));
        assert_eq!(common_period(&[s(q(1, 2)), s(q(3, 4))]), Some(q(3, 2)));
        assert_eq!(common_period(&[]), None);
    }

    #[test]
    fn boolean_identities() {
        let s = set(q(1, 1), &[(0, 1, 1, 4), (1, 2, 2, 3)]);
        let empty = PeriodicIntervalSet::empty(q(1, 1));
        assert_eq!(s.union(&empty).unwrap(), s);
        assert_eq!(s.intersect(&s).unwrap(), s);
    }

    #[test]
    fn complement_seam_round_trip() {
        let s = set(q(1, 1), &[(0, 1, 1, 4)]);
        let c = s.complement();
        assert_eq!(c.intervals(), &[iv(q(0, 1), q(0, 1)), iv(q(1, 4), q(1, 1))]);
        assert_eq!(c.complement(), s);
        assert!(c.contains(&q(0, 1)) && c.contains(&q(1, 4)) && !c.contains(&q(1, 8)));
        assert_eq!(c.to_csv(), "period,1/1\n0/1,0/1\n1/4,1/1\n");
    }

    #[test]
    fn complement_of_extremes() {
        let p = q(2, 3);
        assert!(PeriodicIntervalSet::empty(p.clone()).complement().covers_period());
        assert!(PeriodicIntervalSet::full(p).complement().is_empty());
    }

    #[test]
    fn queries_on_trivial_sets() {
        let empty = PeriodicIntervalSet::empty(q(1, 1));
        assert!(empty.is_empty());
        assert_eq!(empty.measure_per_period(), Rational::zero());
        assert_eq!(empty.first_point_at_or_after(&q(3, 1)), None);
        let full = PeriodicIntervalSet::full(q(5, 2));
        assert!(full.covers_period());
        assert_eq!(full.measure_per_period(), q(5, 2));
    }

    #[test]
    fn first_point_examples() {
        let s = set(q(1, 4), &[(0, 1, 1, 8)]);
        assert_eq!(s.first_point_at_or_after(&q(1, 5)), Some(q(1, 4)));
        assert_eq!(s.first_point_at_or_after(&q(1, 16)), Some(q(1, 16)));
        assert_eq!(s.first_point_at_or_after(&q(9, 8)), Some(q(9, 8)));
    }

    #[test]
    fn interior_point_skips_isolated_points() {
        let s = set(q(1, 1), &[(0, 1, 1, 8), (1, 4, 3, 8), (1, 2, 1, 2)]);
        assert_eq!(s.interior_point_after(&q(1, 5)), Some(q(1, 4)));
        assert_eq!(s.interior_point_after(&q(3, 8)), Some(q(1, 1)));
        assert_eq!(s.interior_point_after(&q(1, 4)), Some(q(5, 16)));
        let points = set(q(1, 1), &[(1, 3, 1, 3)]);
        assert_eq!(points.interior_point_after(&q(0, 1)), None);
    }

    #[test]
    fn wrapping_raw_interval_is_split() {
        let s = set(q(1, 1), &[(3, 4, 5, 4)]);
        assert_eq!(s.intervals(), &[iv(q(0, 1), q(1, 4)), iv(q(3, 4), q(1, 1))]);
        assert_eq!(s.measure_per_period(), q(1, 2));
        let lifted = s.lift(&q(2, 1)).unwrap();
        assert_eq!(
            lifted.intervals(),
            &[iv(q(0, 1), q(1, 4)), iv(q(3, 4), q(5, 4)), iv(q(7, 4), q(2, 1))]
        );
    }

    #[test]
    fn lift_rejects_non_multiples() {
        let s = set(q(1, 2), &[(0, 1, 1, 8)]);
        assert!(s.lift(&q(3, 4)).is_err());
    }

    // Strategy: a regular closed set made of positive-length intervals.
    fn arb_set() -> impl Strategy<Value = PeriodicIntervalSet> {
        let period =
            prop_oneof![Just(1i64), Just(2), Just(3), Just(4), Just(6)].prop_flat_map(|pn| (Just(pn), 1i64..4));
        period.prop_flat_map(|(pn, pd)| {
            prop::collection::vec((0i64..48, 1i64..12), 0..5).prop_map(move |raw| {
                let p = q(pn, pd);
                let ivs = raw.into_iter().map(|(start, len)| {
                    let lo = q(start, 48) * &p;
                    let hi = &lo + &(q(len, 48) * &p);
                    iv(lo, hi)
                });
                PeriodicIntervalSet::from_intervals(p.clone(), ivs)
            })
        })
    }

    fn brute_member(set: &PeriodicIntervalSet, t: &Rational) -> bool {
        let s = t.rem_euclid(set.period());
        set.intervals().iter().any(|iv| iv.lo <= s && s <= iv.hi)
    }

    proptest! {
        #[test]
        fn inclusion_exclusion(a in arb_set(), b in arb_set()) {
            let u = a.union(&b).unwrap();
            let i = a.intersect(&b).unwrap();
            let p = u.period().clone();
            let scale = |s: &PeriodicIntervalSet| s.measure_per_period() * (&p / s.period());
            prop_assert_eq!(scale(&a) + scale(&b), u.measure_per_period() + i.measure_per_period());
        }

        #[test]
        fn double_complement(a in arb_set()) {
            prop_assert_eq!(a.complement().complement(), a);
        }

        #[test]
        fn union_and_intersection_membership(a in arb_set(), b in arb_set(), tn in 0i64..5000) {
            let t = q(tn, 97);
            let u = a.union(&b).unwrap();
            let i = a.intersect(&b).unwrap();
            prop_assert_eq!(u.contains(&t), brute_member(&a, &t) || brute_member(&b, &t));
            prop_assert_eq!(i.contains(&t), brute_member(&a, &t) && brute_member(&b, &t));
        }

        #[test]
        fn first_point_is_earliest_member(a in arb_set(), tn in 0i64..2000) {
            let t = q(tn, 37);
            match a.first_point_at_or_after(&t) {
                None => prop_assert!(a.is_empty()),
                Some(x) => {
                    prop_assert!(x >= t && x < &t + a.period());
                    prop_assert!(a.contains(&x));
                    // No member in [t, x): the complement's closure covers it.
                    if x > t {
                        let mid = (&t + &x) / Rational::integer(2);
                        prop_assert!(!a.contains(&t) && !a.contains(&mid));
                        let gap = a.complement();
                        for k in 0..8 {
                            let probe = &t + &((&x - &t) * q(k, 8));
                            prop_assert!(gap.contains(&probe));
                        }
                    }
                }
            }
        }

        #[test]
        fn occupancy_matches_direct_evaluation(
            vn in 1i64..12, vd in 1i64..6, beta in 0i64..60, start in 0i64..60, len in 1i64..=60,
            times in prop::collection::vec((0i64..100_000, 1i64..500), 40)
        ) {
            let c = Circle::unit();
            let r = Runner::rational(q(vn, vd), q(beta, 60)).unwrap();
            let arc = Arc::new(q(start, 60), q(len, 60), &c).unwrap();
            let occ = occupancy(&r, &arc, &c).unwrap();
            prop_assert_eq!(occ.measure_per_period(), arc.length() / &q(vn, vd));
            for (tn, td) in times {
                let t = q(tn, td);
                let direct = in_arc(&position(&r, &t, &c).unwrap(), &arc, &c);
                prop_assert_eq!(occ.contains(&t), direct);
            }
        }
    }
}
