//! Simultaneous occupancy for runners with speeds of the form `q·√d`.
//!
//! When the speeds are rationally independent, every arc is visited by all
//! runners at once after any given time. The search here walks a uniform
//! time grid fine enough that no runner moves more than a third of the arc
//! between probes, and accepts a probe only when certified enclosures place
//! every runner within `ε` of the arc's midpoint.
//!
//! All arithmetic is exact rational arithmetic on dyadic enclosures of
//! `√d`; nothing here touches floating point.

use num_bigint::BigInt;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::model::{Arc, Circle, Runner, SpeedValue};
use crate::rational::Rational;

/// Extra bits carried beyond the requested precision and the magnitude of
/// `ξ·t`; enclosures from [`eval_position`] are at most
/// `2^-(precision_bits + GUARD_BITS)` wide.
pub const GUARD_BITS: u64 = 8;
pub const MIN_PRECISION_BITS: u64 = 64;
pub const DEFAULT_PRECISION_BITS: u64 = 128;
pub const DEFAULT_BUDGET: u64 = 10_000_000;
/// Undecided comparisons are retried at doubled precision this many times.
pub const MAX_PRECISION_DOUBLINGS: u32 = 6;

// Probes are scanned in blocks; within a block the smallest winning index wins.
const PROBE_BLOCK: u64 = 2048;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndependenceReason {
    DistinctRadicands,
    /// 1-based runner numbers of two speeds sharing a radicand.
    SharedRadicand {
        first: usize,
        second: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceCertificate {
    pub independent: bool,
    pub reason: IndependenceReason,
}

/// Speeds `q_i·√d_i` with squarefree `d_i` are rationally independent iff
/// the radicands are pairwise distinct: square roots of distinct squarefree
/// integers are linearly independent over ℚ, and two speeds sharing a
/// radicand are rational multiples of each other.
pub fn check_independence(speeds: &[SpeedValue]) -> IndependenceCertificate {
    for (i, a) in speeds.iter().enumerate() {
        for (j, b) in speeds.iter().enumerate().skip(i + 1) {
            if a.radicand() == b.radicand() {
                return IndependenceCertificate {
                    independent: false,
                    reason: IndependenceReason::SharedRadicand {
                        first: i + 1,
                        second: j + 1,
                    },
                };
            }
        }
    }
    IndependenceCertificate {
        independent: true,
        reason: IndependenceReason::DistinctRadicands,
    }
}

/// A closed rational interval `[lo, hi]` known to contain some real value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enclosure {
    pub fn point(x: Rational) -> Self {
        Enclosure { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    fn shift(&self, by: &Rational) -> Enclosure {
        Enclosure {
            lo: &self.lo + by,
            hi: &self.hi + by,
        }
    }

    fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::integer(2)
    }

    /// Enclosure of `|x|`.
    fn abs(&self) -> Enclosure {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            Enclosure {
                lo: -&self.hi,
                hi: -&self.lo,
            }
        } else {
            Enclosure {
                lo: Rational::zero(),
                hi: Rational::max_of(-&self.lo, self.hi.clone()),
            }
        }
    }
}

fn pow2(bits: u64) -> BigInt {
    BigInt::from(1u8) << bits as usize
}

fn div_floor(n: &BigInt, d: &BigInt) -> BigInt {
    num_integer::Integer::div_floor(n, d)
}

fn div_ceil(n: &BigInt, d: &BigInt) -> BigInt {
    -num_integer::Integer::div_floor(&-n, d)
}

/// Enclosure of `speed · t` with width at most `2^-(precision_bits + GUARD_BITS)`.
pub fn eval_displacement(speed: &SpeedValue, t: &Rational, precision_bits: u64) -> Enclosure {
    let c = speed.coeff() * t;
    if speed.is_rational() || c.is_zero() {
        return Enclosure::point(c);
    }
    let root_floor = BigInt::from(speed.radicand()).sqrt();
    let magnitude = (Rational::integer(c.abs().ceil_int()) * Rational::integer(&root_floor + 1u8)).magnitude_bits() + 1;
    let bits = precision_bits + GUARD_BITS + magnitude;
    let scale = pow2(bits);
    // s ≤ 2^bits·√d < s + 1
    let s = (BigInt::from(speed.radicand()) << (2 * bits as usize)).sqrt();
    let (num, den) = (c.numer(), c.denom());
    let (a, b) = (num * &s, num * (&s + 1u8));
    let (small, large) = if num.is_negative() { (b, a) } else { (a, b) };
    let lo = Rational::new(div_floor(&small, den), scale.clone()).expect("nonzero scale");
    let hi = Rational::new(div_ceil(&large, den), scale).expect("nonzero scale");
    Enclosure { lo, hi }
}

/// Certified enclosure of the position `(β + ξ·t) mod L`.
///
/// `lo` is reduced into `[0, L)`; `hi` may exceed `L` by the enclosure width
/// when the true position is near the seam. Rational speeds give a point.
pub fn eval_position(runner: &Runner, t: &Rational, circle: &Circle, precision_bits: u64) -> Enclosure {
    let raw = eval_displacement(&runner.speed, t, precision_bits).shift(&runner.start);
    let laps = (&raw.lo / circle.length()).floor_int();
    raw.shift(&-(circle.length() * &Rational::integer(laps)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// Inside the closed arc, at least `clearance` from either endpoint.
    Inside {
        clearance: Rational,
    },
    Outside,
    Undecided,
}

/// Decides whether an enclosed position lies in the closed arc.
pub fn arc_membership(position: &Enclosure, arc: &Arc, circle: &Circle) -> Membership {
    if arc.is_full(circle) {
        return Membership::Inside {
            clearance: circle.length().clone(),
        };
    }
    let width = position.width();
    if &width >= circle.length() {
        return Membership::Undecided;
    }
    let rel_lo = circle.wrap(&(&position.lo - arc.start()));
    let rel_hi = &rel_lo + &width;
    if &rel_hi <= arc.length() {
        let clearance = Rational::min_of(rel_lo, arc.length() - &rel_hi);
        Membership::Inside { clearance }
    } else if &rel_lo > arc.length() && &rel_hi < circle.length() {
        Membership::Outside
    } else {
        Membership::Undecided
    }
}

/// One search problem: find `t > T` with every runner inside `arc`.
#[derive(Clone, Debug, PartialEq)]
pub struct KroneckerQuery {
    pub runners: Vec<Runner>,
    pub arc: Arc,
    pub after: Rational,
    /// `α_m`; the default `a/2 + 1 − β'_m` aims each runner at the arc midpoint,
    /// with `β'_m` the start measured from the arc's start.
    pub targets: Vec<Rational>,
    /// `ε`; defaults to a third of the arc length (half the circle for a full arc).
    pub tolerance: Rational,
    pub budget: u64,
    pub precision_bits: u64,
}

impl KroneckerQuery {
    /// A query on the unit circle with the default targets and tolerance.
    pub fn new(runners: Vec<Runner>, arc: Arc, after: Rational) -> Result<Self> {
        let circle = Circle::unit();
        if runners.is_empty() {
            return Err(Error::OutOfRange("query has no runners".into()));
        }
        if after.is_negative() {
            return Err(Error::OutOfRange(format!("T = {after} must be nonnegative")));
        }
        for (i, r) in runners.iter().enumerate() {
            if r.start.is_negative() || r.start >= Rational::one() {
                return Err(Error::StartOutOfRange {
                    runner: i + 1,
                    start: r.start.to_string(),
                    length: "1/1".into(),
                });
            }
        }
        let a = arc.length().clone();
        let half = &a / &Rational::integer(2);
        let targets = runners
            .iter()
            .map(|r| &half + &Rational::one() - circle.wrap(&(&r.start - arc.start())))
            .collect();
        let tolerance = if arc.is_full(&circle) {
            half
        } else {
            &a / &Rational::integer(3)
        };
        Ok(KroneckerQuery {
            runners,
            arc,
            after,
            targets,
            tolerance,
            budget: DEFAULT_BUDGET,
            precision_bits: DEFAULT_PRECISION_BITS,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_precision(mut self, precision_bits: u64) -> Result<Self> {
        if precision_bits < MIN_PRECISION_BITS {
            return Err(Error::OutOfRange(format!(
                "precision {precision_bits} below the minimum of {MIN_PRECISION_BITS} bits"
            )));
        }
        self.precision_bits = precision_bits;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tolerance: Rational) -> Result<Self> {
        if !tolerance.is_positive() {
            return Err(Error::OutOfRange(format!("tolerance {tolerance} must be positive")));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn with_targets(mut self, targets: Vec<Rational>) -> Result<Self> {
        if targets.len() != self.runners.len() {
            return Err(Error::OutOfRange("one target per runner required".into()));
        }
        self.targets = targets;
        Ok(self)
    }

    /// Grid step `δ = a / (3·ξ_max)`, using a rational upper bound on `ξ_max`
    /// so that no runner advances more than `a/3` between probes.
    pub fn step(&self) -> Rational {
        let fastest = self
            .runners
            .iter()
            .map(|r| r.speed.upper_bound(32))
            .max()
            .expect("query has runners");
        self.arc.length() / &(Rational::integer(3) * fastest)
    }

    pub fn probe_time(&self, index: u64) -> Rational {
        &self.after + &(self.step() * Rational::integer(index))
    }
}

/// `|t·ξ − p − α|` for the nearest integer `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Margin {
    pub p: BigInt,
    pub distance: Enclosure,
}

fn margin(speed: &SpeedValue, target: &Rational, t: &Rational, bits: u64) -> Margin {
    let offset = eval_displacement(speed, t, bits).shift(&-target);
    let p = offset.midpoint().round_int();
    let distance = offset.shift(&-Rational::integer(p.clone())).abs();
    Margin { p, distance }
}

/// Certified margins of every runner at `t`, with the query's targets.
pub fn certify_margins(query: &KroneckerQuery, t: &Rational, precision_bits: u64) -> Vec<Margin> {
    query
        .runners
        .iter()
        .zip(&query.targets)
        .map(|(r, target)| margin(&r.speed, target, t, precision_bits))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct KroneckerWitness {
    pub t: Rational,
    /// Index of the winning probe (`t = T + probes_used·δ`).
    pub probes_used: u64,
    pub p: Vec<BigInt>,
    /// Enclosures of `|t·ξ_m − p_m − α_m|`, each with upper end `≤ ε`.
    pub margins: Vec<Enclosure>,
    /// Precision at which the witness was certified.
    pub precision_bits: u64,
    pub all_in_arc: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome {
    Found(KroneckerWitness),
    /// No probe in the budget succeeded; `next_after` resumes the scan.
    BudgetExhausted {
        probes: u64,
        next_after: Rational,
    },
}

enum ProbeResult {
    Reject,
    Accept(KroneckerWitness),
    Undecided,
}

fn probe_at(query: &KroneckerQuery, index: u64, t: &Rational, bits: u64) -> ProbeResult {
    let circle = Circle::unit();
    let mut undecided = false;
    let mut margins = Vec::with_capacity(query.runners.len());
    for (r, target) in query.runners.iter().zip(&query.targets) {
        let m = margin(&r.speed, target, t, bits);
        if m.distance.lo > query.tolerance {
            return ProbeResult::Reject;
        }
        if m.distance.hi > query.tolerance {
            undecided = true;
        }
        margins.push(m);
    }
    if undecided {
        return ProbeResult::Undecided;
    }
    for r in &query.runners {
        match arc_membership(&eval_position(r, t, &circle, bits), &query.arc, &circle) {
            Membership::Inside { .. } => {}
            Membership::Outside => return ProbeResult::Reject,
            Membership::Undecided => return ProbeResult::Undecided,
        }
    }
    let (p, margins) = margins.into_iter().map(|m| (m.p, m.distance)).unzip();
    ProbeResult::Accept(KroneckerWitness {
        t: t.clone(),
        probes_used: index,
        p,
        margins,
        precision_bits: bits,
        all_in_arc: true,
    })
}

fn probe(query: &KroneckerQuery, index: u64, step: &Rational) -> Result<Option<KroneckerWitness>> {
    let t = &query.after + &(step * &Rational::integer(index));
    let mut bits = query.precision_bits;
    for _ in 0..=MAX_PRECISION_DOUBLINGS {
        match probe_at(query, index, &t, bits) {
            ProbeResult::Reject => return Ok(None),
            ProbeResult::Accept(w) => return Ok(Some(w)),
            ProbeResult::Undecided => bits *= 2,
        }
    }
    Err(Error::PrecisionExhausted { bits: bits / 2 })
}

fn first_in_block(query: &KroneckerQuery, lo: u64, hi: u64, step: &Rational) -> Option<Result<KroneckerWitness>> {
    let check = |j: u64| probe(query, j, step).transpose();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (lo..hi).into_par_iter().find_map_first(check)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (lo..hi).find_map(check)
    }
}

/// Scans probes `t_j = T + j·δ` for `j = 1..=budget` and returns the first
/// one at which every runner is certified within `ε` of its target. The
/// result does not depend on how many worker threads run the scan.
///
/// Termination within any particular budget is not guaranteed; for
/// rationally dependent speeds no witness may exist at all.
pub fn kronecker_search(query: &KroneckerQuery) -> Result<SearchOutcome> {
    if query.precision_bits < MIN_PRECISION_BITS {
        return Err(Error::OutOfRange(format!(
            "precision {} below the minimum of {MIN_PRECISION_BITS} bits",
            query.precision_bits
        )));
    }
    let step = query.step();
    let mut lo = 1u64;
    while lo <= query.budget {
        let hi = query.budget.saturating_add(1).min(lo.saturating_add(PROBE_BLOCK));
        if let Some(found) = first_in_block(query, lo, hi, &step) {
            return found.map(SearchOutcome::Found);
        }
        lo = hi;
    }
    Ok(SearchOutcome::BudgetExhausted {
        probes: query.budget,
        next_after: &query.after + &(step * Rational::integer(query.budget)),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessCheck {
    pub holds: bool,
    /// Per runner: a lower bound on the distance to the nearer arc endpoint,
    /// or `None` when the runner is certified outside.
    pub clearances: Vec<Option<Rational>>,
    pub precision_bits: u64,
}

/// Independently re-evaluates every position at `t` and checks it lies in
/// the closed arc on the unit circle.
pub fn verify_witness(runners: &[Runner], arc: &Arc, t: &Rational, precision_bits: u64) -> Result<WitnessCheck> {
    let circle = Circle::unit();
    let mut clearances = Vec::with_capacity(runners.len());
    let mut used = precision_bits;
    for r in runners {
        let mut bits = precision_bits;
        let mut decided = None;
        for _ in 0..=MAX_PRECISION_DOUBLINGS {
            match arc_membership(&eval_position(r, t, &circle, bits), arc, &circle) {
                Membership::Inside { clearance } => {
                    decided = Some(Some(clearance));
                    break;
                }
                Membership::Outside => {
                    decided = Some(None);
                    break;
                }
                Membership::Undecided => bits *= 2,
            }
        }
        let Some(decided) = decided else {
            return Err(Error::PrecisionExhausted { bits: bits / 2 });
        };
        used = used.max(bits);
        clearances.push(decided);
    }
    Ok(WitnessCheck {
        holds: clearances.iter().all(Option::is_some),
        clearances,
        precision_bits: used,
    })
}
