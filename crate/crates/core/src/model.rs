//! Circles, arcs, runners and schedules.

use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Harmonic number `H_n = 1 + 1/2 + ... + 1/n`, with `H_0 = 0`.
pub fn harmonic(n: u64) -> Rational {
    (1..=n).map(|i| Rational::integer(i).recip()).sum()
}

/// Every `H_i` for `i = 0..=n`.
pub fn harmonic_prefix(n: u64) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = Rational::zero();
    out.push(acc.clone());
    for i in 1..=n {
        acc += &Rational::integer(i).recip();
        out.push(acc.clone());
    }
    out
}

/// Smallest prime factor `p` with `p^2 | n`, if any.
fn square_factor(n: u64) -> Option<u64> {
    let mut m = n;
    let mut p = 2u64;
    while p.saturating_mul(p) <= m {
        if m.is_multiple_of(p) {
            m /= p;
            if m.is_multiple_of(p) {
                return Some(p);
            }
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    None
}

/// A speed `coeff * sqrt(radicand)` with a positive rational coefficient and
/// a squarefree radicand. `radicand == 1` means the speed is rational.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpeed", into = "RawSpeed")]
pub struct SpeedValue {
    coeff: Rational,
    radicand: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpeed {
    coeff: Rational,
    radicand: u64,
}

impl TryFrom<RawSpeed> for SpeedValue {
    type Error = Error;
    fn try_from(raw: RawSpeed) -> Result<Self> {
        SpeedValue::new(raw.coeff, raw.radicand)
    }
}

impl From<SpeedValue> for RawSpeed {
    fn from(s: SpeedValue) -> Self {
        RawSpeed {
            coeff: s.coeff,
            radicand: s.radicand,
        }
    }
}

impl SpeedValue {
    pub fn new(coeff: Rational, radicand: u64) -> Result<Self> {
        if !coeff.is_positive() {
            return Err(Error::NonPositiveSpeed(coeff.to_string()));
        }
        if radicand == 0 {
            return Err(Error::ZeroRadicand);
        }
        if let Some(factor) = square_factor(radicand) {
            return Err(Error::NotSquarefree { radicand, factor });
        }
        Ok(SpeedValue { coeff, radicand })
    }

    pub fn rational(value: Rational) -> Result<Self> {
        SpeedValue::new(value, 1)
    }

    /// Panics unless `value > 0`; intended for literals.
    pub fn int(value: i64) -> Self {
        SpeedValue::rational(Rational::integer(value)).expect("positive speed")
    }

    /// `sqrt(radicand)`; panics on a non-squarefree radicand.
    pub fn sqrt(radicand: u64) -> Self {
        SpeedValue::new(Rational::one(), radicand).expect("squarefree radicand")
    }

    pub fn coeff(&self) -> &Rational {
        &self.coeff
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn is_rational(&self) -> bool {
        self.radicand == 1
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.coeff)
    }

    pub fn to_f64(&self) -> f64 {
        self.coeff.to_f64() * (self.radicand as f64).sqrt()
    }

    /// A rational upper bound on the speed with denominator at most `2^bits`
    /// times the coefficient's denominator.
    pub fn upper_bound(&self, bits: u32) -> Rational {
        if self.is_rational() {
            return self.coeff.clone();
        }
        let scale = BigInt::from(1u8) << (2 * bits as usize);
        let root = (BigInt::from(self.radicand) * scale).sqrt() + 1u8;
        let sqrt_up = Rational::new(root, BigInt::from(1u8) << bits as usize).expect("nonzero");
        &self.coeff * &sqrt_up
    }
}

impl fmt::Display for SpeedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            write!(f, "{}", self.coeff)
        } else {
            write!(f, "{}*sqrt({})", self.coeff, self.radicand)
        }
    }
}

impl fmt::Debug for SpeedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A circle of positive rational length, parameterized by `[0, L)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Circle {
    length: Rational,
}

impl Circle {
    pub fn new(length: Rational) -> Result<Self> {
        if !length.is_positive() {
            return Err(Error::InvalidCircle(length.to_string()));
        }
        Ok(Circle { length })
    }

    pub fn unit() -> Self {
        Circle {
            length: Rational::one(),
        }
    }

    pub fn length(&self) -> &Rational {
        &self.length
    }

    pub fn is_unit(&self) -> bool {
        self.length == 1
    }

    /// Reduces a coordinate into `[0, L)`.
    pub fn wrap(&self, x: &Rational) -> Rational {
        x.rem_euclid(&self.length)
    }
}

/// The closed arc `[start, start + length] mod L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Arc {
    start: Rational,
    length: Rational,
}

impl Arc {
    pub fn new(start: Rational, length: Rational, circle: &Circle) -> Result<Self> {
        if start.is_negative() || &start >= circle.length() {
            return Err(Error::InvalidArc(format!(
                "start {start} outside [0, {})",
                circle.length()
            )));
        }
        if !length.is_positive() || &length > circle.length() {
            return Err(Error::InvalidArc(format!(
                "length {length} outside (0, {}]",
                circle.length()
            )));
        }
        Ok(Arc { start, length })
    }

    /// Like [`Arc::new`] but reduces `start` modulo the circle length first.
    pub fn wrapping(start: Rational, length: Rational, circle: &Circle) -> Result<Self> {
        Arc::new(circle.wrap(&start), length, circle)
    }

    pub fn full(circle: &Circle) -> Self {
        Arc {
            start: Rational::zero(),
            length: circle.length().clone(),
        }
    }

    pub fn start(&self) -> &Rational {
        &self.start
    }

    pub fn length(&self) -> &Rational {
        &self.length
    }

    pub fn is_full(&self, circle: &Circle) -> bool {
        &self.length == circle.length()
    }

    /// The closure of the complement: `[start + length, start + L] mod L`.
    /// `None` for the full circle.
    pub fn complement(&self, circle: &Circle) -> Option<Arc> {
        if self.is_full(circle) {
            return None;
        }
        Some(Arc {
            start: circle.wrap(&(&self.start + &self.length)),
            length: circle.length() - &self.length,
        })
    }

    /// The arc shifted by `offset` along the circle.
    pub fn rotated(&self, offset: &Rational, circle: &Circle) -> Arc {
        Arc {
            start: circle.wrap(&(&self.start + offset)),
            length: self.length.clone(),
        }
    }
}

/// True iff `x` lies in the closed arc. `x` may be any rational; it is
/// reduced modulo the circle first.
pub fn in_arc(x: &Rational, arc: &Arc, circle: &Circle) -> bool {
    circle.wrap(&(x - arc.start())) <= *arc.length()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Runner {
    pub speed: SpeedValue,
    pub start: Rational,
}

impl Runner {
    pub fn new(speed: SpeedValue, start: Rational) -> Self {
        Runner { speed, start }
    }

    pub fn rational(speed: Rational, start: Rational) -> Result<Self> {
        Ok(Runner {
            speed: SpeedValue::rational(speed)?,
            start,
        })
    }

    pub fn rational_speed(&self) -> Result<&Rational> {
        self.speed
            .as_rational()
            .ok_or_else(|| Error::IrrationalSpeed(self.speed.to_string()))
    }
}

/// Position `(start + v t) mod L` of a runner with a rational speed.
pub fn position(runner: &Runner, t: &Rational, circle: &Circle) -> Result<Rational> {
    let v = runner.rational_speed()?;
    Ok(circle.wrap(&(&runner.start + &(v * t))))
}

/// Clockwise runners on one circle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunnerSchedule {
    circle: Circle,
    runners: Vec<Runner>,
}

impl RunnerSchedule {
    /// Validates start positions and requires pairwise distinct speeds.
    pub fn new(circle: Circle, runners: Vec<Runner>) -> Result<Self> {
        let schedule = RunnerSchedule::allowing_repeated_speeds(circle, runners)?;
        for (i, a) in schedule.runners.iter().enumerate() {
            for (j, b) in schedule.runners.iter().enumerate().skip(i + 1) {
                if a.speed == b.speed {
                    return Err(Error::DuplicateSpeed {
                        first: i + 1,
                        second: j + 1,
                        speed: a.speed.to_string(),
                    });
                }
            }
        }
        Ok(schedule)
    }

    /// Like [`RunnerSchedule::new`] but permits several runners at the same
    /// speed, as patrolling fleets often have.
    pub fn allowing_repeated_speeds(circle: Circle, runners: Vec<Runner>) -> Result<Self> {
        for (i, r) in runners.iter().enumerate() {
            if r.start.is_negative() || &r.start >= circle.length() {
                return Err(Error::StartOutOfRange {
                    runner: i + 1,
                    start: r.start.to_string(),
                    length: circle.length().to_string(),
                });
            }
        }
        Ok(RunnerSchedule { circle, runners })
    }

    pub fn circle(&self) -> &Circle {
        &self.circle
    }

    pub fn runners(&self) -> &[Runner] {
        &self.runners
    }

    pub fn len(&self) -> usize {
        self.runners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runners.is_empty()
    }

    pub fn all_rational(&self) -> bool {
        self.runners.iter().all(|r| r.speed.is_rational())
    }

    /// Rational speeds in runner order, or the first irrational one as an error.
    pub fn rational_speeds(&self) -> Result<Vec<Rational>> {
        self.runners.iter().map(|r| r.rational_speed().cloned()).collect()
    }

    /// The schedule without the runner at `index` (0-based).
    pub fn without(&self, index: usize) -> RunnerSchedule {
        let mut runners = self.runners.clone();
        runners.remove(index);
        RunnerSchedule {
            circle: self.circle.clone(),
            runners,
        }
    }

    /// Positions of every runner at `t`; requires rational speeds.
    pub fn positions(&self, t: &Rational) -> Result<Vec<Rational>> {
        self.runners.iter().map(|r| position(r, t, &self.circle)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic(0), Rational::zero());
        assert_eq!(harmonic(1), Rational::one());
        assert_eq!(harmonic(4), q(25, 12));
        assert_eq!(harmonic_prefix(4)[3], q(11, 6));
    }

    #[test]
    fn harmonic_log_bounds() {
        for k in 1..=400u64 {
            let h = harmonic(k).to_f64();
            let ln = (k as f64).ln();
            assert!(ln <= h + 1e-12 && h <= ln + 1.0 + 1e-12, "k = {k}");
        }
    }

    #[test]
    fn harmonic_increments() {
        let h = harmonic_prefix(60);
        for n in 1..=60usize {
            assert_eq!(&h[n] - &h[n - 1], Rational::integer(n as i64).recip());
        }
    }

    #[test]
    fn position_examples() {
        let c = Circle::unit();
        let r = Runner::rational(q(1, 1), q(0, 1)).unwrap();
        assert_eq!(position(&r, &Rational::zero(), &c).unwrap(), Rational::zero());
        let r = Runner::rational(q(2, 1), q(1, 2)).unwrap();
        assert_eq!(position(&r, &q(3, 4), &c).unwrap(), Rational::zero());
        let r = Runner::rational(q(4, 1), q(0, 1)).unwrap();
        assert_eq!(position(&r, &q(1, 8), &c).unwrap(), q(1, 2));
    }

    #[test]
    fn position_rejects_irrational_speed() {
        let r = Runner::new(SpeedValue::sqrt(2), Rational::zero());
        assert!(matches!(
            position(&r, &Rational::one(), &Circle::unit()),
            Err(Error::IrrationalSpeed(_))
        ));
    }

    #[test]
    fn in_arc_examples() {
        let c = Circle::unit();
        let arc = Arc::new(q(0, 1), q(1, 2), &c).unwrap();
        assert!(in_arc(arc.start(), &arc, &c));
        assert!(in_arc(&q(1, 2), &arc, &c));
        assert!(!in_arc(&q(3, 4), &arc, &c));
        let full = Arc::full(&c);
        assert!(in_arc(&q(3, 4), &full, &c));
        let wrapping = Arc::new(q(3, 4), q(1, 2), &c).unwrap();
        assert!(in_arc(&q(1, 8), &wrapping, &c));
        assert!(in_arc(&q(1, 4), &wrapping, &c));
        assert!(!in_arc(&q(1, 2), &wrapping, &c));
    }

    #[test]
    fn arc_complement_is_closed() {
        let c = Circle::unit();
        let shade = Arc::new(q(1, 2), q(1, 2), &c).unwrap();
        let comp = shade.complement(&c).unwrap();
        assert_eq!(comp.start(), &Rational::zero());
        assert_eq!(comp.length(), &q(1, 2));
        assert!(Arc::full(&c).complement(&c).is_none());
    }

    #[test]
    fn speed_validation() {
        assert_eq!(
            SpeedValue::new(Rational::one(), 12),
            Err(Error::NotSquarefree {
                radicand: 12,
                factor: 2
            })
        );
        assert_eq!(
            SpeedValue::new(Rational::one(), 45).unwrap_err(),
            Error::NotSquarefree {
                radicand: 45,
                factor: 3
            }
        );
        assert!(SpeedValue::new(Rational::one(), 30).is_ok());
        assert!(SpeedValue::new(Rational::zero(), 2).is_err());
        assert!(SpeedValue::new(-Rational::one(), 1).is_err());
        let up = SpeedValue::sqrt(2).upper_bound(20);
        assert!(up.to_f64() >= 2f64.sqrt() && up.to_f64() < 2f64.sqrt() + 1e-5);
    }

    #[test]
    fn speed_json_shape() {
        let s = SpeedValue::new(q(3, 2), 5).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"coeff":"3/2","radicand":5}"#);
        let bad: std::result::Result<SpeedValue, _> = serde_json::from_str(r#"{"coeff":"1/1","radicand":8}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn schedule_rejects_duplicate_speeds() {
        let c = Circle::unit();
        let r = |v: i64, s: Rational| Runner::rational(Rational::integer(v), s).unwrap();
        let err = RunnerSchedule::new(c.clone(), vec![r(1, q(0, 1)), r(1, q(1, 2))]).unwrap_err();
        assert!(matches!(
            err,
            Error::DuplicateSpeed {
                first: 1,
                second: 2,
                ..
            }
        ));
        assert!(RunnerSchedule::allowing_repeated_speeds(c.clone(), vec![r(1, q(0, 1)), r(1, q(1, 2))]).is_ok());
        assert!(RunnerSchedule::new(c, vec![r(1, q(1, 1))]).is_err());
    }

    proptest! {
        #[test]
        fn position_is_periodic(vn in 1i64..50, vd in 1i64..20, b in 0i64..100, tn in 0i64..1000, td in 1i64..50) {
            let c = Circle::new(q(3, 2)).unwrap();
            let v = q(vn, vd);
            let r = Runner::rational(v.clone(), q(b, 100) * c.length()).unwrap();
            let t = q(tn, td);
            let period = c.length() / &v;
            prop_assert_eq!(position(&r, &(&t + &period), &c).unwrap(), position(&r, &t, &c).unwrap());
        }

        #[test]
        fn position_matches_float(vn in 1i64..50, vd in 1i64..20, b in 0i64..100, tn in 0i64..1000, td in 1i64..50) {
            let c = Circle::unit();
            let r = Runner::rational(q(vn, vd), q(b, 100)).unwrap();
            let t = q(tn, td);
            let exact = position(&r, &t, &c).unwrap().to_f64();
            let float = (b as f64 / 100.0 + (vn as f64 / vd as f64) * (tn as f64 / td as f64)).rem_euclid(1.0);
            let diff = (exact - float).abs();
            prop_assert!(diff < 1e-9 || (1.0 - diff) < 1e-9);
        }
    }
}
