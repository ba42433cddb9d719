//! Idle time of patrolling schedules: the longest stretch of time during
//! which some point of the fence goes unvisited.
//!
//! Constant-speed clockwise runners get an exact answer. General periodic
//! piecewise-linear trajectories get certified bounds from a grid of sample
//! points: the largest sampled gap is a lower bound, and an upper bound comes
//! from the intervals during which an agent sweeps an entire grid cell.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::model::{Circle, RunnerSchedule};
use crate::periodic::MAX_LIFTED_INTERVALS;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fence {
    /// A closed fence; positions are taken modulo its length.
    Circle(Circle),
    /// An open fence `[0, length]`.
    Segment(Rational),
}

impl Fence {
    pub fn length(&self) -> &Rational {
        match self {
            Fence::Circle(c) => c.length(),
            Fence::Segment(len) => len,
        }
    }
}

/// A periodic piecewise-linear trajectory given by its breakpoints over one
/// period. On a circle positions are lifted reals: the last breakpoint may
/// differ from the first by whole laps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub period: Rational,
    pub breakpoints: Vec<(Rational, Rational)>,
}

impl Trajectory {
    /// Lifted position at time `t`, extended periodically. Callers reduce
    /// it modulo the circle when the fence is closed.
    pub fn position_at(&self, t: &Rational) -> Rational {
        let laps = (t / &self.period).floor_int();
        let local = t - &(&self.period * &Rational::integer(laps.clone()));
        let first = &self.breakpoints[0].1;
        let drift = &self.breakpoints[self.breakpoints.len() - 1].1 - first;
        let offset = drift * Rational::integer(laps);
        let idx = self
            .breakpoints
            .partition_point(|(bt, _)| bt <= &local)
            .clamp(1, self.breakpoints.len() - 1);
        let (t0, x0) = &self.breakpoints[idx - 1];
        let (t1, x1) = &self.breakpoints[idx];
        x0 + &((&local - t0) * (x1 - x0) / (t1 - t0)) + offset
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    pub max_speed: Rational,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatrolSchedule {
    fence: Fence,
    agents: Vec<Agent>,
}

impl PatrolSchedule {
    pub fn new(fence: Fence, agents: Vec<Agent>) -> Result<Self> {
        if !fence.length().is_positive() {
            return Err(Error::InvalidCircle(fence.length().to_string()));
        }
        if agents.is_empty() {
            return Err(Error::OutOfRange("patrol schedule has no agents".into()));
        }
        for (i, agent) in agents.iter().enumerate() {
            validate_agent(&fence, agent).map_err(|reason| Error::InvalidTrajectory { agent: i + 1, reason })?;
        }
        Ok(PatrolSchedule { fence, agents })
    }

    /// Each runner becomes one lap per period `L/v`.
    pub fn from_runners(schedule: &RunnerSchedule) -> Result<Self> {
        let circle = schedule.circle().clone();
        let mut agents = Vec::with_capacity(schedule.len());
        for r in schedule.runners() {
            let v = r.rational_speed()?.clone();
            let period = circle.length() / &v;
            let breakpoints = vec![
                (Rational::zero(), r.start.clone()),
                (period.clone(), &r.start + circle.length()),
            ];
            agents.push(Agent {
                max_speed: v,
                trajectory: Trajectory { period, breakpoints },
            });
        }
        PatrolSchedule::new(Fence::Circle(circle), agents)
    }

    pub fn fence(&self) -> &Fence {
        &self.fence
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    fn common_period(&self) -> Rational {
        let mut iter = self.agents.iter().map(|a| &a.trajectory.period);
        let first = iter.next().expect("agents nonempty").clone();
        iter.fold(first, |acc, p| acc.lcm(p))
    }
}

fn validate_agent(fence: &Fence, agent: &Agent) -> std::result::Result<(), String> {
    let tr = &agent.trajectory;
    if !agent.max_speed.is_positive() {
        return Err(format!("max speed {} must be positive", agent.max_speed));
    }
    if !tr.period.is_positive() {
        return Err(format!("period {} must be positive", tr.period));
    }
    let (Some(first), Some(last)) = (tr.breakpoints.first(), tr.breakpoints.last()) else {
        return Err("no breakpoints".into());
    };
    if tr.breakpoints.len() < 2 || !first.0.is_zero() || last.0 != tr.period {
        return Err("breakpoints must run from t = 0 to t = period".into());
    }
    for (j, w) in tr.breakpoints.windows(2).enumerate() {
        let dt = &w[1].0 - &w[0].0;
        if !dt.is_positive() {
            return Err(format!("breakpoint times must increase (at index {})", j + 1));
        }
        let slope = (&w[1].1 - &w[0].1).abs() / dt;
        if slope > agent.max_speed {
            return Err(format!(
                "segment {} has speed {slope} above the maximum {}",
                j + 1,
                agent.max_speed
            ));
        }
    }
    match fence {
        Fence::Segment(len) => {
            if tr.breakpoints.iter().any(|(_, x)| x.is_negative() || x > len) {
                return Err(format!("positions must stay within [0, {len}]"));
            }
            if first.1 != last.1 {
                return Err("trajectory must end where it starts".into());
            }
        }
        Fence::Circle(c) => {
            if !((&last.1 - &first.1) / c.length()).is_integer() {
                return Err("trajectory must end where it starts, modulo the circle".into());
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdleReport {
    /// The exact idle time, attained at `point` over the time gap `gap`.
    Exact {
        idle: Rational,
        point: Rational,
        gap: (Rational, Rational),
    },
    /// Certified bounds `lower ≤ idle ≤ upper`; `upper` is `None` when no
    /// finite bound could be certified at this grid. `point` and `gap`
    /// witness the lower bound.
    Estimate {
        lower: Rational,
        upper: Option<Rational>,
        point: Rational,
        gap: (Rational, Rational),
        grid: Rational,
    },
    /// `point` is never visited.
    Unbounded { point: Rational },
}

/// Longest unvisited stretch among sorted visit times over one period.
/// Returns `(length, from, to)` with `to` possibly beyond `period`.
fn max_cyclic_gap(visits: &mut Vec<(Rational, Rational)>, period: &Rational) -> Option<(Rational, Rational, Rational)> {
    visits.sort();
    let mut merged: Vec<(Rational, Rational)> = Vec::with_capacity(visits.len());
    for (lo, hi) in visits.drain(..) {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => merged.push((lo, hi)),
        }
    }
    let first = merged.first()?;
    let last = merged.last().expect("nonempty");
    let mut best = (&first.0 + period - &last.1, last.1.clone(), &first.0 + period);
    for w in merged.windows(2) {
        let len = &w[1].0 - &w[0].1;
        if len > best.0 {
            best = (len, w[0].1.clone(), w[1].0.clone());
        }
    }
    if best.0.is_negative() {
        best.0 = Rational::zero();
    }
    Some(best)
}

/// Exact idle time of constant-speed clockwise runners.
///
/// Runner `i` visits `x` at times `(x − β_i)/v_i + m·L/v_i`. As `x` moves,
/// the longest gap is piecewise linear with breakpoints only where visits
/// of two runners coincide, so it is evaluated exactly at those points.
/// The wait from `t = 0` to the first visit is also considered.
pub fn idle_time_exact(schedule: &RunnerSchedule) -> Result<IdleReport> {
    if schedule.is_empty() {
        return Err(Error::OutOfRange("schedule has no runners".into()));
    }
    let circle = schedule.circle();
    let len = circle.length();
    let lags: Vec<Rational> = schedule.rational_speeds()?.iter().map(Rational::recip).collect();
    let starts: Vec<&Rational> = schedule.runners().iter().map(|r| &r.start).collect();
    let laps: Vec<Rational> = lags.iter().map(|w| len * w).collect();
    let period = laps[1..].iter().fold(laps[0].clone(), |acc, p| acc.lcm(p));

    let visits_per_period: u128 = laps
        .iter()
        .map(|lap| (&period / lap).numer().to_u128().unwrap_or(u128::MAX))
        .fold(0u128, u128::saturating_add);
    if visits_per_period > MAX_LIFTED_INTERVALS {
        return Err(Error::IntervalBudget {
            count: visits_per_period,
            budget: MAX_LIFTED_INTERVALS,
        });
    }

    let mut candidates: BTreeSet<Rational> = BTreeSet::new();
    candidates.insert(Rational::zero());
    candidates.extend(starts.iter().map(|&s| s.clone()));
    for i in 0..lags.len() {
        for j in (i + 1)..lags.len() {
            let diff = &lags[i] - &lags[j];
            if diff.is_zero() {
                continue;
            }
            let g = lags[i].gcd(&lags[j]);
            let base = (starts[i] * &lags[i] - starts[j] * &lags[j]) / &diff;
            let step = len * &g / diff.abs();
            let count = (diff.abs() / &g).numer().to_u64().unwrap_or(u64::MAX);
            if (candidates.len() as u128 + count as u128) > MAX_LIFTED_INTERVALS {
                return Err(Error::IntervalBudget {
                    count: candidates.len() as u128 + count as u128,
                    budget: MAX_LIFTED_INTERVALS,
                });
            }
            let mut x = base;
            for _ in 0..count {
                candidates.insert(circle.wrap(&x));
                x += &step;
            }
        }
    }

    let mut best: Option<(Rational, Rational, (Rational, Rational))> = None;
    let mut visits = Vec::with_capacity(visits_per_period as usize);
    for x in candidates {
        let mut first_visit: Option<Rational> = None;
        for ((w, lap), s) in lags.iter().zip(&laps).zip(&starts) {
            let offset = circle.wrap(&(&x - *s)) * w;
            if first_visit.as_ref().is_none_or(|f| &offset < f) {
                first_visit = Some(offset.clone());
            }
            let copies = (&period / lap).numer().to_u64().expect("bounded above");
            let mut t = offset;
            for _ in 0..copies {
                visits.push((t.clone(), t.clone()));
                t += lap;
            }
        }
        let (gap, from, to) = max_cyclic_gap(&mut visits, &period).expect("runners visit every point");
        let first_visit = first_visit.expect("nonempty");
        let (gap, from, to) = if first_visit > gap {
            (first_visit.clone(), Rational::zero(), first_visit)
        } else {
            (gap, from, to)
        };
        if best.as_ref().is_none_or(|b| gap > b.0) {
            best = Some((gap, x, (from, to)));
        }
    }
    let (idle, point, gap) = best.expect("at least one candidate");
    Ok(IdleReport::Exact { idle, point, gap })
}

/// A linear piece of a lifted trajectory.
struct Piece<'a> {
    t0: &'a Rational,
    x0: &'a Rational,
    t1: &'a Rational,
    x1: &'a Rational,
}

fn pieces(tr: &Trajectory) -> impl Iterator<Item = Piece<'_>> {
    tr.breakpoints.windows(2).map(|w| Piece {
        t0: &w[0].0,
        x0: &w[0].1,
        t1: &w[1].0,
        x1: &w[1].1,
    })
}

/// Copies of `x` in lifted coordinates that fall within `[lo, hi]`.
fn lifts_between(fence: &Fence, x: &Rational, lo: &Rational, hi: &Rational) -> Vec<Rational> {
    match fence {
        Fence::Segment(_) => {
            if lo <= x && x <= hi {
                vec![x.clone()]
            } else {
                Vec::new()
            }
        }
        Fence::Circle(c) => {
            let l = c.length();
            let first = ((lo - x) / l).ceil_int();
            let last = ((hi - x) / l).floor_int();
            let mut out = Vec::new();
            let mut n = first;
            while n <= last {
                out.push(x + &(l * &Rational::integer(n.clone())));
                n += 1u8;
            }
            out
        }
    }
}

/// Visit intervals of fence point `x`, folded into `[0, period)`.
fn sample_visits(schedule: &PatrolSchedule, x: &Rational, period: &Rational) -> Vec<(Rational, Rational)> {
    let mut visits = Vec::new();
    for agent in &schedule.agents {
        let tr = &agent.trajectory;
        let copies = (period / &tr.period).numer().to_u64().expect("bounded period ratio");
        let mut local = Vec::new();
        for p in pieces(tr) {
            if p.x0 == p.x1 {
                if !lifts_between(&schedule.fence, x, p.x0, p.x1).is_empty() {
                    local.push((p.t0.clone(), p.t1.clone()));
                }
                continue;
            }
            let (lo, hi) = if p.x0 < p.x1 { (p.x0, p.x1) } else { (p.x1, p.x0) };
            let rate = (p.t1 - p.t0) / (p.x1 - p.x0);
            for y in lifts_between(&schedule.fence, x, lo, hi) {
                let t = p.t0 + &((&y - p.x0) * &rate);
                local.push((t.clone(), t));
            }
        }
        let mut shift = Rational::zero();
        for _ in 0..copies {
            // Local times lie in [0, T_a], so shifted visits never pass the period end.
            visits.extend(local.iter().map(|(a, b)| (a + &shift, b + &shift)));
            shift += &tr.period;
        }
    }
    visits
}

/// Times at which the trajectory (over `window`) sits exactly at `level`,
/// as closed intervals in time order.
fn touches(window: &[(Rational, Rational, Rational, Rational)], level: &Rational) -> Vec<(Rational, Rational)> {
    let mut out: Vec<(Rational, Rational)> = Vec::new();
    for (t0, x0, t1, x1) in window {
        let hit = if x0 == x1 {
            (x0 == level).then(|| (t0.clone(), t1.clone()))
        } else {
            let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
            (lo <= level && level <= hi).then(|| {
                let t = t0 + &((level - x0) * (t1 - t0) / (x1 - x0));
                (t.clone(), t)
            })
        };
        let Some((s, e)) = hit else { continue };
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = Rational::max_of(last.1.clone(), e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// Time intervals, over one period of the agent, from a touch of one edge
/// of the cell `[c0, c1]` to the next touch of the other edge. The path in
/// between is continuous, so it passes every point of the cell.
fn full_sweeps(fence: &Fence, tr: &Trajectory, c0: &Rational, c1: &Rational) -> Vec<(Rational, Rational)> {
    let lap = &tr.breakpoints.last().expect("validated").1 - &tr.breakpoints[0].1;
    // Three consecutive periods; sweeps starting in the middle one are kept.
    let mut window: Vec<(Rational, Rational, Rational, Rational)> = Vec::new();
    for k in 0..3i64 {
        let dt = &tr.period * &Rational::integer(k);
        let dx = &lap * &Rational::integer(k);
        for p in pieces(tr) {
            window.push((p.t0 + &dt, p.x0 + &dx, p.t1 + &dt, p.x1 + &dx));
        }
    }
    let shifts: Vec<Rational> = match fence {
        Fence::Segment(_) => vec![Rational::zero()],
        Fence::Circle(c) => {
            let (mut min_x, mut max_x) = (window[0].1.clone(), window[0].1.clone());
            for (_, x0, _, x1) in &window {
                for x in [x0, x1] {
                    if x < &min_x {
                        min_x = x.clone();
                    }
                    if x > &max_x {
                        max_x = x.clone();
                    }
                }
            }
            let l = c.length();
            let mut n = ((&min_x - c1) / l).floor_int();
            let last = ((&max_x - c0) / l).ceil_int();
            let mut out = Vec::new();
            while n <= last {
                out.push(l * &Rational::integer(n.clone()));
                n += 1u8;
            }
            out
        }
    };

    let (start, end) = (tr.period.clone(), &tr.period * &Rational::integer(2));
    let mut sweeps = Vec::new();
    for shift in &shifts {
        let mut events: Vec<(Rational, Rational, bool)> = touches(&window, &(c0 + shift))
            .into_iter()
            .map(|(s, e)| (s, e, false))
            .chain(touches(&window, &(c1 + shift)).into_iter().map(|(s, e)| (s, e, true)))
            .collect();
        events.sort();
        for w in events.windows(2) {
            if w[0].2 != w[1].2 && w[0].1 >= start && w[0].1 < end {
                sweeps.push((&w[0].1 - &start, &w[1].0 - &start));
            }
        }
    }
    sweeps
}

/// Upper bound on the idle time of any point of the cell: every point is
/// visited at least once during each full sweep, so after a visit at time
/// `u` the next one comes no later than the earliest end among sweeps
/// starting after `u`.
fn cell_upper_bound(
    fence: &Fence,
    schedule: &PatrolSchedule,
    c0: &Rational,
    c1: &Rational,
    period: &Rational,
) -> Option<Rational> {
    let mut sweeps: Vec<(Rational, Rational)> = Vec::new();
    for agent in &schedule.agents {
        let tr = &agent.trajectory;
        let copies = (period / &tr.period).numer().to_u64().expect("bounded period ratio");
        let local = full_sweeps(fence, tr, c0, c1);
        let mut shift = Rational::zero();
        for _ in 0..copies {
            sweeps.extend(local.iter().map(|(s, e)| (s + &shift, e + &shift)));
            shift += &tr.period;
        }
    }
    if sweeps.is_empty() {
        return None;
    }
    let n = sweeps.len();
    let mut doubled: Vec<(Rational, Rational)> = sweeps.clone();
    doubled.extend(sweeps.iter().map(|(s, e)| (s + period, e + period)));
    doubled.sort();
    let mut suffix_min = vec![doubled[2 * n - 1].1.clone(); 2 * n];
    for i in (0..2 * n - 1).rev() {
        suffix_min[i] = Rational::min_of(doubled[i].1.clone(), suffix_min[i + 1].clone());
    }
    let mut bound = Rational::zero();
    for (s, _) in doubled.iter().filter(|(s, _)| s < period) {
        let idx = doubled.partition_point(|(t, _)| t <= s);
        let candidate = &suffix_min[idx] - s;
        if candidate > bound {
            bound = candidate;
        }
    }
    Some(bound)
}

/// Certified idle-time bounds on a grid of spacing `grid`.
///
/// The lower bound is the largest exact gap over the sample points. The
/// upper bound covers every point of every cell between samples; it shrinks
/// linearly with the grid for agents that keep moving.
pub fn idle_time_estimate(schedule: &PatrolSchedule, grid: &Rational) -> Result<IdleReport> {
    if !grid.is_positive() {
        return Err(Error::OutOfRange(format!("grid spacing {grid} must be positive")));
    }
    let period = schedule.common_period();
    let len = schedule.fence.length();
    let cells = (len / grid).ceil_int().to_u64().unwrap_or(u64::MAX);
    if cells as u128 > MAX_LIFTED_INTERVALS {
        return Err(Error::IntervalBudget {
            count: cells as u128,
            budget: MAX_LIFTED_INTERVALS,
        });
    }
    let mut samples: Vec<Rational> = (0..cells).map(|j| grid * &Rational::integer(j)).collect();
    if let Fence::Segment(_) = schedule.fence {
        samples.push(len.clone());
    }

    let mut lower: Option<(Rational, Rational, (Rational, Rational))> = None;
    for x in &samples {
        let mut visits = sample_visits(schedule, x, &period);
        let Some((gap, from, to)) = max_cyclic_gap(&mut visits, &period) else {
            return Ok(IdleReport::Unbounded { point: x.clone() });
        };
        if lower.as_ref().is_none_or(|l| gap > l.0) {
            lower = Some((gap, x.clone(), (from, to)));
        }
    }
    let (lower, point, gap) = lower.expect("at least one sample");

    let bound = |j: u64| {
        let c0 = grid * &Rational::integer(j);
        let c1 = Rational::min_of(&c0 + grid, len.clone());
        cell_upper_bound(&schedule.fence, schedule, &c0, &c1, &period)
    };
    // Any cell without a bound makes the whole bound infinite.
    #[cfg(feature = "parallel")]
    let upper: Option<Vec<Rational>> = {
        use rayon::prelude::*;
        (0..cells).into_par_iter().map(bound).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let upper: Option<Vec<Rational>> = (0..cells).map(bound).collect();
    let upper = upper.map(|bounds| bounds.into_iter().fold(Rational::zero(), Rational::max_of));
    let upper = upper.map(|u| Rational::max_of(u, lower.clone()));
    Ok(IdleReport::Estimate {
        lower,
        upper,
        point,
        gap,
        grid: grid.clone(),
    })
}
