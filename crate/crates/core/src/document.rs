//! JSON documents for schedules, constructions and patrols.
//!
//! Rationals are `"p/q"` strings and speeds are `{"coeff", "radicand"}`
//! objects. Output goes through `serde_json::Value`, whose maps are sorted,
//! so identical inputs always render to identical bytes.

use num_traits::ToPrimitive;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constructions::NoShadeConstruction;
use crate::error::{Error, Result};
use crate::kronecker::{Enclosure, KroneckerWitness};
use crate::model::{Arc, Circle, Runner, RunnerSchedule, SpeedValue};
use crate::patrol::{Agent, Fence, IdleReport, PatrolSchedule, Trajectory};
use crate::rational::Rational;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcDoc {
    pub start: Rational,
    pub length: Rational,
}

impl ArcDoc {
    pub fn from_arc(arc: &Arc) -> Self {
        ArcDoc {
            start: arc.start().clone(),
            length: arc.length().clone(),
        }
    }

    pub fn to_arc(&self, circle: &Circle) -> Result<Arc> {
        Arc::new(self.start.clone(), self.length.clone(), circle)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionKind {
    NoShade,
    Rendezvous,
}

/// How a schedule was produced. Informational: `verify` and `search` take
/// their arcs from the command line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionMeta {
    pub kind: ConstructionKind,
    pub a: Rational,
    pub k: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_times: Option<Vec<Rational>>,
    /// The shade for no-shade schedules, the target arc for rendezvous ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc: Option<ArcDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDocument {
    pub schema_version: u32,
    pub circle_length: Rational,
    pub runners: Vec<Runner>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<ConstructionMeta>,
}

impl ScheduleDocument {
    pub fn from_schedule(schedule: &RunnerSchedule, construction: Option<ConstructionMeta>) -> Self {
        ScheduleDocument {
            schema_version: SCHEMA_VERSION,
            circle_length: schedule.circle().length().clone(),
            runners: schedule.runners().to_vec(),
            construction,
        }
    }

    pub fn from_no_shade(c: &NoShadeConstruction) -> Self {
        let meta = ConstructionMeta {
            kind: ConstructionKind::NoShade,
            a: c.a.clone(),
            k: c.k,
            exit_times: Some(c.exit_times.clone()),
            arc: Some(ArcDoc::from_arc(&c.shade_arc)),
        };
        ScheduleDocument::from_schedule(&c.schedule, Some(meta))
    }

    pub fn from_rendezvous(schedule: &RunnerSchedule, arc: &Arc, a: &Rational) -> Self {
        let meta = ConstructionMeta {
            kind: ConstructionKind::Rendezvous,
            a: a.clone(),
            k: schedule.len() as u64,
            exit_times: None,
            arc: Some(ArcDoc::from_arc(arc)),
        };
        ScheduleDocument::from_schedule(schedule, Some(meta))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: ScheduleDocument = parse_with_path(text)?;
        check_version(doc.schema_version)?;
        Ok(doc)
    }

    /// Repeated speeds are allowed here; constructions that need distinct
    /// speeds enforce that themselves.
    pub fn to_schedule(&self) -> Result<RunnerSchedule> {
        let circle = Circle::new(self.circle_length.clone())?;
        RunnerSchedule::allowing_repeated_speeds(circle, self.runners.clone())
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FenceKind {
    Circle,
    Segment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FenceDoc {
    pub kind: FenceKind,
    pub length: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDoc {
    pub period: Rational,
    pub breakpoints: Vec<(Rational, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub max_speed: Rational,
    pub trajectory: TrajectoryDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatrolDocument {
    pub schema_version: u32,
    pub fence: FenceDoc,
    pub agents: Vec<AgentDoc>,
}

impl PatrolDocument {
    pub fn from_patrol(schedule: &PatrolSchedule) -> Self {
        let fence = match schedule.fence() {
            Fence::Circle(c) => FenceDoc {
                kind: FenceKind::Circle,
                length: c.length().clone(),
            },
            Fence::Segment(len) => FenceDoc {
                kind: FenceKind::Segment,
                length: len.clone(),
            },
        };
        let agents = schedule
            .agents()
            .iter()
            .map(|a| AgentDoc {
                max_speed: a.max_speed.clone(),
                trajectory: TrajectoryDoc {
                    period: a.trajectory.period.clone(),
                    breakpoints: a.trajectory.breakpoints.clone(),
                },
            })
            .collect();
        PatrolDocument {
            schema_version: SCHEMA_VERSION,
            fence,
            agents,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: PatrolDocument = parse_with_path(text)?;
        check_version(doc.schema_version)?;
        Ok(doc)
    }

    pub fn to_patrol(&self) -> Result<PatrolSchedule> {
        let fence = match self.fence.kind {
            FenceKind::Circle => Fence::Circle(Circle::new(self.fence.length.clone())?),
            FenceKind::Segment => Fence::Segment(self.fence.length.clone()),
        };
        let agents = self
            .agents
            .iter()
            .map(|a| Agent {
                max_speed: a.max_speed.clone(),
                trajectory: Trajectory {
                    period: a.trajectory.period.clone(),
                    breakpoints: a.trajectory.breakpoints.clone(),
                },
            })
            .collect();
        PatrolSchedule::new(fence, agents)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }
}

/// Either kind of input accepted by idle-time evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum AnyDocument {
    Schedule(ScheduleDocument),
    Patrol(PatrolDocument),
}

impl AnyDocument {
    /// Dispatches on the presence of an `agents` key.
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if value.get("agents").is_some() {
            PatrolDocument::parse(text).map(AnyDocument::Patrol)
        } else {
            ScheduleDocument::parse(text).map(AnyDocument::Schedule)
        }
    }
}

fn check_version(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "schema_version: unsupported version {version} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

/// Deserializes with the failing field path and source position in the error.
pub fn parse_with_path<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::Schema(inner.to_string())
        } else {
            Error::Schema(format!("{path}: {inner}"))
        }
    })?;
    de.end().map_err(|e| Error::Schema(e.to_string()))?;
    Ok(value)
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("documents serialize to JSON");
    let mut out = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    out.push('\n');
    out
}

/// `[{"coeff", "radicand"}, ...]` for a speed list.
pub fn speeds_json(speeds: &[SpeedValue]) -> Value {
    serde_json::to_value(speeds).expect("speeds serialize to JSON")
}

fn enclosure_json(e: &Enclosure) -> Value {
    json!({ "lo": e.lo.to_string(), "hi": e.hi.to_string() })
}

/// Integers that fit in `i64` become JSON numbers, larger ones strings.
fn integer_json(n: &num_bigint::BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

pub fn witness_json(w: &KroneckerWitness) -> Value {
    json!({
        "t": w.t.to_string(),
        "probes_used": w.probes_used,
        "p": w.p.iter().map(integer_json).collect::<Vec<_>>(),
        "margins": w.margins.iter().map(enclosure_json).collect::<Vec<_>>(),
        "precision_bits": w.precision_bits,
        "all_in_arc": w.all_in_arc,
    })
}

pub fn idle_report_json(report: &IdleReport) -> Value {
    match report {
        IdleReport::Exact { idle, point, gap } => json!({
            "kind": "exact",
            "idle": idle.to_string(),
            "point": point.to_string(),
            "gap": [gap.0.to_string(), gap.1.to_string()],
        }),
        IdleReport::Estimate {
            lower,
            upper,
            point,
            gap,
            grid,
        } => json!({
            "kind": "estimate",
            "lower": lower.to_string(),
            "upper": upper.as_ref().map(Rational::to_string),
            "point": point.to_string(),
            "gap": [gap.0.to_string(), gap.1.to_string()],
            "grid": grid.to_string(),
        }),
        IdleReport::Unbounded { point } => json!({
            "kind": "unbounded",
            "idle": "unbounded",
            "point": point.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::build_no_shade;

    fn half_shade_doc() -> ScheduleDocument {
        let circle = Circle::unit();
        let shade = Arc::new(Rational::frac(1, 2), Rational::frac(1, 2), &circle).unwrap();
        ScheduleDocument::from_no_shade(&build_no_shade(&shade, None).unwrap())
    }

    #[test]
    fn schedule_round_trip() {
        let doc = half_shade_doc();
        let text = doc.to_json();
        assert_eq!(ScheduleDocument::parse(&text).unwrap(), doc);
        assert_eq!(ScheduleDocument::parse(&text).unwrap().to_json(), text);
        assert!(text.contains(r#""coeff": "3/1""#));
        assert!(text.contains(r#""kind": "no-shade""#));
    }

    #[test]
    fn keys_are_sorted() {
        let text = half_shade_doc().to_json();
        let c = text.find("\"circle_length\"").unwrap();
        let r = text.find("\"runners\"").unwrap();
        let s = text.find("\"schema_version\"").unwrap();
        let k = text.find("\"construction\"").unwrap();
        assert!(c < k && k < r && r < s);
    }

    #[test]
    fn bad_rational_reports_path_and_position() {
        let text = r#"{
  "schema_version": 1,
  "circle_length": "1/1",
  "runners": [
    {"speed": {"coeff": "1/1", "radicand": 1}, "start": "3/0"}
  ]
}"#;
        let err = ScheduleDocument::parse(text).unwrap_err();
        assert_eq!(err.code(), "parse");
        let msg = err.to_string();
        assert!(msg.contains("runners[0].start"), "{msg}");
        assert!(msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn schema_violations_are_rejected() {
        let unknown = r#"{"schema_version": 1, "circle_length": "1", "runners": [], "extra": 0}"#;
        assert!(ScheduleDocument::parse(unknown)
            .unwrap_err()
            .to_string()
            .contains("extra"));
        let version = r#"{"schema_version": 9, "circle_length": "1", "runners": []}"#;
        assert!(ScheduleDocument::parse(version).is_err());
        let square = r#"{"schema_version": 1, "circle_length": "1",
            "runners": [{"speed": {"coeff": "1", "radicand": 8}, "start": "0"}]}"#;
        let msg = ScheduleDocument::parse(square).unwrap_err().to_string();
        assert!(msg.contains("runners[0].speed") && msg.contains("squarefree"), "{msg}");
    }

    #[test]
    fn patrol_round_trip_and_dispatch() {
        let text = r#"{
  "schema_version": 1,
  "fence": {"kind": "segment", "length": "1"},
  "agents": [{"max_speed": "1", "trajectory": {"period": "2", "breakpoints": [["0", "0"], ["1", "1"], ["2", "0"]]}}]
}"#;
        let AnyDocument::Patrol(doc) = AnyDocument::parse(text).unwrap() else {
            panic!()
        };
        let patrol = doc.to_patrol().unwrap();
        assert_eq!(PatrolDocument::from_patrol(&patrol), doc);
        assert!(doc.to_json().contains(r#""1/1""#));
        let schedule = half_shade_doc().to_json();
        assert!(matches!(
            AnyDocument::parse(&schedule).unwrap(),
            AnyDocument::Schedule(_)
        ));
    }
}
