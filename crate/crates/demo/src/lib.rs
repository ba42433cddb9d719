//! Browser bindings. Each exported function takes plain strings and numbers
//! and returns a JSON string; errors come back as `"code: message"`.

use serde_json::json;
use wasm_bindgen::prelude::*;

use shadetrack::constructions::{build_no_shade, build_rendezvous_speeds, find_rendezvous_time, verify_no_shade};
use shadetrack::document::{idle_report_json, to_canonical_json, AnyDocument, ScheduleDocument};
use shadetrack::patrol::{idle_time_estimate, idle_time_exact, PatrolSchedule};
use shadetrack::{Arc, Circle, Error, Rational, Runner, RunnerSchedule};

fn describe(e: Error) -> String {
    format!("{}: {e}", e.code())
}

fn rational(text: &str) -> Result<Rational, String> {
    text.parse().map_err(describe)
}

/// The relay schedule for a shade `[1 − ℓ, 1]`, with its exact verification.
pub fn no_shade_json(shade_length: &str) -> Result<String, String> {
    let len = rational(shade_length)?;
    if !len.is_positive() || len >= Rational::one() {
        return Err(describe(Error::ShadeTooLong(len.to_string())));
    }
    let circle = Circle::unit();
    let shade = Arc::new(Rational::one() - &len, len, &circle).map_err(describe)?;
    let c = build_no_shade(&shade, None).map_err(describe)?;
    let verdict = verify_no_shade(&c.schedule, &shade).map_err(describe)?;
    let doc = serde_json::to_value(ScheduleDocument::from_no_shade(&c)).map_err(|e| e.to_string())?;
    Ok(to_canonical_json(&json!({ "document": doc, "holds": verdict.holds })))
}

/// Rendezvous speeds for `k` runners and arc `[0, a]`, the given starts
/// (comma separated, missing ones are zero), and the first meeting after `after`.
pub fn rendezvous_json(k: u32, arc_length: &str, starts: &str, after: &str) -> Result<String, String> {
    let a = rational(arc_length)?;
    let after = rational(after)?;
    let speeds = build_rendezvous_speeds(u64::from(k), &a).map_err(describe)?;
    let mut given = starts.split(',').map(str::trim).filter(|s| !s.is_empty());
    let circle = Circle::unit();
    let runners = speeds
        .into_iter()
        .map(|speed| {
            let start = given.next().map(rational).transpose()?.unwrap_or_else(Rational::zero);
            Ok(Runner::new(speed, circle.wrap(&start)))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let schedule = RunnerSchedule::new(circle.clone(), runners).map_err(describe)?;
    let arc = Arc::new(Rational::zero(), a.clone(), &circle).map_err(describe)?;
    let t = find_rendezvous_time(&schedule, &arc, &after).map_err(describe)?;
    let doc =
        serde_json::to_value(ScheduleDocument::from_rendezvous(&schedule, &arc, &a)).map_err(|e| e.to_string())?;
    Ok(to_canonical_json(&json!({
        "document": doc,
        "t": t.as_ref().map(Rational::to_string),
        "t_approx": t.as_ref().map(Rational::to_f64),
    })))
}

/// Idle time of a schedule or patrol document; `grid` empty means exact
/// for runner schedules and 1/256 of the fence for patrols.
pub fn idle_time_json(document: &str, grid: &str) -> Result<String, String> {
    let grid = if grid.trim().is_empty() {
        None
    } else {
        Some(rational(grid)?)
    };
    let report = match AnyDocument::parse(document).map_err(describe)? {
        AnyDocument::Schedule(doc) => {
            let schedule = doc.to_schedule().map_err(describe)?;
            match grid {
                None => idle_time_exact(&schedule),
                Some(g) => PatrolSchedule::from_runners(&schedule).and_then(|p| idle_time_estimate(&p, &g)),
            }
        }
        AnyDocument::Patrol(doc) => doc.to_patrol().and_then(|p| {
            let g = grid.unwrap_or_else(|| p.fence().length() / &Rational::integer(256));
            idle_time_estimate(&p, &g)
        }),
    }
    .map_err(describe)?;
    Ok(to_canonical_json(&idle_report_json(&report)))
}

#[wasm_bindgen]
pub fn no_shade(shade_length: &str) -> Result<String, JsValue> {
    no_shade_json(shade_length).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rendezvous(k: u32, arc_length: &str, starts: &str, after: &str) -> Result<String, JsValue> {
    rendezvous_json(k, arc_length, starts, after).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn idle_time(document: &str, grid: &str) -> Result<String, JsValue> {
    idle_time_json(document, grid).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn no_shade_half() {
        let v: Value = serde_json::from_str(&no_shade_json("1/2").unwrap()).unwrap();
        assert_eq!(v["holds"], true);
        assert_eq!(v["document"]["construction"]["k"], 4);
        assert!(no_shade_json("1").unwrap_err().starts_with("shade-too-long"));
        assert!(no_shade_json("999/1000").unwrap_err().contains("exp(1000)"));
        assert!(no_shade_json("x").unwrap_err().starts_with("parse"));
    }

    #[test]
    fn rendezvous_from_zero_starts() {
        let v: Value = serde_json::from_str(&rendezvous_json(2, "1/2", "", "0").unwrap()).unwrap();
        // Speeds 1 and 4 share the arc during [0, 1/8]; T sits at its start.
        assert_eq!(v["t"], "1/16");
        let v: Value = serde_json::from_str(&rendezvous_json(3, "1/2", "1/3, 2/7", "10").unwrap()).unwrap();
        let t: Rational = v["t"].as_str().unwrap().parse().unwrap();
        assert!(t > Rational::integer(10));
    }

    #[test]
    fn idle_time_of_a_document() {
        let doc = r#"{"schema_version": 1, "circle_length": "1", "runners": [
            {"speed": {"coeff": "1", "radicand": 1}, "start": "0"},
            {"speed": {"coeff": "1", "radicand": 1}, "start": "1/2"}]}"#;
        let v: Value = serde_json::from_str(&idle_time_json(doc, "").unwrap()).unwrap();
        assert_eq!(v["idle"], "1/2");
        let v: Value = serde_json::from_str(&idle_time_json(doc, "1/16").unwrap()).unwrap();
        assert_eq!(v["kind"], "estimate");
    }
}
