use proptest::prelude::*;
use shadetrack::document::ScheduleDocument;
use shadetrack::{Circle, Rational, Runner, RunnerSchedule, SpeedValue};

proptest! {
    #[test]
    fn schedule_documents_round_trip(
        len in (1i64..10, 1i64..5),
        raw in prop::collection::vec((1i64..50, 1i64..9, prop::sample::select(vec![1u64, 2, 3, 5, 6, 7]), 0i64..1000), 0..6),
    ) {
        let circle = Circle::new(Rational::frac(len.0, len.1)).unwrap();
        let runners = raw
            .iter()
            .map(|&(n, d, r, s)| {
                let start = circle.wrap(&Rational::frac(s, 37));
                Runner::new(SpeedValue::new(Rational::frac(n, d), r).unwrap(), start)
            })
            .collect();
        let schedule = RunnerSchedule::allowing_repeated_speeds(circle, runners).unwrap();
        let doc = ScheduleDocument::from_schedule(&schedule, None);
        let text = doc.to_json();
        let back = ScheduleDocument::parse(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_schedule().unwrap(), schedule);
        prop_assert_eq!(back.to_json(), text);
    }
}
