//! Round-trip property for the CSV log format.

use patgen::csv::{parse_csv, render_csv};
use patgen_core::eventlog::{EventLog, Trace};
use proptest::prelude::*;

fn arb_log() -> impl Strategy<Value = EventLog> {
    let label = "[A-Za-z][A-Za-z0-9_]{0,4}";
    let trace = prop::collection::vec(label, 1..6);
    prop::collection::vec((trace, 1u64..1000), 0..8).prop_map(|entries| {
        entries
            .into_iter()
            .map(|(names, count)| (Trace::from_names(&names).unwrap(), count))
            .collect()
    })
}

proptest! {
    #[test]
    fn csv_round_trip(log in arb_log()) {
        let rendered = render_csv(&log);
        let parsed = parse_csv(&rendered).unwrap();
        prop_assert_eq!(parsed, log);
    }
}
