//! Shared fixtures for the crate's tests: the running-example log, the
//! trace-local oracle matching it, and small helpers.

use alloc::collections::{BTreeMap, BTreeSet};

use crate::concurrency::ConcurrencyRelation;
use crate::eventlog::{EventLog, Trace};

pub fn t(names: &[&str]) -> Trace {
    Trace::from_names(names).unwrap()
}

/// The nine-trace running-example log, 4500 traces in total.
pub fn running_example_log() -> EventLog {
    let rows: &[(&[&str], u64)] = &[
        (&["X", "A", "B", "C"], 1000),
        (&["X", "A", "C", "B"], 1000),
        (&["A", "B", "C"], 200),
        (&["B", "A", "C"], 200),
        (&["C", "A", "B"], 200),
        (&["X", "X", "X", "X", "A", "A", "A", "A", "B", "C"], 1000),
        (&["X", "X", "A", "X", "X", "A", "X", "B", "C"], 500),
        (&["X", "A", "X", "A", "X", "A", "C", "B"], 200),
        (
            &["X", "A", "X", "A", "X", "A", "X", "A", "X", "A", "C", "B"],
            200,
        ),
    ];
    rows.iter().map(|(names, c)| (t(names), *c)).collect()
}

/// The trace-local concurrency relation of the running example: B and C are
/// concurrent after X in traces (1) and (2); A, B and C are fully concurrent
/// in traces (3), (4) and (5).
pub fn local_oracle() -> ConcurrencyRelation {
    let mut per_trace: BTreeMap<Trace, BTreeSet<(usize, usize)>> = BTreeMap::new();
    for names in [["X", "A", "B", "C"], ["X", "A", "C", "B"]] {
        per_trace.insert(t(&names), BTreeSet::from([(3, 4)]));
    }
    for names in [["A", "B", "C"], ["B", "A", "C"], ["C", "A", "B"]] {
        per_trace.insert(t(&names), BTreeSet::from([(1, 2), (1, 3), (2, 3)]));
    }
    ConcurrencyRelation::explicit([], per_trace)
}
