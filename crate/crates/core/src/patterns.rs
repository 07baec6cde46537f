//! Pattern identification and partial fulfilment.
//!
//! Repetitive patterns come from the tandem repeats of an extended trace:
//! the pattern spans the positions of the first repeating sequence, and its
//! partial fulfilment is the fraction of offsets within the repeat type that
//! the alignment matches in every repetition.
//!
//! Concurrent patterns come from the partial orders of the log: while
//! enumerating all linearizations (the representative traces), a pattern
//! opens at an event with several successors and closes at the join that
//! consolidates the concurrent strands; its fulfilment is measured against
//! the alignments of all representative traces, either per position (partial
//! matching) or per fully matched interleaving.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::align::{Alignment, StepOp};
use crate::concurrency::{ConcurrencyRelation, PartialOrder, PoGroup};
use crate::eventlog::{EventLog, Trace};
use crate::tandem;
use crate::Fraction;

/// A repetitive pattern of one extended trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitivePattern {
    /// 1-based positions of the first repeating sequence, contiguous.
    pub positions: Vec<usize>,
    pub repetitions: usize,
    /// Trace count of the extended trace.
    pub weight: u64,
    pub fulfilment: Fraction,
    pub repeat_type: Trace,
}

/// Repetitive patterns of `extended` given its alignment.
///
/// The scan mirrors the reduce/extend transformations: at every position
/// with a tandem repeat the longest one is taken and the scan jumps past
/// all of its repetitions.
pub fn repetitive_patterns(
    extended: &Trace,
    alignment: &Alignment,
    weight: u64,
) -> Vec<RepetitivePattern> {
    let ops: Vec<StepOp> = alignment
        .trace_projection()
        .iter()
        .map(|s| s.op)
        .collect();
    debug_assert_eq!(ops.len(), extended.len(), "alignment is not proper");

    let mut patterns = Vec::new();
    for repeat in tandem::chosen_repeats(extended) {
        let alpha_len = repeat.repeat_type.len();
        let start = repeat.start;
        let mut fulfilled = 0usize;
        for offset in 0..alpha_len {
            let all_matched = (0..repeat.repetitions).all(|j| {
                let pos = start + offset + j * alpha_len;
                ops[pos - 1] == StepOp::Match
            });
            if all_matched {
                fulfilled += 1;
            }
        }
        patterns.push(RepetitivePattern {
            positions: (start..start + alpha_len).collect(),
            repetitions: repeat.repetitions,
            weight,
            fulfilment: Fraction::new(fulfilled.into(), alpha_len.into()),
            repeat_type: repeat.repeat_type,
        });
    }
    patterns
}

/// A concurrent pattern of one partial-order class.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrentPattern {
    /// 1-based trace positions, valid in every representative trace.
    pub positions: Vec<usize>,
    /// Trace count of the partial order.
    pub weight: u64,
    /// Undefined until the fulfilment pass ran.
    pub fulfilment: Option<Fraction>,
}

/// Representative traces and concurrent patterns of one partial order.
#[derive(Debug, Clone)]
pub struct PoAnalysis {
    pub group: PoGroup,
    /// All linearizations, as a lexicographically sorted set of label
    /// sequences.
    pub representative_traces: Vec<Trace>,
    /// Number of linear extensions enumerated (before label dedup).
    pub linearization_count: u64,
    pub patterns: Vec<ConcurrentPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("partial order of {po} exceeds the linearization cap of {cap}")]
pub struct LinearizationCapExceeded {
    /// The class identity: its lexicographically smallest source trace.
    pub po: String,
    pub cap: u64,
}

/// The caller's cancellation check asked the enumeration to stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Canceled;

/// How often the linearization search polls the cancellation check.
const CANCEL_POLL_INTERVAL: u32 = 1024;

struct SearchNode {
    last: usize,
    visited: Vec<bool>,
    order: Vec<usize>,
    positions: BTreeSet<usize>,
    concurrent: bool,
}

type Linearized = (BTreeSet<Trace>, u64, BTreeSet<Vec<usize>>);

/// Enumerates all linearizations of `po` and collects the concurrent
/// patterns encountered along the way.
fn linearize(
    po: &PartialOrder,
    cap: u64,
    identity: &str,
    keep_going: &mut dyn FnMut() -> bool,
) -> Result<Result<Linearized, LinearizationCapExceeded>, Canceled> {
    let n = po.node_count();
    let final_event = po.final_event();
    let mut traces = BTreeSet::new();
    let mut patterns: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut count = 0u64;
    let mut since_poll = 0u32;

    let mut visited = alloc::vec![false; n];
    visited[0] = true;
    let mut stack = alloc::vec![SearchNode {
        last: 0,
        visited,
        order: Vec::new(),
        positions: BTreeSet::new(),
        concurrent: false,
    }];

    while let Some(node) = stack.pop() {
        since_poll += 1;
        if since_poll >= CANCEL_POLL_INTERVAL {
            since_poll = 0;
            if !keep_going() {
                return Err(Canceled);
            }
        }
        let concurrent_here = node.concurrent || po.reduced_successors(node.last).len() > 1;
        let eligible: Vec<usize> = (1..n)
            .filter(|&v| {
                !node.visited[v]
                    && po
                        .reduced_predecessors(v)
                        .iter()
                        .all(|&w| node.visited[w])
            })
            .collect();
        let closes_block = |v: usize| {
            po.reduced_predecessors(v).len() > 1
                && eligible.len() == 1
                && !node.positions.is_empty()
        };
        for &u in eligible.iter().rev() {
            if u == final_event {
                if closes_block(u) {
                    patterns.insert(node.positions.iter().copied().collect());
                }
                let labels = node
                    .order
                    .iter()
                    .map(|&e| po.label(e).cloned().expect("sentinel in event order"))
                    .collect();
                traces.insert(Trace::new(labels));
                count += 1;
                if count > cap {
                    return Ok(Err(LinearizationCapExceeded {
                        po: String::from(identity),
                        cap,
                    }));
                }
                continue;
            }
            let mut positions = node.positions.clone();
            let mut concurrent = concurrent_here;
            if closes_block(u) {
                patterns.insert(positions.iter().copied().collect());
                positions.clear();
                concurrent = false;
            }
            let mut order = node.order.clone();
            order.push(u);
            if concurrent {
                positions.insert(order.len());
            }
            let mut visited = node.visited.clone();
            visited[u] = true;
            stack.push(SearchNode {
                last: u,
                visited,
                order,
                positions,
                concurrent,
            });
        }
    }

    Ok(Ok((traces, count, patterns)))
}

/// Runs the linearization search for every partial-order class of the log.
pub fn representative_traces_and_patterns(
    log: &EventLog,
    rel: &ConcurrencyRelation,
    cap: u64,
) -> Vec<Result<PoAnalysis, LinearizationCapExceeded>> {
    representative_traces_and_patterns_cancellable(log, rel, cap, &mut || true)
        .expect("never canceled")
}

/// As [`representative_traces_and_patterns`], polling `keep_going`
/// periodically so long enumerations can be abandoned.
pub fn representative_traces_and_patterns_cancellable(
    log: &EventLog,
    rel: &ConcurrencyRelation,
    cap: u64,
    keep_going: &mut dyn FnMut() -> bool,
) -> Result<Vec<Result<PoAnalysis, LinearizationCapExceeded>>, Canceled> {
    let mut out = Vec::new();
    for group in crate::concurrency::unique_partial_orders(log, rel) {
        let identity = alloc::format!("{}", group.sources[0]);
        match linearize(&group.po, cap, &identity, keep_going)? {
            Err(capped) => out.push(Err(capped)),
            Ok((traces, count, patterns)) => {
                let weight = group.count;
                out.push(Ok(PoAnalysis {
                    group,
                    representative_traces: traces.into_iter().collect(),
                    linearization_count: count,
                    patterns: patterns
                        .into_iter()
                        .map(|positions| ConcurrentPattern {
                            positions,
                            weight,
                            fulfilment: None,
                        })
                        .collect(),
                }))
            }
        }
    }
    Ok(out)
}

/// Partial matching: the fraction of matched pattern positions over all
/// alignments of the representative traces.
pub fn concurrent_fulfilment_partial(positions: &[usize], alignments: &[&Alignment]) -> Fraction {
    let mut matched = 0u64;
    for a in alignments {
        let proj = a.trace_projection();
        for &pos in positions {
            let step = proj
                .get(pos - 1)
                .expect("pattern position beyond the trace projection");
            if step.op == StepOp::Match {
                matched += 1;
            }
        }
    }
    Fraction::new(
        matched.into(),
        ((positions.len() * alignments.len()) as u64).into(),
    )
}

/// Interleavings matching: the fraction of alignments matching every
/// pattern position.
pub fn concurrent_fulfilment_interleavings(
    positions: &[usize],
    alignments: &[&Alignment],
) -> Fraction {
    let mut full = 0u64;
    for a in alignments {
        let proj = a.trace_projection();
        let all = positions.iter().all(|&pos| {
            proj.get(pos - 1)
                .expect("pattern position beyond the trace projection")
                .op
                == StepOp::Match
        });
        if all {
            full += 1;
        }
    }
    Fraction::new(full.into(), (alignments.len() as u64).into())
}

/// Fulfilment mode for concurrent patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matching {
    Partial,
    Interleavings,
}

impl core::fmt::Display for Matching {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Matching::Partial => f.write_str("partial"),
            Matching::Interleavings => f.write_str("interleavings"),
        }
    }
}

/// Fills in the fulfilments of `analysis` from the alignments of its
/// representative traces (`alignments` must contain every one of them).
pub fn compute_concurrent_fulfilments(
    analysis: &mut PoAnalysis,
    alignments: &BTreeMap<Trace, Alignment>,
    matching: Matching,
) {
    let ordered: Vec<&Alignment> = analysis
        .representative_traces
        .iter()
        .map(|t| {
            alignments
                .get(t)
                .expect("missing alignment for a representative trace")
        })
        .collect();
    for pattern in &mut analysis.patterns {
        let pf = match matching {
            Matching::Partial => concurrent_fulfilment_partial(&pattern.positions, &ordered),
            Matching::Interleavings => {
                concurrent_fulfilment_interleavings(&pattern.positions, &ordered)
            }
        };
        debug_assert!(pf >= Fraction::zero() && pf <= Fraction::one());
        pattern.fulfilment = Some(pf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{align, align_extended, AlignLimits};
    use crate::petri::fixtures::running_example_net;
    use crate::tandem::{extend_log, reduce_log};
    use crate::testutil::{running_example_log, local_oracle, t};
    use alloc::vec;

    fn frac(n: i64, d: i64) -> Fraction {
        Fraction::new(n.into(), d.into())
    }

    #[test]
    fn repetitive_patterns_of_the_running_example() {
        let sn = running_example_net();
        let extended = extend_log(&reduce_log(&running_example_log()));
        assert_eq!(extended.distinct_len(), 3);
        let limits = AlignLimits::default();

        let mut rows = Vec::new();
        for (et, &count) in extended.iter() {
            let alignment = align_extended(et, &sn, &limits).unwrap();
            rows.extend(repetitive_patterns(et, &alignment, count));
        }
        rows.sort_by(|a, b| b.weight.cmp(&a.weight).then(a.positions.cmp(&b.positions)));

        assert_eq!(rows.len(), 4);
        // (6): two perfectly fulfilled unit repeats of weight 1000.
        assert_eq!(rows[0].positions, vec![1]);
        assert_eq!(rows[0].repetitions, 6);
        assert_eq!(rows[0].fulfilment, frac(1, 1));
        assert_eq!(rows[1].positions, vec![7]);
        assert_eq!(rows[1].fulfilment, frac(1, 1));
        // (7): two of three offsets fulfilled.
        assert_eq!(rows[2].positions, vec![1, 2, 3]);
        assert_eq!(rows[2].repetitions, 9);
        assert_eq!(rows[2].weight, 500);
        assert_eq!(rows[2].fulfilment, frac(2, 3));
        // (8),(9): one of two offsets fulfilled.
        assert_eq!(rows[3].positions, vec![1, 2]);
        assert_eq!(rows[3].repetitions, 6);
        assert_eq!(rows[3].weight, 400);
        assert_eq!(rows[3].fulfilment, frac(1, 2));
    }

    #[test]
    fn all_match_alignment_gives_full_fulfilment() {
        let sn = running_example_net();
        let mut et = Trace::default();
        for _ in 0..4 {
            et.push(crate::eventlog::ActivityLabel::new("X").unwrap());
        }
        et.extend_from(&t(&["B", "C"]));
        let a = align_extended(&et, &sn, &AlignLimits::default()).unwrap();
        let rows = repetitive_patterns(&et, &a, 10);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].fulfilment, frac(1, 1));
    }

    #[test]
    fn all_log_move_alignments_fulfil_nothing() {
        let sn = running_example_net();
        let trace = t(&["Z", "Z"]);
        let a = align(&trace, &sn, &AlignLimits::default()).unwrap();
        assert!(a
            .trace_projection()
            .iter()
            .all(|s| s.op == crate::align::StepOp::LogOnly));
        let refs = [&a];
        assert_eq!(
            concurrent_fulfilment_partial(&[1, 2], &refs),
            Fraction::zero()
        );
        assert_eq!(
            concurrent_fulfilment_interleavings(&[1, 2], &refs),
            Fraction::zero()
        );
    }

    #[test]
    fn local_oracle_classes_and_patterns() {
        let log = running_example_log();
        let analyses = representative_traces_and_patterns(&log, &local_oracle(), 10_000);
        let analyses: Vec<PoAnalysis> = analyses.into_iter().map(|r| r.unwrap()).collect();

        let with_patterns: Vec<&PoAnalysis> =
            analyses.iter().filter(|a| !a.patterns.is_empty()).collect();
        assert_eq!(with_patterns.len(), 2);

        // The label set a pattern's positions select is the same in every
        // representative trace of its class.
        fn label_set<'a>(
            tr: &'a Trace,
            positions: &[usize],
        ) -> alloc::collections::BTreeSet<&'a str> {
            positions.iter().map(|&p| tr.at(p).as_str()).collect()
        }
        for analysis in &with_patterns {
            for pattern in &analysis.patterns {
                let first = label_set(&analysis.representative_traces[0], &pattern.positions);
                for tr in &analysis.representative_traces {
                    assert_eq!(label_set(tr, &pattern.positions), first);
                }
            }
        }

        let fan = with_patterns
            .iter()
            .find(|a| a.group.count == 2000)
            .unwrap();
        assert_eq!(fan.representative_traces.len(), 2);
        assert_eq!(
            fan.representative_traces,
            vec![t(&["X", "A", "B", "C"]), t(&["X", "A", "C", "B"])]
        );
        assert_eq!(fan.patterns.len(), 1);
        assert_eq!(fan.patterns[0].positions, vec![3, 4]);

        let star = with_patterns.iter().find(|a| a.group.count == 600).unwrap();
        assert_eq!(star.representative_traces.len(), 6);
        assert_eq!(star.linearization_count, 6);
        assert_eq!(star.patterns.len(), 1);
        assert_eq!(star.patterns[0].positions, vec![1, 2, 3]);
    }

    #[test]
    fn chain_po_has_one_trace_and_no_patterns() {
        let mut log = EventLog::new();
        log.add(t(&["A", "B", "C"]), 5);
        let analyses =
            representative_traces_and_patterns(&log, &ConcurrencyRelation::empty(), 10_000);
        let a = analyses.into_iter().next().unwrap().unwrap();
        assert_eq!(a.representative_traces, vec![t(&["A", "B", "C"])]);
        assert_eq!(a.linearization_count, 1);
        assert!(a.patterns.is_empty());
    }

    #[test]
    fn cap_is_reported_per_partial_order() {
        let log = running_example_log();
        let analyses = representative_traces_and_patterns(&log, &local_oracle(), 3);
        let capped: Vec<_> = analyses.iter().filter(|r| r.is_err()).collect();
        assert_eq!(capped.len(), 1, "only the three-way concurrency explodes");
    }

    #[test]
    fn fulfilments_of_the_running_example() {
        let sn = running_example_net();
        let log = running_example_log();
        let limits = AlignLimits::default();
        let mut analyses: Vec<PoAnalysis> =
            representative_traces_and_patterns(&log, &local_oracle(), 10_000)
                .into_iter()
                .map(|r| r.unwrap())
                .collect();

        let mut cache = BTreeMap::new();
        for analysis in &analyses {
            for rt in &analysis.representative_traces {
                if !cache.contains_key(rt) {
                    cache.insert(rt.clone(), align(rt, &sn, &limits).unwrap());
                }
            }
        }

        for analysis in &mut analyses {
            compute_concurrent_fulfilments(analysis, &cache, Matching::Interleavings);
        }
        let im: Vec<Fraction> = analyses
            .iter()
            .flat_map(|a| a.patterns.iter().map(|p| p.fulfilment.clone().unwrap()))
            .collect();
        assert_eq!(im, vec![frac(1, 3), frac(1, 1)]);

        for analysis in &mut analyses {
            compute_concurrent_fulfilments(analysis, &cache, Matching::Partial);
        }
        let pm: Vec<Fraction> = analyses
            .iter()
            .flat_map(|a| a.patterns.iter().map(|p| p.fulfilment.clone().unwrap()))
            .collect();
        assert_eq!(pm, vec![frac(14, 18), frac(1, 1)]);
    }

    #[test]
    fn interleavings_never_exceeds_partial_matching() {
        let sn = running_example_net();
        let log = running_example_log();
        let limits = AlignLimits::default();
        for result in representative_traces_and_patterns(&log, &local_oracle(), 10_000) {
            let analysis = result.unwrap();
            let mut cache = BTreeMap::new();
            for rt in &analysis.representative_traces {
                cache.insert(rt.clone(), align(rt, &sn, &limits).unwrap());
            }
            let ordered: Vec<&Alignment> = analysis
                .representative_traces
                .iter()
                .map(|t| &cache[t])
                .collect();
            for pattern in &analysis.patterns {
                let im = concurrent_fulfilment_interleavings(&pattern.positions, &ordered);
                let pm = concurrent_fulfilment_partial(&pattern.positions, &ordered);
                assert!(im <= pm);
            }
        }
    }
}
