//! Concurrency oracles and trace-to-partial-order conversion.
//!
//! A concurrency oracle declares which activities (globally, by label) or
//! which trace positions (the explicit, trace-local form) are concurrent.
//! Dropping the order between concurrent events turns a trace into a
//! labelled partial order with sentinel events `s0`/`f0`; traces that induce
//! isomorphic partial orders are grouped, with their counts added up.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;

use crate::eventlog::{ActivityLabel, EventLog, Trace};
use crate::Fraction;

/// Directly-follows counts plus the boolean view used by the oracles.
///
/// Counts are weighted: every occurrence of a trace in the log contributes
/// all of its adjacencies.
#[derive(Debug, Clone, Default)]
pub struct DirectlyFollowsStats {
    counts: BTreeMap<(ActivityLabel, ActivityLabel), u64>,
    df: BTreeSet<(ActivityLabel, ActivityLabel)>,
}

impl DirectlyFollowsStats {
    pub fn count(&self, x: &ActivityLabel, y: &ActivityLabel) -> u64 {
        self.counts
            .get(&(x.clone(), y.clone()))
            .copied()
            .unwrap_or(0)
    }

    /// The filtered boolean directly-follows relation.
    pub fn df(&self, x: &ActivityLabel, y: &ActivityLabel) -> bool {
        self.df.contains(&(x.clone(), y.clone()))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(ActivityLabel, ActivityLabel), &u64)> {
        self.counts.iter()
    }
}

pub fn directly_follows(log: &EventLog) -> DirectlyFollowsStats {
    let mut counts: BTreeMap<(ActivityLabel, ActivityLabel), u64> = BTreeMap::new();
    for (t, &c) in log.iter() {
        for i in 1..t.len() {
            *counts
                .entry((t.at(i).clone(), t.at(i + 1).clone()))
                .or_insert(0) += c;
        }
    }
    let df = counts.keys().cloned().collect();
    DirectlyFollowsStats { counts, df }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("noise level must lie in [0, 1], got {0}")]
pub struct InvalidNoiseLevel(pub String);

/// Frequency filter on the directly-follows relation.
///
/// `df(x,y)` holds iff `dfC(x,y) > ε·(Σ_{z≠x} dfC(x,z) + Σ_{z≠y} dfC(z,y))/2`.
/// Counts are retained; only the boolean view changes.
pub fn filter_df(
    stats: &DirectlyFollowsStats,
    epsilon: &Fraction,
) -> Result<DirectlyFollowsStats, InvalidNoiseLevel> {
    let one = Fraction::from_integer(1.into());
    if epsilon < &Fraction::zero() || epsilon > &one {
        return Err(InvalidNoiseLevel(alloc::format!("{epsilon}")));
    }
    let mut outgoing: BTreeMap<&ActivityLabel, u64> = BTreeMap::new();
    let mut incoming: BTreeMap<&ActivityLabel, u64> = BTreeMap::new();
    for ((x, y), &c) in &stats.counts {
        if x != y {
            *outgoing.entry(x).or_insert(0) += c;
            *incoming.entry(y).or_insert(0) += c;
        }
    }
    let mut df = BTreeSet::new();
    for ((x, y), &c) in &stats.counts {
        let out_x = outgoing.get(x).copied().unwrap_or(0);
        let in_y = incoming.get(y).copied().unwrap_or(0);
        let threshold = epsilon * Fraction::new((out_x + in_y).into(), 2.into());
        if Fraction::from_integer(c.into()) > threshold {
            df.insert((x.clone(), y.clone()));
        }
    }
    Ok(DirectlyFollowsStats {
        counts: stats.counts.clone(),
        df,
    })
}

fn ordered_pair(a: &ActivityLabel, b: &ActivityLabel) -> (ActivityLabel, ActivityLabel) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Symmetric concurrency, either global (over labels) or trace-local
/// (over 1-based positions of specific traces), or both.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConcurrencyRelation {
    global: BTreeSet<(ActivityLabel, ActivityLabel)>,
    trace_local: BTreeMap<Trace, BTreeSet<(usize, usize)>>,
}

impl ConcurrencyRelation {
    pub fn empty() -> Self {
        ConcurrencyRelation::default()
    }

    pub fn global(pairs: impl IntoIterator<Item = (ActivityLabel, ActivityLabel)>) -> Self {
        ConcurrencyRelation {
            global: pairs.into_iter().map(|(a, b)| ordered_pair(&a, &b)).collect(),
            trace_local: BTreeMap::new(),
        }
    }

    pub fn explicit(
        global: impl IntoIterator<Item = (ActivityLabel, ActivityLabel)>,
        trace_local: BTreeMap<Trace, BTreeSet<(usize, usize)>>,
    ) -> Self {
        let mut normalized = BTreeMap::new();
        for (t, pairs) in trace_local {
            let pairs: BTreeSet<(usize, usize)> = pairs
                .into_iter()
                .map(|(i, j)| if i <= j { (i, j) } else { (j, i) })
                .collect();
            normalized.insert(t, pairs);
        }
        ConcurrencyRelation {
            global: global.into_iter().map(|(a, b)| ordered_pair(&a, &b)).collect(),
            trace_local: normalized,
        }
    }

    pub fn global_pairs(&self) -> &BTreeSet<(ActivityLabel, ActivityLabel)> {
        &self.global
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty() && self.trace_local.values().all(|p| p.is_empty())
    }

    pub fn labels_concurrent(&self, a: &ActivityLabel, b: &ActivityLabel) -> bool {
        self.global.contains(&ordered_pair(a, b))
    }

    /// Concurrency of positions `x < y` within `t`: by label for the global
    /// pairs, by position for the trace-local entries.
    pub fn positions_concurrent(&self, t: &Trace, x: usize, y: usize) -> bool {
        if self.labels_concurrent(t.at(x), t.at(y)) {
            return true;
        }
        self.trace_local
            .get(t)
            .is_some_and(|pairs| pairs.contains(&(x.min(y), x.max(y))))
    }
}

/// Alpha oracle: `x ∥ y` iff both directly follow each other.
pub fn alpha_oracle(stats: &DirectlyFollowsStats) -> ConcurrencyRelation {
    let mut pairs = BTreeSet::new();
    for (x, y) in stats.df.iter() {
        if stats.df(y, x) {
            pairs.insert(ordered_pair(x, y));
        }
    }
    ConcurrencyRelation {
        global: pairs,
        trace_local: BTreeMap::new(),
    }
}

/// Alpha+ oracle: the alpha relation minus pairs observed in a short loop
/// (`x,y,x` at consecutive positions of any trace).
pub fn alpha_plus_oracle(log: &EventLog, stats: &DirectlyFollowsStats) -> ConcurrencyRelation {
    let alpha = alpha_oracle(stats);
    let mut short_loop: BTreeSet<(ActivityLabel, ActivityLabel)> = BTreeSet::new();
    for t in log.unique() {
        for i in 1..=t.len().saturating_sub(2) {
            if t.at(i) == t.at(i + 2) {
                short_loop.insert(ordered_pair(t.at(i), t.at(i + 1)));
            }
        }
    }
    ConcurrencyRelation {
        global: alpha
            .global
            .into_iter()
            .filter(|p| !short_loop.contains(p))
            .collect(),
        trace_local: BTreeMap::new(),
    }
}

/// A labelled partial order over the events of a trace, with sentinel
/// events at index 0 (`s0`) and `n-1` (`f0`) carrying no label.
#[derive(Clone, PartialEq, Eq)]
pub struct PartialOrder {
    labels: Vec<Option<ActivityLabel>>,
    /// Reflexive-transitive order, row-major `n × n`.
    leq: Vec<bool>,
    reduced_succ: Vec<Vec<usize>>,
    reduced_pred: Vec<Vec<usize>>,
}

impl PartialOrder {
    /// Node count including both sentinels.
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    /// Number of proper (labelled) events.
    pub fn event_count(&self) -> usize {
        self.labels.len() - 2
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn final_event(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn label(&self, node: usize) -> Option<&ActivityLabel> {
        self.labels[node].as_ref()
    }

    pub fn le(&self, a: usize, b: usize) -> bool {
        self.leq[a * self.labels.len() + b]
    }

    /// Successors in the transitive reduction `≤⁻`.
    pub fn reduced_successors(&self, node: usize) -> &[usize] {
        &self.reduced_succ[node]
    }

    /// Predecessors in the transitive reduction `≤⁻`.
    pub fn reduced_predecessors(&self, node: usize) -> &[usize] {
        &self.reduced_pred[node]
    }
}

impl fmt::Debug for PartialOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut arcs = Vec::new();
        for (u, succ) in self.reduced_succ.iter().enumerate() {
            for &v in succ {
                arcs.push((u, v));
            }
        }
        f.debug_struct("PartialOrder")
            .field("labels", &self.labels)
            .field("reduced", &arcs)
            .finish()
    }
}

/// ξ: builds the partial order of a trace under a concurrency relation.
pub fn to_partial_order(t: &Trace, rel: &ConcurrencyRelation) -> PartialOrder {
    let n = t.len() + 2;
    let mut labels = Vec::with_capacity(n);
    labels.push(None);
    for l in t.iter() {
        labels.push(Some(l.clone()));
    }
    labels.push(None);

    let idx = |a: usize, b: usize| a * n + b;
    let mut leq = alloc::vec![false; n * n];
    for v in 0..n {
        leq[idx(v, v)] = true;
    }
    for e in 1..n {
        leq[idx(0, e)] = true; // s0 before everything
    }
    for e in 0..n - 1 {
        leq[idx(e, n - 1)] = true; // everything before f0
    }
    for x in 1..=t.len() {
        for y in x + 1..=t.len() {
            if !rel.positions_concurrent(t, x, y) {
                leq[idx(x, y)] = true;
            }
        }
    }
    // Transitive closure; all arcs point from lower to higher index.
    for w in 0..n {
        for u in 0..n {
            if leq[idx(u, w)] {
                for v in 0..n {
                    if leq[idx(w, v)] {
                        leq[idx(u, v)] = true;
                    }
                }
            }
        }
    }

    let mut reduced_succ = alloc::vec![Vec::new(); n];
    let mut reduced_pred = alloc::vec![Vec::new(); n];
    for u in 0..n {
        for v in 0..n {
            if u == v || !leq[idx(u, v)] {
                continue;
            }
            let has_mid = (0..n).any(|w| w != u && w != v && leq[idx(u, w)] && leq[idx(w, v)]);
            if !has_mid {
                reduced_succ[u].push(v);
                reduced_pred[v].push(u);
            }
        }
    }

    PartialOrder {
        labels,
        leq,
        reduced_succ,
        reduced_pred,
    }
}

/// A class of traces whose partial orders are isomorphic.
#[derive(Debug, Clone)]
pub struct PoGroup {
    /// The partial order of the lexicographically smallest source trace.
    pub po: PartialOrder,
    /// Source traces in lexicographic order.
    pub sources: Vec<Trace>,
    /// Accumulated trace count.
    pub count: u64,
}

/// Groups the unique traces of a log by isomorphism of their partial orders.
pub fn unique_partial_orders(log: &EventLog, rel: &ConcurrencyRelation) -> Vec<PoGroup> {
    let mut keyed: BTreeMap<Vec<u8>, PoGroup> = BTreeMap::new();
    for (t, &c) in log.iter() {
        let po = to_partial_order(t, rel);
        let key = canonical_key(&po);
        keyed
            .entry(key)
            .and_modify(|g| {
                g.sources.push(t.clone());
                g.count += c;
            })
            .or_insert_with(|| PoGroup {
                po,
                sources: alloc::vec![t.clone()],
                count: c,
            });
    }
    let mut groups: Vec<PoGroup> = keyed.into_values().collect();
    groups.sort_by(|a, b| a.sources[0].cmp(&b.sources[0]));
    groups
}

/// Canonical encoding of a partial order under label-preserving isomorphism.
///
/// Colors are refined by (label, predecessor colors, successor colors); ties
/// are resolved by individualization, taking the lexicographically smallest
/// encoding over the branches.
pub fn canonical_key(po: &PartialOrder) -> Vec<u8> {
    let n = po.node_count();
    let mut initial: Vec<(Option<&ActivityLabel>, usize)> = Vec::with_capacity(n);
    // Sentinels get ranks no label can collide with.
    for v in 0..n {
        let sentinel = if v == 0 {
            1
        } else if v == n - 1 {
            2
        } else {
            0
        };
        initial.push((po.label(v), sentinel));
    }
    let mut sorted: Vec<_> = initial.clone();
    sorted.sort();
    sorted.dedup();
    let colors: Vec<u32> = initial
        .iter()
        .map(|k| sorted.binary_search(k).unwrap() as u32)
        .collect();
    canonicalize(po, colors)
}

fn refine(po: &PartialOrder, mut colors: Vec<u32>) -> Vec<u32> {
    let n = po.node_count();
    loop {
        let mut sigs: Vec<(u32, Vec<u32>, Vec<u32>)> = Vec::with_capacity(n);
        for v in 0..n {
            let mut preds: Vec<u32> = po.reduced_predecessors(v).iter().map(|&u| colors[u]).collect();
            let mut succs: Vec<u32> = po.reduced_successors(v).iter().map(|&u| colors[u]).collect();
            preds.sort_unstable();
            succs.sort_unstable();
            sigs.push((colors[v], preds, succs));
        }
        let mut sorted = sigs.clone();
        sorted.sort();
        sorted.dedup();
        let next: Vec<u32> = sigs
            .iter()
            .map(|s| sorted.binary_search(s).unwrap() as u32)
            .collect();
        if next == colors {
            return colors;
        }
        colors = next;
    }
}

fn canonicalize(po: &PartialOrder, colors: Vec<u32>) -> Vec<u8> {
    let n = po.node_count();
    let colors = refine(po, colors);
    let mut classes: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (v, &c) in colors.iter().enumerate() {
        classes.entry(c).or_default().push(v);
    }
    if let Some((_, members)) = classes.iter().find(|(_, m)| m.len() > 1) {
        // Members with identical predecessor and successor sets are
        // interchangeable (swapping them is an automorphism), so one
        // branch per clone group suffices. This keeps antichains of
        // equally-labelled events linear instead of factorial.
        let mut seen: BTreeSet<(&[usize], &[usize])> = BTreeSet::new();
        let mut best: Option<Vec<u8>> = None;
        for &v in members {
            if !seen.insert((po.reduced_predecessors(v), po.reduced_successors(v))) {
                continue;
            }
            let mut branched = colors.clone();
            branched[v] = n as u32 + 1; // fresh color
            let key = canonicalize(po, branched);
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
            }
        }
        return best.unwrap();
    }

    // Discrete coloring: order nodes by color and serialize labels plus the
    // reduced adjacency under that order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| colors[v]);
    let mut rank = alloc::vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let mut out = Vec::new();
    out.extend_from_slice(&(n as u32).to_be_bytes());
    for &v in &order {
        match po.label(v) {
            Some(l) => {
                out.push(1);
                out.extend_from_slice(l.as_str().as_bytes());
            }
            None => out.push(0),
        }
        out.push(0xff);
    }
    for &v in &order {
        let mut row: Vec<usize> = po.reduced_successors(v).iter().map(|&u| rank[u]).collect();
        row.sort_unstable();
        out.extend_from_slice(&(row.len() as u32).to_be_bytes());
        for r in row {
            out.extend_from_slice(&(r as u32).to_be_bytes());
        }
    }
    out
}
