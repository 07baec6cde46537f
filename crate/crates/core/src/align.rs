//! Optimal, deterministic alignments between traces and system nets.
//!
//! [`align`] runs an A* search over pairs of (marking, trace position) under
//! the standard cost function: synchronous moves are free, log-only and
//! model-only moves cost one, silent model moves are free and are hidden
//! from the reported step sequence.
//!
//! [`align_extended`] aligns a trace whose tandem repeats were pumped up by
//! the extend transformation. Among the minimum-cost alignments of such a
//! trace there are many that treat individual repetitions differently; the
//! loop-canonical search aligns the two-copy reduced form instead, forcing
//! the first copy onto a marking cycle, weighting its steps by the number of
//! replications, and unrolling the cycle afterwards. The result is used
//! whenever it is exactly as cheap as the unrestricted optimum, so every
//! repetition of a repeat is aligned by the same block of moves.
//!
//! [`brute_force_align`] is an independent oracle: it enumerates the visible
//! runs of the net and edit-aligns each against the trace.

use alloc::collections::btree_map::Entry;
use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::eventlog::{ActivityLabel, Trace};
use crate::petri::{FiringError, Marking, SystemNet, TransitionId};
use crate::tandem;

/// Alignment step operations: `MT` (move in both), `LH` (log only),
/// `RH` (model only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepOp {
    Match,
    LogOnly,
    ModelOnly,
}

impl StepOp {
    /// The conventional two-letter name.
    pub fn code(self) -> &'static str {
        match self {
            StepOp::Match => "MT",
            StepOp::LogOnly => "LH",
            StepOp::ModelOnly => "RH",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentStep {
    pub op: StepOp,
    pub label: ActivityLabel,
}

/// A proper alignment; silent model moves are internal and not listed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    steps: Vec<AlignmentStep>,
    cost: u64,
}

impl Alignment {
    pub fn steps(&self) -> &[AlignmentStep] {
        &self.steps
    }

    /// Total cost `g`: one per `LH`/`RH` step, zero per `MT` step.
    pub fn cost(&self) -> u64 {
        self.cost
    }

    /// The steps with `op ≠ RH`; position `i` corresponds to trace
    /// position `i`.
    pub fn trace_projection(&self) -> Vec<&AlignmentStep> {
        self.steps
            .iter()
            .filter(|s| s.op != StepOp::ModelOnly)
            .collect()
    }

    /// Operation codes of the trace projection, e.g. `["MT", "LH", ...]`.
    pub fn trace_ops(&self) -> Vec<&'static str> {
        self.trace_projection()
            .iter()
            .map(|s| s.op.code())
            .collect()
    }

    fn from_steps(steps: Vec<AlignmentStep>) -> Alignment {
        let cost = steps.iter().filter(|s| s.op != StepOp::Match).count() as u64;
        Alignment { steps, cost }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlignLimits {
    /// Maximum number of search-state expansions before giving up.
    pub max_expansions: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignError {
    #[error("no proper alignment for {trace}: the final marking is unreachable")]
    FinalMarkingUnreachable { trace: String },
    #[error("alignment search hit a safety violation: {0}")]
    UnsafeNet(FiringError),
    #[error("alignment step budget of {budget} expansions exhausted")]
    BudgetExhausted { budget: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StepKind {
    Match(TransitionId),
    Silent(TransitionId),
    Model(TransitionId),
    Log,
}

impl StepKind {
    fn cost(self) -> u64 {
        match self {
            StepKind::Match(_) | StepKind::Silent(_) => 0,
            StepKind::Model(_) | StepKind::Log => 1,
        }
    }
}

fn emit(sn: &SystemNet, trace: &Trace, pos_before: usize, kind: StepKind) -> Option<AlignmentStep> {
    match kind {
        StepKind::Match(t) => Some(AlignmentStep {
            op: StepOp::Match,
            label: sn.net().transition(t).label.clone().unwrap(),
        }),
        StepKind::Model(t) => Some(AlignmentStep {
            op: StepOp::ModelOnly,
            label: sn.net().transition(t).label.clone().unwrap(),
        }),
        StepKind::Log => Some(AlignmentStep {
            op: StepOp::LogOnly,
            label: trace.at(pos_before + 1).clone(),
        }),
        StepKind::Silent(_) => None,
    }
}

/// Minimum-cost proper alignment of `trace` with `sn`.
///
/// Deterministic: states are expanded in order of (f, deeper g first,
/// insertion sequence), and all bookkeeping uses ordered maps.
pub fn align(trace: &Trace, sn: &SystemNet, limits: &AlignLimits) -> Result<Alignment, AlignError> {
    let n = trace.len();

    // Admissible heuristic: labels in the remaining suffix that no
    // transition of the net carries must end as log moves.
    let net_alphabet: BTreeSet<&ActivityLabel> = sn
        .net()
        .transitions()
        .iter()
        .filter_map(|t| t.label.as_ref())
        .collect();
    let mut absent_suffix = alloc::vec![0u64; n + 1];
    for pos in (0..n).rev() {
        let absent = !net_alphabet.contains(trace.at(pos + 1));
        absent_suffix[pos] = absent_suffix[pos + 1] + u64::from(absent);
    }

    type State = (Marking, usize);
    let start: State = (sn.initial_marking(), 0);
    let goal: State = (sn.final_marking(), n);

    type QueueKey = (u64, Reverse<u64>, u64, (Marking, usize));
    let mut best: BTreeMap<State, u64> = BTreeMap::new();
    let mut parent: BTreeMap<State, (State, StepKind)> = BTreeMap::new();
    // Heap orders by (f ascending, g descending, insertion order).
    let mut heap: BinaryHeap<Reverse<QueueKey>> = BinaryHeap::new();
    let mut seq = 0u64;
    best.insert(start.clone(), 0);
    heap.push(Reverse((absent_suffix[0], Reverse(0), seq, start.clone())));

    let mut expansions = 0u64;
    while let Some(Reverse((_, Reverse(g), _, state))) = heap.pop() {
        if best.get(&state) != Some(&g) {
            continue;
        }
        if state == goal {
            let mut steps = Vec::new();
            let mut cur = state;
            while let Some((prev, kind)) = parent.get(&cur) {
                if let Some(step) = emit(sn, trace, prev.1, *kind) {
                    steps.push(step);
                }
                cur = prev.clone();
            }
            steps.reverse();
            let alignment = Alignment::from_steps(steps);
            debug_assert_eq!(alignment.cost, g);
            return Ok(alignment);
        }
        expansions += 1;
        if let Some(budget) = limits.max_expansions {
            if expansions > budget {
                return Err(AlignError::BudgetExhausted { budget });
            }
        }

        let (marking, pos) = &state;
        let mut successors: Vec<(State, StepKind)> = Vec::new();
        if *pos < n {
            let next_label = trace.at(pos + 1);
            for (i, t) in sn.net().transitions().iter().enumerate() {
                let tid = TransitionId(i as u32);
                if t.label.as_ref() == Some(next_label) && sn.is_enabled(marking, tid) {
                    let m = sn.fire(marking, tid).map_err(AlignError::UnsafeNet)?;
                    successors.push(((m, pos + 1), StepKind::Match(tid)));
                }
            }
        }
        for (i, t) in sn.net().transitions().iter().enumerate() {
            let tid = TransitionId(i as u32);
            if !sn.is_enabled(marking, tid) {
                continue;
            }
            let m = sn.fire(marking, tid).map_err(AlignError::UnsafeNet)?;
            let kind = if t.is_silent() {
                StepKind::Silent(tid)
            } else {
                StepKind::Model(tid)
            };
            successors.push(((m, *pos), kind));
        }
        if *pos < n {
            successors.push(((marking.clone(), pos + 1), StepKind::Log));
        }

        for (succ, kind) in successors {
            let g2 = g + kind.cost();
            let better = match best.entry(succ.clone()) {
                Entry::Vacant(e) => {
                    e.insert(g2);
                    true
                }
                Entry::Occupied(mut e) => {
                    if g2 < *e.get() {
                        e.insert(g2);
                        true
                    } else {
                        false
                    }
                }
            };
            if better {
                parent.insert(succ.clone(), (state.clone(), kind));
                seq += 1;
                let f = g2 + absent_suffix[succ.1];
                heap.push(Reverse((f, Reverse(g2), seq, succ)));
            }
        }
    }

    Err(AlignError::FinalMarkingUnreachable {
        trace: alloc::format!("{trace}"),
    })
}

/// One pumped tandem-repeat region of an extended trace.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Region {
    /// 1-based start in the reduced view.
    start: usize,
    alpha_len: usize,
    /// Repetitions in the extended trace.
    reps: usize,
}

/// Aligns an extended trace, preferring the loop-canonical form.
///
/// Falls back to the plain optimum when forcing the repeats onto marking
/// cycles would cost more.
pub fn align_extended(
    extended: &Trace,
    sn: &SystemNet,
    limits: &AlignLimits,
) -> Result<Alignment, AlignError> {
    let chosen = tandem::chosen_repeats(extended);
    if chosen.is_empty() {
        return align(extended, sn, limits);
    }

    // Reduced view: two copies per repeat region.
    let mut reduced = Trace::default();
    let mut regions: Vec<Region> = Vec::new();
    let mut pos = 1usize;
    let mut it = chosen.iter().peekable();
    while pos <= extended.len() {
        match it.peek() {
            Some(r) if r.start == pos => {
                let alpha_len = r.repeat_type.len();
                regions.push(Region {
                    start: reduced.len() + 1,
                    alpha_len,
                    reps: r.repetitions,
                });
                reduced.extend_from(&r.repeat_type);
                reduced.extend_from(&r.repeat_type);
                pos += alpha_len * r.repetitions;
                it.next();
            }
            _ => {
                reduced.push(extended.at(pos).clone());
                pos += 1;
            }
        }
    }

    let direct = align(extended, sn, limits)?;
    match canonical_search(&reduced, &regions, sn, limits) {
        Ok(Some(canonical)) if canonical.cost() == direct.cost() => Ok(canonical),
        // No cycle-shaped optimum, or the constrained search ran out of
        // budget: the unrestricted optimum stands.
        Ok(_) | Err(AlignError::BudgetExhausted { .. }) => Ok(direct),
        Err(other) => Err(other),
    }
}

/// Dijkstra over the reduced trace with first-copy steps constrained to a
/// marking cycle and weighted by the replication count. Secondary cost
/// prefers matching the final repetition.
fn canonical_search(
    reduced: &Trace,
    regions: &[Region],
    sn: &SystemNet,
    limits: &AlignLimits,
) -> Result<Option<Alignment>, AlignError> {
    let n = reduced.len();
    // For each consumed-count p (1-based position), which region's first
    // copy (weighted) or second copy (secondary-cost span) it belongs to.
    let mut copy1_of = alloc::vec![None; n + 1];
    let mut copy2_of = alloc::vec![None; n + 1];
    for (i, r) in regions.iter().enumerate() {
        for slot in &mut copy1_of[r.start..r.start + r.alpha_len] {
            *slot = Some(i);
        }
        for slot in &mut copy2_of[r.start + r.alpha_len..r.start + 2 * r.alpha_len] {
            *slot = Some(i);
        }
    }
    let copy1_end = |i: usize| regions[i].start + regions[i].alpha_len - 1;

    type Phase = Option<(usize, Marking)>;
    type State = (Marking, usize, Phase);
    type Cost = (u64, u64);

    let start: State = (sn.initial_marking(), 0, None);
    let mut best: BTreeMap<State, Cost> = BTreeMap::new();
    let mut parent: BTreeMap<State, (State, StepKind, Option<usize>)> = BTreeMap::new();
    let mut heap: BinaryHeap<Reverse<(Cost, u64, State)>> = BinaryHeap::new();
    let mut seq = 0u64;
    best.insert(start.clone(), (0, 0));
    heap.push(Reverse(((0, 0), seq, start)));

    let weight_of = |region: usize| (regions[region].reps - 1) as u64;

    let mut expansions = 0u64;
    while let Some(Reverse((cost, _, state))) = heap.pop() {
        if best.get(&state) != Some(&cost) {
            continue;
        }
        let (marking, pos, phase) = &state;
        if *pos == n && *marking == sn.final_marking() && phase.is_none() {
            let mut rev: Vec<(StepKind, usize, Option<usize>)> = Vec::new();
            let mut cur = state.clone();
            while let Some((prev, kind, block)) = parent.get(&cur) {
                rev.push((*kind, prev.1, *block));
                cur = prev.clone();
            }
            rev.reverse();
            return Ok(Some(unroll(reduced, regions, sn, &rev)));
        }
        expansions += 1;
        if let Some(budget) = limits.max_expansions {
            if expansions > budget {
                return Err(AlignError::BudgetExhausted { budget });
            }
        }

        // (successor, kind, block membership, step weight)
        let mut successors: Vec<(State, StepKind, Option<usize>, u64)> = Vec::new();
        let consuming_allowed = match phase {
            None => true,
            // Inside a first copy; once it is fully consumed the cycle must
            // close before anything else is consumed.
            Some(_) => *pos < n && copy1_of[*pos + 1].is_some(),
        };
        let in_block_weight = phase.as_ref().map(|(r, _)| weight_of(*r)).unwrap_or(1);

        let mut push = |succ_m: Marking, succ_pos: usize, kind: StepKind| {
            // Phase bookkeeping happens in the caller below.
            successors.push((
                (succ_m, succ_pos, phase.clone()),
                kind,
                phase.as_ref().map(|(r, _)| *r),
                in_block_weight,
            ));
        };

        if *pos < n && consuming_allowed {
            let next_label = reduced.at(pos + 1);
            for (i, t) in sn.net().transitions().iter().enumerate() {
                let tid = TransitionId(i as u32);
                if t.label.as_ref() == Some(next_label) && sn.is_enabled(marking, tid) {
                    let m = sn.fire(marking, tid).map_err(AlignError::UnsafeNet)?;
                    push(m, pos + 1, StepKind::Match(tid));
                }
            }
            push(marking.clone(), pos + 1, StepKind::Log);
        }
        for (i, t) in sn.net().transitions().iter().enumerate() {
            let tid = TransitionId(i as u32);
            if !sn.is_enabled(marking, tid) {
                continue;
            }
            let m = sn.fire(marking, tid).map_err(AlignError::UnsafeNet)?;
            let kind = if t.is_silent() {
                StepKind::Silent(tid)
            } else {
                StepKind::Model(tid)
            };
            push(m, *pos, kind);
        }

        for (mut succ, kind, mut block, mut weight) in successors {
            // Entering a first copy anchors the cycle at the pre-step
            // marking; the anchoring step itself belongs to the block.
            let consumed = succ.1;
            let is_consuming = consumed > *pos;
            if phase.is_none() && is_consuming {
                if let Some(r) = copy1_of[consumed] {
                    succ.2 = Some((r, marking.clone()));
                    block = Some(r);
                    weight = weight_of(r);
                }
            }
            // Closing: the first copy is consumed and the marking returned
            // to the anchor.
            if let Some((r, anchor)) = succ.2.clone() {
                if succ.1 == copy1_end(r) && succ.0 == anchor {
                    succ.2 = None;
                }
            }
            let mut secondary = 0u64;
            if is_consuming && copy2_of[consumed].is_some() {
                secondary = kind.cost();
            }
            let cost2 = (cost.0 + kind.cost() * weight, cost.1 + secondary);
            let better = match best.entry(succ.clone()) {
                Entry::Vacant(e) => {
                    e.insert(cost2);
                    true
                }
                Entry::Occupied(mut e) => {
                    if cost2 < *e.get() {
                        e.insert(cost2);
                        true
                    } else {
                        false
                    }
                }
            };
            if better {
                parent.insert(succ.clone(), (state.clone(), kind, block));
                seq += 1;
                heap.push(Reverse((cost2, seq, succ)));
            }
        }
    }

    Ok(None)
}

/// Expands the recorded reduced-trace path back to the extended trace:
/// every block is replayed `reps - 1` times before its closing copy.
fn unroll(
    reduced: &Trace,
    regions: &[Region],
    sn: &SystemNet,
    path: &[(StepKind, usize, Option<usize>)],
) -> Alignment {
    let mut steps: Vec<AlignmentStep> = Vec::new();
    let mut i = 0;
    while i < path.len() {
        let (kind, pos_before, block) = path[i];
        match block {
            None => {
                if let Some(s) = emit(sn, reduced, pos_before, kind) {
                    steps.push(s);
                }
                i += 1;
            }
            Some(r) => {
                let mut block_steps: Vec<AlignmentStep> = Vec::new();
                while i < path.len() && path[i].2 == Some(r) {
                    let (kind, pos_before, _) = path[i];
                    if let Some(s) = emit(sn, reduced, pos_before, kind) {
                        block_steps.push(s);
                    }
                    i += 1;
                }
                for _ in 0..regions[r].reps - 1 {
                    steps.extend(block_steps.iter().cloned());
                }
            }
        }
    }
    Alignment::from_steps(steps)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BruteForceError {
    #[error("no complete model run within the bound of {bound} visible steps")]
    NoRunWithinBound { bound: usize },
    #[error("more than {cap} visible runs; brute force refused")]
    TooManyRuns { cap: usize },
    #[error("safety violation while enumerating runs: {0}")]
    UnsafeNet(FiringError),
}

/// Silent closure of a set of markings.
fn closure(sn: &SystemNet, seeds: &BTreeSet<Marking>) -> Result<BTreeSet<Marking>, FiringError> {
    let mut out = seeds.clone();
    let mut work: Vec<Marking> = seeds.iter().cloned().collect();
    while let Some(m) = work.pop() {
        for (i, t) in sn.net().transitions().iter().enumerate() {
            if !t.is_silent() {
                continue;
            }
            let tid = TransitionId(i as u32);
            if sn.is_enabled(&m, tid) {
                let m2 = sn.fire(&m, tid)?;
                if out.insert(m2.clone()) {
                    work.push(m2);
                }
            }
        }
    }
    Ok(out)
}

/// Independent alignment oracle: enumerates the distinct visible runs of
/// the net up to `bound` visible steps (at most `cap` of them) and
/// edit-aligns each against the trace, returning the global minimum.
pub fn brute_force_align(
    trace: &Trace,
    sn: &SystemNet,
    bound: usize,
    cap: usize,
) -> Result<Alignment, BruteForceError> {
    let fail = BruteForceError::UnsafeNet;
    let mut initial = BTreeSet::new();
    initial.insert(sn.initial_marking());
    let start = closure(sn, &initial).map_err(fail)?;
    let alphabet = sn.net().alphabet();

    let accepting = |set: &BTreeSet<Marking>| set.contains(&sn.final_marking());

    // Depth-first enumeration over the determinized visible-step graph.
    let mut runs: Vec<Vec<ActivityLabel>> = Vec::new();
    let mut stack: Vec<(BTreeSet<Marking>, Vec<ActivityLabel>)> = alloc::vec![(start, Vec::new())];
    while let Some((set, prefix)) = stack.pop() {
        if accepting(&set) {
            if runs.len() >= cap {
                return Err(BruteForceError::TooManyRuns { cap });
            }
            runs.push(prefix.clone());
        }
        if prefix.len() == bound {
            continue;
        }
        for label in alphabet.iter().rev() {
            let mut fired = BTreeSet::new();
            for m in &set {
                for (i, t) in sn.net().transitions().iter().enumerate() {
                    let tid = TransitionId(i as u32);
                    if t.label.as_ref() == Some(label) && sn.is_enabled(m, tid) {
                        fired.insert(sn.fire(m, tid).map_err(fail)?);
                    }
                }
            }
            if fired.is_empty() {
                continue;
            }
            let next = closure(sn, &fired).map_err(fail)?;
            let mut run = prefix.clone();
            run.push(label.clone());
            stack.push((next, run));
        }
    }
    if runs.is_empty() {
        return Err(BruteForceError::NoRunWithinBound { bound });
    }

    let mut best: Option<Alignment> = None;
    for run in &runs {
        let candidate = edit_align(trace, run);
        if best.as_ref().is_none_or(|b| candidate.cost() < b.cost()) {
            best = Some(candidate);
        }
    }
    Ok(best.unwrap())
}

/// Classic edit alignment of a trace against one visible run: match on
/// equal labels costs zero, insertions and deletions cost one.
fn edit_align(trace: &Trace, run: &[ActivityLabel]) -> Alignment {
    let n = trace.len();
    let m = run.len();
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    let mut dp = alloc::vec![u64::MAX; (n + 1) * (m + 1)];
    dp[idx(n, m)] = 0;
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            if i == n && j == m {
                continue;
            }
            let mut v = u64::MAX;
            if i < n && j < m && trace.at(i + 1) == &run[j] {
                v = v.min(dp[idx(i + 1, j + 1)]);
            }
            if i < n {
                v = v.min(dp[idx(i + 1, j)].saturating_add(1));
            }
            if j < m {
                v = v.min(dp[idx(i, j + 1)].saturating_add(1));
            }
            dp[idx(i, j)] = v;
        }
    }
    let mut steps = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = dp[idx(i, j)];
        if i < n && j < m && trace.at(i + 1) == &run[j] && dp[idx(i + 1, j + 1)] == here {
            steps.push(AlignmentStep {
                op: StepOp::Match,
                label: run[j].clone(),
            });
            i += 1;
            j += 1;
        } else if i < n && dp[idx(i + 1, j)].saturating_add(1) == here {
            steps.push(AlignmentStep {
                op: StepOp::LogOnly,
                label: trace.at(i + 1).clone(),
            });
            i += 1;
        } else {
            steps.push(AlignmentStep {
                op: StepOp::ModelOnly,
                label: run[j].clone(),
            });
            j += 1;
        }
    }
    Alignment::from_steps(steps)
}

/// Properness check: the trace projection reproduces the trace and the
/// model projection (with silent moves restored) replays to the final
/// marking.
pub fn is_proper(a: &Alignment, trace: &Trace, sn: &SystemNet) -> bool {
    let projected: Vec<&ActivityLabel> = a
        .steps()
        .iter()
        .filter(|s| s.op != StepOp::ModelOnly)
        .map(|s| &s.label)
        .collect();
    if projected.len() != trace.len()
        || projected
            .iter()
            .zip(trace.iter())
            .any(|(a, b)| *a != b)
    {
        return false;
    }

    let mut seeds = BTreeSet::new();
    seeds.insert(sn.initial_marking());
    let Ok(mut current) = closure(sn, &seeds) else {
        return false;
    };
    for step in a.steps().iter().filter(|s| s.op != StepOp::LogOnly) {
        let mut fired = BTreeSet::new();
        for m in &current {
            for (i, t) in sn.net().transitions().iter().enumerate() {
                let tid = TransitionId(i as u32);
                if t.label.as_ref() == Some(&step.label) && sn.is_enabled(m, tid) {
                    match sn.fire(m, tid) {
                        Ok(m2) => {
                            fired.insert(m2);
                        }
                        Err(_) => return false,
                    }
                }
            }
        }
        if fired.is_empty() {
            return false;
        }
        current = match closure(sn, &fired) {
            Ok(c) => c,
            Err(_) => return false,
        };
    }
    current.contains(&sn.final_marking())
}

/// Renders an alignment like `MT(X),LH(A)`.
pub fn format_steps(a: &Alignment) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, s) in a.steps().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{}({})", s.op.code(), s.label);
    }
    out
}
