//! Tandem repeats: detection and the reduce/extend trace transformations.
//!
//! A tandem repeat `(s, α, k)` is a repeat type `α` occurring `k ≥ 2` times
//! contiguously from position `s`. The detector reports exactly the maximal,
//! primitive repeats with right-shifted duplicates omitted (the leftmost
//! occurrence wins). Reduction collapses every repeat to two copies so that
//! traces differing only in repetition count fold together; extension then
//! pumps each repeat up to the length of the reduced trace, which forces an
//! alignment to use a loop of the model if one exists.

use alloc::vec::Vec;

use crate::eventlog::{EventLog, Trace};

/// A maximal primitive tandem repeat with no right shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TandemRepeat {
    /// 1-based start position in the trace.
    pub start: usize,
    /// The repeat type α.
    pub repeat_type: Trace,
    /// Number of contiguous repetitions, at least 2.
    pub repetitions: usize,
}

impl TandemRepeat {
    fn span(&self) -> usize {
        self.repeat_type.len() * self.repetitions
    }
}

/// True when `(s, α, k)` is an occurrence in `t`.
fn occurs(t: &Trace, s: usize, alpha: &Trace, k: usize) -> bool {
    let len = alpha.len();
    if len == 0 || s == 0 || s + k * len - 1 > t.len() {
        return false;
    }
    for m in 0..k {
        for j in 1..=len {
            if t.at(s + m * len + j - 1) != alpha.at(j) {
                return false;
            }
        }
    }
    true
}

/// α is itself a tandem repeat when it is a power of a shorter word.
fn is_power(alpha: &Trace) -> bool {
    let len = alpha.len();
    for p in 1..len {
        if !len.is_multiple_of(p) {
            continue;
        }
        if (p + 1..=len).all(|i| alpha.at(i) == alpha.at(i - p)) {
            return true;
        }
    }
    false
}

/// α rotated right by `x`, so that shifting the result right by `x` gives α.
fn rotate_right(alpha: &Trace, x: usize) -> Trace {
    let len = alpha.len();
    let mut out = alpha.slice(len - x + 1, len);
    out.extend_from(&alpha.slice(1, len - x));
    out
}

/// The tandem-repeat oracle Δ.
///
/// Returns the maximal, primitive, right-shift-free repeats of `t`, ordered
/// by start position, then decreasing `|α|·k`, then lexicographic α.
pub fn detect_tandem_repeats(t: &Trace) -> Vec<TandemRepeat> {
    let n = t.len();
    let mut found = Vec::new();
    for s in 1..=n {
        for len in 1..=(n.saturating_sub(s - 1)) / 2 {
            let alpha = t.slice(s, s + len - 1);
            if !occurs(t, s, &alpha, 2) {
                continue;
            }
            let mut k = 2;
            while occurs(t, s, &alpha, k + 1) {
                k += 1;
            }
            // Maximality on the left: one more copy directly before s.
            if s > len && occurs(t, s - len, &alpha, 1) {
                continue;
            }
            if is_power(&alpha) {
                continue;
            }
            // Omit right shifts: a rotated copy occurring up to |α|-1
            // positions earlier makes this the non-leftmost variant.
            let shifted = (1..len).any(|x| s > x && occurs(t, s - x, &rotate_right(&alpha, x), k));
            if shifted {
                continue;
            }
            found.push(TandemRepeat {
                start: s,
                repeat_type: alpha,
                repetitions: k,
            });
        }
    }
    found.sort_by(|a, b| {
        a.start
            .cmp(&b.start)
            .then(b.span().cmp(&a.span()))
            .then(a.repeat_type.cmp(&b.repeat_type))
    });
    found
}

/// The repeats a left-to-right scan commits to: at each position with a
/// repeat, the longest one (ties by lexicographic α) is chosen and the scan
/// jumps past all its repetitions.
pub fn chosen_repeats(t: &Trace) -> Vec<TandemRepeat> {
    let repeats = detect_tandem_repeats(t);
    let mut chosen = Vec::new();
    let mut pos = 1;
    while pos <= t.len() {
        match repeats.iter().find(|r| r.start == pos) {
            None => pos += 1,
            Some(r) => {
                pos += r.span();
                chosen.push(r.clone());
            }
        }
    }
    chosen
}

/// Collapses every chosen tandem repeat of `t` to exactly two copies.
pub fn reduce_trace(t: &Trace) -> Trace {
    let repeats = detect_tandem_repeats(t);
    let mut rt = Trace::default();
    let mut pos = 1;
    while pos <= t.len() {
        match repeats.iter().find(|r| r.start == pos) {
            None => {
                rt.push(t.at(pos).clone());
                pos += 1;
            }
            Some(r) => {
                rt.extend_from(&t.slice(r.start, r.start + 2 * r.repeat_type.len() - 1));
                pos += r.span();
            }
        }
    }
    rt
}

/// Builds the reduced log: traces with at least one tandem repeat, reduced,
/// with counts of traces folding to the same reduced trace added up.
pub fn reduce_log(log: &EventLog) -> EventLog {
    let mut reduced = EventLog::new();
    for (t, &c) in log.iter() {
        if detect_tandem_repeats(t).is_empty() {
            continue;
        }
        reduced.add(reduce_trace(t), c);
    }
    reduced
}

/// Pumps every chosen tandem repeat of the reduced trace `rt` up to `|rt|`
/// repetitions.
pub fn extend_trace(rt: &Trace) -> Trace {
    let repeats = detect_tandem_repeats(rt);
    let total = rt.len();
    let mut et = Trace::default();
    let mut pos = 1;
    while pos <= rt.len() {
        match repeats.iter().find(|r| r.start == pos) {
            None => {
                et.push(rt.at(pos).clone());
                pos += 1;
            }
            Some(r) => {
                let alpha = &r.repeat_type;
                for _ in 0..total {
                    et.extend_from(alpha);
                }
                pos += 2 * alpha.len();
            }
        }
    }
    et
}

/// Extends every trace of a reduced log, carrying counts over.
pub fn extend_log(reduced: &EventLog) -> EventLog {
    let mut extended = EventLog::new();
    for (rt, &c) in reduced.iter() {
        extended.add(extend_trace(rt), c);
    }
    extended
}
