//! Event logs: multisets of label traces.

use alloc::borrow::ToOwned;
use alloc::collections::btree_map;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A non-empty activity name.
///
/// The empty label is reserved for the sentinel events of partial orders and
/// never appears in traces.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivityLabel(String);

impl ActivityLabel {
    pub fn new(text: impl Into<String>) -> Result<Self, EmptyLabel> {
        let text = text.into();
        if text.is_empty() {
            Err(EmptyLabel)
        } else {
            Ok(ActivityLabel(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("activity label must not be empty")]
pub struct EmptyLabel;

/// A finite sequence of activity labels.
///
/// Positions are 1-based throughout the crate; `Ord` is lexicographic over
/// the label sequence, which fixes the deterministic iteration order of logs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Trace {
    labels: Vec<ActivityLabel>,
}

impl Trace {
    pub fn new(labels: Vec<ActivityLabel>) -> Self {
        Trace { labels }
    }

    /// Builds a trace from plain strings; errors on an empty label.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, EmptyLabel> {
        let labels = names
            .iter()
            .map(|n| ActivityLabel::new(n.as_ref().to_owned()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trace { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `t[i]` with 1-based `i`.
    pub fn at(&self, i: usize) -> &ActivityLabel {
        &self.labels[i - 1]
    }

    /// Inclusive subtrace `t[i, j]`, 1-based; empty when `j < i`.
    pub fn slice(&self, i: usize, j: usize) -> Trace {
        if j < i {
            return Trace::default();
        }
        Trace {
            labels: self.labels[i - 1..j].to_vec(),
        }
    }

    pub fn push(&mut self, label: ActivityLabel) {
        self.labels.push(label);
    }

    pub fn extend_from(&mut self, other: &Trace) {
        self.labels.extend_from_slice(&other.labels);
    }

    pub fn labels(&self) -> &[ActivityLabel] {
        &self.labels
    }

    pub fn iter(&self) -> core::slice::Iter<'_, ActivityLabel> {
        self.labels.iter()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\u{27e8}")?;
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "\u{27e9}")
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A multiset of traces with positive counts.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    entries: BTreeMap<Trace, u64>,
}

impl EventLog {
    pub fn new() -> Self {
        EventLog::default()
    }

    /// Multiset union `L ⊎ (t, count)`: counts of equal traces add up.
    ///
    /// Adding a zero count is a no-op, so stored counts stay positive.
    pub fn add(&mut self, trace: Trace, count: u64) {
        if count == 0 {
            return;
        }
        *self.entries.entry(trace).or_insert(0) += count;
    }

    /// Number of occurrences of `trace`; 0 when absent.
    pub fn count(&self, trace: &Trace) -> u64 {
        self.entries.get(trace).copied().unwrap_or(0)
    }

    /// The distinct traces, in lexicographic order.
    pub fn unique(&self) -> impl Iterator<Item = &Trace> {
        self.entries.keys()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, Trace, u64> {
        self.entries.iter()
    }

    /// Number of distinct traces.
    pub fn distinct_len(&self) -> usize {
        self.entries.len()
    }

    /// Total trace count, i.e. the multiset cardinality (saturating).
    pub fn total(&self) -> u64 {
        self.entries
            .values()
            .fold(0u64, |acc, &c| acc.saturating_add(c))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The set of labels occurring in the log, in lexicographic order.
    pub fn alphabet(&self) -> Vec<ActivityLabel> {
        let mut set: Vec<ActivityLabel> = Vec::new();
        for trace in self.entries.keys() {
            for l in trace.iter() {
                if let Err(pos) = set.binary_search(l) {
                    set.insert(pos, l.clone());
                }
            }
        }
        set
    }
}

impl fmt::Debug for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl FromIterator<(Trace, u64)> for EventLog {
    fn from_iter<I: IntoIterator<Item = (Trace, u64)>>(iter: I) -> Self {
        let mut log = EventLog::new();
        for (t, c) in iter {
            log.add(t, c);
        }
        log
    }
}
