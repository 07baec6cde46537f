//! Safe, uniquely-labelled, free-choice workflow system nets.
//!
//! The model is deliberately small: indexed places and transitions, a flow
//! relation kept as sorted pre/post sets, and set-valued markings (the nets
//! in scope are safe, so a marking never holds two tokens on one place).
//! Structural properties are checked by [`validate`]; safety is enforced
//! operationally by [`SystemNet::fire`].

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::eventlog::ActivityLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub u32);

impl PlaceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TransitionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub struct Place {
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub name: String,
    /// `None` marks a silent (τ) transition.
    pub label: Option<ActivityLabel>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

/// A labelled Petri net with the flow relation stored as pre/post sets.
#[derive(Debug, Clone, Default)]
pub struct PetriNet {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    pre: Vec<Vec<PlaceId>>,
    post: Vec<Vec<PlaceId>>,
    place_consumers: Vec<Vec<TransitionId>>,
    place_producers: Vec<Vec<TransitionId>>,
}

impl PetriNet {
    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.index()]
    }

    pub fn place(&self, p: PlaceId) -> &Place {
        &self.places[p.index()]
    }

    /// Preset `•t`.
    pub fn preset(&self, t: TransitionId) -> &[PlaceId] {
        &self.pre[t.index()]
    }

    /// Postset `t•`.
    pub fn postset(&self, t: TransitionId) -> &[PlaceId] {
        &self.post[t.index()]
    }

    /// Transitions consuming from `p` (the postset of the place).
    pub fn consumers(&self, p: PlaceId) -> &[TransitionId] {
        &self.place_consumers[p.index()]
    }

    /// Transitions producing into `p` (the preset of the place).
    pub fn producers(&self, p: PlaceId) -> &[TransitionId] {
        &self.place_producers[p.index()]
    }

    /// The visible transition carrying `label`, if any.
    ///
    /// Uniquely-labelled nets have at most one; with duplicate labels the
    /// lowest transition index wins (validation reports the duplication).
    pub fn transition_with_label(&self, label: &ActivityLabel) -> Option<TransitionId> {
        self.transitions
            .iter()
            .position(|t| t.label.as_ref() == Some(label))
            .map(|i| TransitionId(i as u32))
    }

    /// The visible alphabet of the net, sorted.
    pub fn alphabet(&self) -> Vec<ActivityLabel> {
        let set: BTreeSet<ActivityLabel> = self
            .transitions
            .iter()
            .filter_map(|t| t.label.clone())
            .collect();
        set.into_iter().collect()
    }
}

/// Incremental construction of a [`PetriNet`].
#[derive(Debug, Default)]
pub struct NetBuilder {
    net: PetriNet,
}

impl NetBuilder {
    pub fn new() -> Self {
        NetBuilder::default()
    }

    pub fn add_place(&mut self, name: impl Into<String>) -> PlaceId {
        let id = PlaceId(self.net.places.len() as u32);
        self.net.places.push(Place { name: name.into() });
        self.net.place_consumers.push(Vec::new());
        self.net.place_producers.push(Vec::new());
        id
    }

    pub fn add_transition(
        &mut self,
        name: impl Into<String>,
        label: Option<ActivityLabel>,
    ) -> TransitionId {
        let id = TransitionId(self.net.transitions.len() as u32);
        self.net.transitions.push(Transition {
            name: name.into(),
            label,
        });
        self.net.pre.push(Vec::new());
        self.net.post.push(Vec::new());
        id
    }

    pub fn add_silent(&mut self, name: impl Into<String>) -> TransitionId {
        self.add_transition(name, None)
    }

    pub fn arc_place_to_transition(&mut self, p: PlaceId, t: TransitionId) {
        if !self.net.pre[t.index()].contains(&p) {
            self.net.pre[t.index()].push(p);
            self.net.place_consumers[p.index()].push(t);
        }
    }

    pub fn arc_transition_to_place(&mut self, t: TransitionId, p: PlaceId) {
        if !self.net.post[t.index()].contains(&p) {
            self.net.post[t.index()].push(p);
            self.net.place_producers[p.index()].push(t);
        }
    }

    pub fn build(mut self) -> PetriNet {
        for v in self
            .net
            .pre
            .iter_mut()
            .chain(self.net.post.iter_mut())
        {
            v.sort_unstable();
        }
        for v in self
            .net
            .place_consumers
            .iter_mut()
            .chain(self.net.place_producers.iter_mut())
        {
            v.sort_unstable();
        }
        self.net
    }
}

/// A set-valued marking over a safe net, kept sorted.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Marking(Vec<PlaceId>);

impl Marking {
    pub fn new(mut places: Vec<PlaceId>) -> Self {
        places.sort_unstable();
        places.dedup();
        Marking(places)
    }

    pub fn singleton(p: PlaceId) -> Self {
        Marking(alloc::vec![p])
    }

    pub fn contains(&self, p: PlaceId) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn places(&self) -> &[PlaceId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter().map(|p| p.0)).finish()
    }
}

/// A workflow net with its source/sink places; initial marking `{source}`,
/// single final marking `{sink}`.
#[derive(Debug, Clone)]
pub struct SystemNet {
    net: PetriNet,
    source: PlaceId,
    sink: PlaceId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FiringError {
    #[error("transition {transition} is not enabled at marking {marking}")]
    Disabled { transition: String, marking: String },
    #[error("firing {transition} puts a second token on place {place}; the net is not safe")]
    Unsafe { transition: String, place: String },
}

impl SystemNet {
    pub fn new(net: PetriNet, source: PlaceId, sink: PlaceId) -> Self {
        SystemNet { net, source, sink }
    }

    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    pub fn source(&self) -> PlaceId {
        self.source
    }

    pub fn sink(&self) -> PlaceId {
        self.sink
    }

    pub fn initial_marking(&self) -> Marking {
        Marking::singleton(self.source)
    }

    pub fn final_marking(&self) -> Marking {
        Marking::singleton(self.sink)
    }

    /// All transitions enabled at `m`, in transition-index order.
    pub fn enabled(&self, m: &Marking) -> Vec<TransitionId> {
        (0..self.net.transitions.len())
            .map(|i| TransitionId(i as u32))
            .filter(|&t| self.is_enabled(m, t))
            .collect()
    }

    pub fn is_enabled(&self, m: &Marking, t: TransitionId) -> bool {
        self.net.preset(t).iter().all(|&p| m.contains(p))
    }

    /// Fires `t` at `m`: `m' = m \\ •t ⊎ t•`.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking, FiringError> {
        if !self.is_enabled(m, t) {
            return Err(FiringError::Disabled {
                transition: self.net.transition(t).name.clone(),
                marking: alloc::format!("{m:?}"),
            });
        }
        let mut places: Vec<PlaceId> = m
            .places()
            .iter()
            .copied()
            .filter(|p| !self.net.preset(t).contains(p))
            .collect();
        for &p in self.net.postset(t) {
            if places.contains(&p) {
                return Err(FiringError::Unsafe {
                    transition: self.net.transition(t).name.clone(),
                    place: self.net.place(p).name.clone(),
                });
            }
            places.push(p);
        }
        Ok(Marking::new(places))
    }
}

/// A structural finding of [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The source place has an incoming arc.
    SourceHasPreset { place: String },
    /// The sink place has an outgoing arc.
    SinkHasPostset { place: String },
    /// A node lies on no path from source to sink, so the short-circuited
    /// net is not strongly connected.
    NotOnSourceSinkPath { node: String },
    /// Two transitions share an input place but have different presets.
    NotFreeChoice { first: String, second: String },
    /// Two visible transitions carry the same label.
    DuplicateLabel {
        label: String,
        first: String,
        second: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SourceHasPreset { place } => {
                write!(f, "source place {place} has an incoming arc")
            }
            Violation::SinkHasPostset { place } => {
                write!(f, "sink place {place} has an outgoing arc")
            }
            Violation::NotOnSourceSinkPath { node } => {
                write!(f, "node {node} is not on a path from source to sink")
            }
            Violation::NotFreeChoice { first, second } => write!(
                f,
                "transitions {first} and {second} share an input place but differ in presets"
            ),
            Violation::DuplicateLabel {
                label,
                first,
                second,
            } => write!(
                f,
                "transitions {first} and {second} both carry label {label}"
            ),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the workflow, free-choice and unique-labelling properties.
///
/// Safety is not verified here; it is enforced while firing.
pub fn validate(sn: &SystemNet) -> ValidationReport {
    let net = sn.net();
    let mut violations = Vec::new();

    if !net.producers(sn.source()).is_empty() {
        violations.push(Violation::SourceHasPreset {
            place: net.place(sn.source()).name.clone(),
        });
    }
    if !net.consumers(sn.sink()).is_empty() {
        violations.push(Violation::SinkHasPostset {
            place: net.place(sn.sink()).name.clone(),
        });
    }

    // Strong connectivity after adding t* from sink to source is equivalent
    // to every node being forward-reachable from the source and backward-
    // reachable from the sink.
    let np = net.places().len();
    let nt = net.transitions().len();
    let node = |is_place: bool, i: usize| if is_place { i } else { np + i };
    let mut fwd = alloc::vec![false; np + nt];
    let mut stack = alloc::vec![node(true, sn.source().index())];
    while let Some(n) = stack.pop() {
        if core::mem::replace(&mut fwd[n], true) {
            continue;
        }
        if n < np {
            for &t in net.consumers(PlaceId(n as u32)) {
                stack.push(node(false, t.index()));
            }
        } else {
            for &p in net.postset(TransitionId((n - np) as u32)) {
                stack.push(node(true, p.index()));
            }
        }
    }
    let mut bwd = alloc::vec![false; np + nt];
    stack = alloc::vec![node(true, sn.sink().index())];
    while let Some(n) = stack.pop() {
        if core::mem::replace(&mut bwd[n], true) {
            continue;
        }
        if n < np {
            for &t in net.producers(PlaceId(n as u32)) {
                stack.push(node(false, t.index()));
            }
        } else {
            for &p in net.preset(TransitionId((n - np) as u32)) {
                stack.push(node(true, p.index()));
            }
        }
    }
    for i in 0..np {
        if !(fwd[node(true, i)] && bwd[node(true, i)]) {
            violations.push(Violation::NotOnSourceSinkPath {
                node: net.place(PlaceId(i as u32)).name.clone(),
            });
        }
    }
    for i in 0..nt {
        if !(fwd[node(false, i)] && bwd[node(false, i)]) {
            violations.push(Violation::NotOnSourceSinkPath {
                node: net.transition(TransitionId(i as u32)).name.clone(),
            });
        }
    }

    for p in 0..np {
        let consumers = net.consumers(PlaceId(p as u32));
        for pair in consumers.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if net.preset(a) != net.preset(b) {
                violations.push(Violation::NotFreeChoice {
                    first: net.transition(a).name.clone(),
                    second: net.transition(b).name.clone(),
                });
            }
        }
    }

    let mut seen: alloc::collections::BTreeMap<&ActivityLabel, TransitionId> =
        alloc::collections::BTreeMap::new();
    for (i, t) in net.transitions().iter().enumerate() {
        if let Some(label) = &t.label {
            if let Some(&first) = seen.get(label) {
                violations.push(Violation::DuplicateLabel {
                    label: label.to_string(),
                    first: net.transition(first).name.clone(),
                    second: t.name.clone(),
                });
            } else {
                seen.insert(label, TransitionId(i as u32));
            }
        }
    }

    ValidationReport { violations }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn running_example_validates_clean() {
        let sn = running_example_net();
        let report = validate(&sn);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn enabled_is_sorted_and_empty_cases_hold() {
        let sn = running_example_net();
        let init = sn.initial_marking();
        let enabled = sn.enabled(&init);
        assert_eq!(enabled.len(), 1, "only the opening silent transition");
        assert!(sn.enabled(&Marking::default()).is_empty());
        assert!(sn.enabled(&sn.final_marking()).is_empty());
    }

    #[test]
    fn fire_moves_tokens_and_rejects_disabled() {
        let sn = running_example_net();
        let init = sn.initial_marking();
        let t0 = sn.enabled(&init)[0];
        let m1 = sn.fire(&init, t0).unwrap();
        assert_eq!(m1.len(), 1);
        assert!(!m1.contains(sn.source()));
        let err = sn.fire(&init, TransitionId(4)).unwrap_err();
        assert!(matches!(err, FiringError::Disabled { .. }));
    }

    #[test]
    fn fire_preserves_token_arithmetic() {
        let sn = running_example_net();
        let mut m = sn.initial_marking();
        // start, skip X, to A-loop, split reaches the two parallel places.
        for _ in 0..3 {
            let t = sn.enabled(&m)[sn.enabled(&m).len() - 1];
            let pre = sn.net().preset(t).len();
            let post = sn.net().postset(t).len();
            let before = m.len();
            m = sn.fire(&m, t).unwrap();
            assert_eq!(m.len(), before - pre + post);
        }
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn unsafe_firing_is_reported() {
        let mut b = NetBuilder::new();
        let p0 = b.add_place("p0");
        let p1 = b.add_place("p1");
        let p2 = b.add_place("p2");
        let t0 = b.add_transition("a", Some(ActivityLabel::new("a").unwrap()));
        let t1 = b.add_transition("b", Some(ActivityLabel::new("b").unwrap()));
        // t0: p0 -> p1, p2 ; t1: p1 -> p1 (stays), and also p0 -> p1 creates
        // the conflict when p1 is already marked.
        b.arc_place_to_transition(p0, t0);
        b.arc_transition_to_place(t0, p1);
        b.arc_transition_to_place(t0, p2);
        b.arc_place_to_transition(p2, t1);
        b.arc_transition_to_place(t1, p1);
        let net = b.build();
        let sn = SystemNet::new(net, p0, p1);
        let m1 = sn.fire(&sn.initial_marking(), t0).unwrap();
        let err = sn.fire(&m1, t1).unwrap_err();
        assert!(matches!(err, FiringError::Unsafe { .. }));
    }

    #[test]
    fn free_choice_violation_detected() {
        let mut b = NetBuilder::new();
        let p0 = b.add_place("p0");
        let p1 = b.add_place("p1");
        let p2 = b.add_place("p2");
        let ta = b.add_transition("a", Some(ActivityLabel::new("a").unwrap()));
        let tb = b.add_transition("b", Some(ActivityLabel::new("b").unwrap()));
        // a and b share p0, but b additionally needs p1.
        b.arc_place_to_transition(p0, ta);
        b.arc_place_to_transition(p0, tb);
        b.arc_place_to_transition(p1, tb);
        b.arc_transition_to_place(ta, p2);
        b.arc_transition_to_place(tb, p2);
        let net = b.build();
        let sn = SystemNet::new(net, p0, p2);
        let report = validate(&sn);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotFreeChoice { .. })));
    }

    #[test]
    fn sink_with_outgoing_arc_is_a_workflow_violation() {
        let mut b = NetBuilder::new();
        let p0 = b.add_place("p0");
        let p1 = b.add_place("p1");
        let t = b.add_transition("a", Some(ActivityLabel::new("a").unwrap()));
        b.arc_place_to_transition(p0, t);
        b.arc_transition_to_place(t, p1);
        let t2 = b.add_silent("back");
        b.arc_place_to_transition(p1, t2);
        b.arc_transition_to_place(t2, p0);
        let net = b.build();
        let sn = SystemNet::new(net, p0, p1);
        let report = validate(&sn);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SinkHasPostset { .. })));
    }

    #[test]
    fn duplicate_labels_detected() {
        let mut b = NetBuilder::new();
        let p0 = b.add_place("p0");
        let p1 = b.add_place("p1");
        let p2 = b.add_place("p2");
        let a1 = b.add_transition("t1", Some(ActivityLabel::new("A").unwrap()));
        let a2 = b.add_transition("t2", Some(ActivityLabel::new("A").unwrap()));
        b.arc_place_to_transition(p0, a1);
        b.arc_transition_to_place(a1, p1);
        b.arc_place_to_transition(p1, a2);
        b.arc_transition_to_place(a2, p2);
        let sn = SystemNet::new(b.build(), p0, p2);
        let report = validate(&sn);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DuplicateLabel { .. })));
    }
}
