//! Pattern-based generalization for process models.
//!
//! Given an event log (a multiset of traces) and a safe, uniquely-labelled,
//! free-choice workflow system net, this crate measures how well the net
//! generalizes the behavioral patterns observed in the log:
//!
//! * repetitive patterns, found as tandem repeats and tested against loop
//!   structures of the net ([`tandem`], [`patterns`]);
//! * concurrent patterns, found via concurrency oracles and partial orders
//!   and tested against parallel structures of the net ([`concurrency`],
//!   [`patterns`]).
//!
//! Patterns are related to the net through minimal-cost trace alignments
//! ([`align`]) and their weighted partial fulfilments aggregate into the
//! generalization scores of [`measure`].
//!
//! The crate is `no_std` (with `alloc`) and fully deterministic: all maps and
//! sets are ordered, all arithmetic on fulfilments is exact rational.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod align;
pub mod concurrency;
pub mod eventlog;
pub mod measure;
pub mod patterns;
pub mod petri;
pub mod tandem;

#[cfg(test)]
pub(crate) mod testutil;

pub use align::{Alignment, AlignmentStep, StepOp};
pub use eventlog::{ActivityLabel, EventLog, Trace};
pub use measure::{GeneralizationReport, Matching, MeasureConfig};
pub use petri::{Marking, PetriNet, SystemNet};

/// Exact fraction type used for partial fulfilments and generalization values.
pub type Fraction = num_rational::BigRational;
