//! IO, file formats and pipeline orchestration around [`patgen_core`]:
//! XES/CSV event logs, PNML nets, explicit concurrency-oracle files, report
//! rendering and the command-line front end.

pub mod csv;
pub mod oracle;
pub mod pipeline;
pub mod pnml;
pub mod report;
pub mod xes;

pub use patgen_core as core;
