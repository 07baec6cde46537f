//! Concurrency-oracle selection: the alpha and alpha+ global oracles with
//! the directly-follows frequency filter, and the explicit trace-local
//! oracle file that stands in for external local-concurrency tooling.
//!
//! Explicit oracle files are JSON:
//!
//! ```json
//! {
//!   "global": [["B", "C"]],
//!   "traces": [
//!     {"trace": ["X", "A", "B", "C"], "pairs": [[3, 4]]}
//!   ]
//! }
//! ```
//!
//! Positions are 1-based. Traces listed in the file but absent from the log
//! produce warnings and are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use patgen_core::concurrency::{
    alpha_oracle, alpha_plus_oracle, directly_follows, filter_df, ConcurrencyRelation,
    InvalidNoiseLevel,
};
use patgen_core::eventlog::{ActivityLabel, EventLog, Trace};
use patgen_core::Fraction;
use serde::Deserialize;

/// Which concurrency oracle to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    Alpha,
    AlphaPlus,
    Explicit(PathBuf),
}

impl std::fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleSpec::Alpha => f.write_str("alpha"),
            OracleSpec::AlphaPlus => f.write_str("alpha-plus"),
            OracleSpec::Explicit(path) => write!(f, "explicit:{}", path.display()),
        }
    }
}

impl FromStr for OracleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(OracleSpec::Alpha),
            "alpha-plus" => Ok(OracleSpec::AlphaPlus),
            other => match other.strip_prefix("explicit:") {
                Some(path) if !path.is_empty() => Ok(OracleSpec::Explicit(PathBuf::from(path))),
                _ => Err(format!(
                    "unknown oracle {other:?}; expected alpha, alpha-plus or explicit:<path>"
                )),
            },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("reading oracle file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("oracle file {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("oracle file: trace {trace}: position pair ({a}, {b}) is out of range (length {len})")]
    PositionOutOfRange {
        trace: String,
        a: usize,
        b: usize,
        len: usize,
    },
    #[error("oracle file: trace {trace}: a position cannot be concurrent with itself ({pos})")]
    SelfPair { trace: String, pos: usize },
    #[error("oracle file: empty activity label in {context}")]
    EmptyLabel { context: String },
    #[error(transparent)]
    Noise(#[from] InvalidNoiseLevel),
}

#[derive(Debug, Deserialize)]
struct OracleFile {
    #[serde(default)]
    global: Vec<[String; 2]>,
    #[serde(default)]
    traces: Vec<TraceEntry>,
}

#[derive(Debug, Deserialize)]
struct TraceEntry {
    trace: Vec<String>,
    #[serde(default)]
    pairs: Vec<[usize; 2]>,
}

/// The outcome of oracle construction.
#[derive(Debug)]
pub struct OracleSelection {
    pub relation: ConcurrencyRelation,
    pub warnings: Vec<String>,
}

/// Parses an explicit oracle document against the log it will be used with.
pub fn parse_explicit_oracle(
    text: &str,
    log: &EventLog,
    path: &Path,
) -> Result<OracleSelection, OracleError> {
    let file: OracleFile = serde_json::from_str(text).map_err(|source| OracleError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let mut warnings = Vec::new();
    let mut global = Vec::new();
    for [a, b] in &file.global {
        let a = ActivityLabel::new(a.clone()).map_err(|_| OracleError::EmptyLabel {
            context: "global pair".into(),
        })?;
        let b = ActivityLabel::new(b.clone()).map_err(|_| OracleError::EmptyLabel {
            context: "global pair".into(),
        })?;
        global.push((a, b));
    }
    let mut per_trace: BTreeMap<Trace, BTreeSet<(usize, usize)>> = BTreeMap::new();
    for entry in &file.traces {
        let trace = Trace::from_names(&entry.trace).map_err(|_| OracleError::EmptyLabel {
            context: "trace entry".into(),
        })?;
        let rendered = format!("{trace}");
        for &[a, b] in &entry.pairs {
            if a == b {
                return Err(OracleError::SelfPair {
                    trace: rendered,
                    pos: a,
                });
            }
            if a < 1 || b < 1 || a > trace.len() || b > trace.len() {
                return Err(OracleError::PositionOutOfRange {
                    trace: rendered,
                    a,
                    b,
                    len: trace.len(),
                });
            }
        }
        if log.count(&trace) == 0 {
            warnings.push(format!(
                "oracle file lists {rendered}, which does not occur in the log; ignored"
            ));
            continue;
        }
        per_trace
            .entry(trace)
            .or_default()
            .extend(entry.pairs.iter().map(|&[a, b]| (a.min(b), a.max(b))));
    }
    Ok(OracleSelection {
        relation: ConcurrencyRelation::explicit(global, per_trace),
        warnings,
    })
}

/// Builds the selected oracle relation for `log`, applying the
/// directly-follows filter at `noise` for the global oracles.
pub fn build_oracle(
    spec: &OracleSpec,
    log: &EventLog,
    noise: &Fraction,
) -> Result<OracleSelection, OracleError> {
    match spec {
        OracleSpec::Alpha | OracleSpec::AlphaPlus => {
            let stats = filter_df(&directly_follows(log), noise)?;
            let relation = match spec {
                OracleSpec::Alpha => alpha_oracle(&stats),
                _ => alpha_plus_oracle(log, &stats),
            };
            Ok(OracleSelection {
                relation,
                warnings: Vec::new(),
            })
        }
        OracleSpec::Explicit(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| OracleError::Io {
                path: path.clone(),
                source,
            })?;
            parse_explicit_oracle(&text, log, path)
        }
    }
}

/// Parses a noise level given as a decimal (`0.05`) or a fraction (`1/20`).
pub fn parse_fraction(s: &str) -> Result<Fraction, String> {
    let s = s.trim();
    let invalid = || format!("invalid number {s:?}");
    if let Some((num, den)) = s.split_once('/') {
        let n: i64 = num.trim().parse().map_err(|_| invalid())?;
        let d: i64 = den.trim().parse().map_err(|_| invalid())?;
        if d == 0 {
            return Err(invalid());
        }
        return Ok(Fraction::new(n.into(), d.into()));
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(invalid());
    }
    let int: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| invalid())?
    };
    let mut value = Fraction::from_integer(int.into());
    if !frac_part.is_empty() {
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        let digits: i64 = frac_part.parse().map_err(|_| invalid())?;
        let scale = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(invalid)?;
        value += Fraction::new(digits.into(), scale.into());
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn t(names: &[&str]) -> Trace {
        Trace::from_names(names).unwrap()
    }

    fn tiny_log() -> EventLog {
        let mut log = EventLog::new();
        log.add(t(&["X", "A", "B", "C"]), 2);
        log.add(t(&["A", "B", "C"]), 1);
        log
    }

    #[test]
    fn explicit_oracle_marks_positions() {
        let doc = r#"{"traces": [{"trace": ["X","A","B","C"], "pairs": [[3,4]]}]}"#;
        let sel = parse_explicit_oracle(doc, &tiny_log(), Path::new("o.json")).unwrap();
        let trace = t(&["X", "A", "B", "C"]);
        assert!(sel.relation.positions_concurrent(&trace, 3, 4));
        assert!(sel.relation.positions_concurrent(&trace, 4, 3));
        assert!(!sel.relation.positions_concurrent(&trace, 2, 3));
        assert!(sel.warnings.is_empty());
    }

    #[test]
    fn unknown_trace_warns_and_is_ignored() {
        let doc = r#"{"traces": [{"trace": ["Z"], "pairs": []}]}"#;
        let sel = parse_explicit_oracle(doc, &tiny_log(), Path::new("o.json")).unwrap();
        assert_eq!(sel.warnings.len(), 1);
        assert!(sel.relation.is_empty());
    }

    #[test]
    fn invalid_positions_are_rejected() {
        let doc = r#"{"traces": [{"trace": ["A","B","C"], "pairs": [[1,9]]}]}"#;
        assert!(matches!(
            parse_explicit_oracle(doc, &tiny_log(), Path::new("o.json")).unwrap_err(),
            OracleError::PositionOutOfRange { .. }
        ));
        let doc = r#"{"traces": [{"trace": ["A","B","C"], "pairs": [[2,2]]}]}"#;
        assert!(matches!(
            parse_explicit_oracle(doc, &tiny_log(), Path::new("o.json")).unwrap_err(),
            OracleError::SelfPair { .. }
        ));
    }

    #[test]
    fn empty_oracle_file_keeps_total_order() {
        let sel = parse_explicit_oracle("{}", &tiny_log(), Path::new("o.json")).unwrap();
        assert!(sel.relation.is_empty());
    }

    #[test]
    fn global_oracles_build() {
        let log = tiny_log();
        let sel = build_oracle(&OracleSpec::AlphaPlus, &log, &Fraction::zero()).unwrap();
        assert!(sel.warnings.is_empty());
        assert!(sel.relation.global_pairs().is_empty());
    }

    #[test]
    fn fraction_parsing() {
        assert_eq!(parse_fraction("0").unwrap(), Fraction::zero());
        assert_eq!(
            parse_fraction("0.05").unwrap(),
            Fraction::new(1.into(), 20.into())
        );
        assert_eq!(
            parse_fraction("1/20").unwrap(),
            Fraction::new(1.into(), 20.into())
        );
        assert_eq!(parse_fraction("1").unwrap(), Fraction::from_integer(1.into()));
        assert!(parse_fraction("x").is_err());
        assert!(parse_fraction("1/0").is_err());
    }

    #[test]
    fn oracle_spec_round_trips() {
        assert_eq!("alpha".parse::<OracleSpec>().unwrap(), OracleSpec::Alpha);
        assert_eq!(
            "alpha-plus".parse::<OracleSpec>().unwrap(),
            OracleSpec::AlphaPlus
        );
        assert!(matches!(
            "explicit:oracle.json".parse::<OracleSpec>().unwrap(),
            OracleSpec::Explicit(_)
        ));
        assert!("bogus".parse::<OracleSpec>().is_err());
    }
}
