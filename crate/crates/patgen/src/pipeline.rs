//! End-to-end runs: load inputs, build the oracle, enforce the wall-clock
//! timeout, optionally fan alignments out over a worker pool, and render
//! the report.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use patgen_core::align::{AlignError, AlignLimits, Alignment};
use patgen_core::concurrency::ConcurrencyRelation;
use patgen_core::eventlog::{EventLog, Trace};
use patgen_core::measure::{
    generalization, AlignProvider, DirectAligner, GeneralizationReport, Interrupted, Matching,
    MeasureConfig, MeasureError, Phase, ProgressHooks,
};
use patgen_core::petri::{validate, SystemNet};
use patgen_core::{tandem, Fraction};
use rayon::prelude::*;

use crate::csv::{parse_csv, CsvError};
use crate::oracle::{build_oracle, OracleError, OracleSpec};
use crate::pnml::{parse_pnml, PnmlError};
use crate::report;
use crate::xes::{parse_xes, XesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub log_path: PathBuf,
    pub model_path: PathBuf,
    pub oracle: OracleSpec,
    pub noise: Fraction,
    /// The noise level as given, echoed into the report.
    pub noise_text: String,
    pub matching: Matching,
    pub linearization_cap: u64,
    pub timeout_secs: u64,
    pub output: OutputFormat,
    pub breakdown: bool,
    /// Worker threads for alignment; 1 runs fully sequentially.
    pub threads: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing event log: {0}")]
    Xes(#[from] XesError),
    #[error("parsing event log: {0}")]
    Csv(#[from] CsvError),
    #[error("parsing process model: {0}")]
    Pnml(#[from] PnmlError),
    #[error("building concurrency oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("model validation failed: {0}")]
    ModelValidation(String),
    #[error("timeout after {seconds}s in phase {phase}; completed phases: [{completed}]")]
    Timeout {
        seconds: u64,
        phase: String,
        completed: String,
    },
    #[error("{0}")]
    Measure(MeasureError),
}

impl RunError {
    /// 2 for validation problems, 3 for timeouts.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Timeout { .. } => 3,
            RunError::Measure(MeasureError::Alignment {
                source: AlignError::BudgetExhausted { .. },
                ..
            }) => 3,
            _ => 2,
        }
    }
}

struct DeadlineHooks {
    deadline: Instant,
    ticks: u32,
}

impl DeadlineHooks {
    fn check(&self) -> Result<(), Interrupted> {
        if Instant::now() >= self.deadline {
            Err(Interrupted)
        } else {
            Ok(())
        }
    }
}

impl ProgressHooks for DeadlineHooks {
    fn begin_phase(&mut self, _phase: Phase) -> Result<(), Interrupted> {
        self.check()
    }

    fn tick(&mut self) -> Result<(), Interrupted> {
        self.ticks = self.ticks.wrapping_add(1);
        self.check()
    }
}

/// Provider backed by precomputed alignments; anything missing is computed
/// in place, so results do not depend on the prefill.
struct CachedAligner<'a> {
    plain: BTreeMap<Trace, Alignment>,
    extended: BTreeMap<Trace, Alignment>,
    fallback: DirectAligner<'a>,
}

impl AlignProvider for CachedAligner<'_> {
    fn align_plain(&self, trace: &Trace) -> Result<Alignment, AlignError> {
        match self.plain.get(trace) {
            Some(a) => Ok(a.clone()),
            None => self.fallback.align_plain(trace),
        }
    }

    fn align_extended(&self, trace: &Trace) -> Result<Alignment, AlignError> {
        match self.extended.get(trace) {
            Some(a) => Ok(a.clone()),
            None => self.fallback.align_extended(trace),
        }
    }
}

fn read(path: &PathBuf) -> Result<Vec<u8>, RunError> {
    std::fs::read(path).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })
}

/// Loads an event log, deciding between XES and CSV by extension, falling
/// back to content sniffing.
pub fn load_log(path: &PathBuf) -> Result<EventLog, RunError> {
    let bytes = read(path)?;
    let bytes = bytes
        .strip_prefix(b"\xef\xbb\xbf")
        .map(<[u8]>::to_vec)
        .unwrap_or(bytes);
    let by_extension = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.eq_ignore_ascii_case("xes"));
    let is_xes = by_extension.unwrap_or_else(|| {
        bytes
            .iter()
            .find(|b| !b.is_ascii_whitespace())
            .is_some_and(|&b| b == b'<')
    });
    if is_xes {
        Ok(parse_xes(&bytes)?)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| {
            RunError::Config(format!("{} is not valid UTF-8", path.display()))
        })?;
        Ok(parse_csv(&text)?)
    }
}

/// Collects every trace the measure will align, for parallel prefill; an
/// expired deadline yields whatever was gathered so far.
fn alignment_jobs(
    log: &EventLog,
    rel: &ConcurrencyRelation,
    cap: u64,
    deadline: Instant,
) -> (Vec<Trace>, Vec<Trace>) {
    let extended: Vec<Trace> = tandem::extend_log(&tandem::reduce_log(log))
        .unique()
        .cloned()
        .collect();
    let results = patgen_core::patterns::representative_traces_and_patterns_cancellable(
        log,
        rel,
        cap,
        &mut || Instant::now() < deadline,
    );
    let mut plain = Vec::new();
    if let Ok(results) = results {
        for analysis in results.into_iter().flatten() {
            if analysis.patterns.is_empty() {
                continue;
            }
            for t in &analysis.representative_traces {
                plain.push(t.clone());
            }
        }
    }
    plain.sort();
    plain.dedup();
    (extended, plain)
}

fn prefill(
    sn: &SystemNet,
    limits: AlignLimits,
    jobs: (Vec<Trace>, Vec<Trace>),
    threads: usize,
    deadline: Instant,
) -> (BTreeMap<Trace, Alignment>, BTreeMap<Trace, Alignment>) {
    let (extended_jobs, plain_jobs) = jobs;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("worker pool");
    let expired = AtomicBool::new(false);
    let run = |traces: &[Trace], extended: bool| -> BTreeMap<Trace, Alignment> {
        traces
            .par_iter()
            .filter_map(|t| {
                if expired.load(Ordering::Relaxed) {
                    return None;
                }
                if Instant::now() >= deadline {
                    expired.store(true, Ordering::Relaxed);
                    return None;
                }
                let result = if extended {
                    patgen_core::align::align_extended(t, sn, &limits)
                } else {
                    patgen_core::align::align(t, sn, &limits)
                };
                result.ok().map(|a| (t.clone(), a))
            })
            .collect()
    };
    pool.install(|| {
        let extended = run(&extended_jobs, true);
        let plain = run(&plain_jobs, false);
        (plain, extended)
    })
}

/// Runs the measure end to end and renders the report.
pub fn run(config: &RunConfig) -> Result<String, RunError> {
    if config.linearization_cap < 1 {
        return Err(RunError::Config("linearization cap must be at least 1".into()));
    }
    if config.timeout_secs < 1 {
        return Err(RunError::Config("timeout must be at least 1 second".into()));
    }
    let zero = Fraction::from_integer(0.into());
    let one = Fraction::from_integer(1.into());
    if config.noise < zero || config.noise > one {
        return Err(RunError::Config(format!(
            "--df-filter must lie in [0, 1], got {}",
            config.noise_text
        )));
    }
    let report = compute(config)?;
    Ok(match config.output {
        OutputFormat::Json => report::to_json(&report),
        OutputFormat::Csv => report::to_csv(&report),
        OutputFormat::Text => report::to_text(&report, config.breakdown),
    })
}

/// Runs the measure end to end, returning the raw report.
pub fn compute(config: &RunConfig) -> Result<GeneralizationReport, RunError> {
    let deadline = Instant::now() + Duration::from_secs(config.timeout_secs);

    let log = load_log(&config.log_path)?;
    let model_bytes = read(&config.model_path)?;
    let sn = parse_pnml(&model_bytes)?;
    let validation = validate(&sn);
    if !validation.is_clean() {
        let joined = validation
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(RunError::ModelValidation(joined));
    }

    let selection = build_oracle(&config.oracle, &log, &config.noise)?;
    let measure_config = MeasureConfig {
        matching: config.matching,
        linearization_cap: config.linearization_cap,
        align_limits: AlignLimits {
            max_expansions: Some(50_000_000),
        },
        oracle_echo: config.oracle.to_string(),
        epsilon_echo: config.noise_text.clone(),
    };

    let mut hooks = DeadlineHooks { deadline, ticks: 0 };
    let result = if config.threads > 1 {
        let jobs = alignment_jobs(&log, &selection.relation, config.linearization_cap, deadline);
        let (plain, extended) = prefill(
            &sn,
            measure_config.align_limits,
            jobs,
            config.threads,
            deadline,
        );
        let aligner = CachedAligner {
            plain,
            extended,
            fallback: DirectAligner {
                net: &sn,
                limits: measure_config.align_limits,
            },
        };
        generalization(
            &log,
            &selection.relation,
            &measure_config,
            &aligner,
            &mut hooks,
        )
    } else {
        let aligner = DirectAligner {
            net: &sn,
            limits: measure_config.align_limits,
        };
        generalization(
            &log,
            &selection.relation,
            &measure_config,
            &aligner,
            &mut hooks,
        )
    };

    let mut report = result.map_err(|e| match e {
        MeasureError::Interrupted { phase, completed } => RunError::Timeout {
            seconds: config.timeout_secs,
            phase: phase.to_string(),
            completed: completed.join(", "),
        },
        other => RunError::Measure(other),
    })?;
    report.diagnostics.notes.extend(selection.warnings);
    Ok(report)
}
