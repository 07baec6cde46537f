//! Aggregation of pattern fulfilments into generalization scores and the
//! report assembled around them.
//!
//! `G_pattern` is the trace-count-weighted average of all pattern
//! fulfilments; `G_rep` and `G_conc` slice it by pattern family. A log
//! without patterns scores a perfect 1. All arithmetic is exact; decimals
//! are rendered with six fractional digits, rounding half to even.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::align::{self, AlignError, AlignLimits, Alignment};
use crate::concurrency::ConcurrencyRelation;
use crate::eventlog::{EventLog, Trace};
use crate::patterns::{self, PoAnalysis};
use crate::petri::SystemNet;
use crate::tandem;
use crate::Fraction;

pub use crate::patterns::Matching;

/// Pipeline phases, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    RepetitivePatterns,
    RepetitiveAlignments,
    ConcurrentPatterns,
    ConcurrentAlignments,
    Aggregation,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::RepetitivePatterns => "repetitive-patterns",
            Phase::RepetitiveAlignments => "repetitive-alignments",
            Phase::ConcurrentPatterns => "concurrent-patterns",
            Phase::ConcurrentAlignments => "concurrent-alignments",
            Phase::Aggregation => "aggregation",
        }
    }
}

impl core::fmt::Display for Phase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Signals that the caller wants the pipeline to stop (deadline reached).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interrupted;

/// Cooperative progress/cancellation hooks; `tick` is called once per unit
/// of work (a trace aligned, a partial order linearized).
pub trait ProgressHooks {
    fn begin_phase(&mut self, _phase: Phase) -> Result<(), Interrupted> {
        Ok(())
    }
    fn tick(&mut self) -> Result<(), Interrupted> {
        Ok(())
    }
}

/// Hooks that never interrupt.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoHooks;

impl ProgressHooks for NoHooks {}

/// Source of alignments, so callers can precompute them in parallel; the
/// default computes them in place.
pub trait AlignProvider {
    fn align_plain(&self, trace: &Trace) -> Result<Alignment, AlignError>;
    fn align_extended(&self, trace: &Trace) -> Result<Alignment, AlignError>;
}

/// Aligns directly against the net, sequentially.
pub struct DirectAligner<'a> {
    pub net: &'a SystemNet,
    pub limits: AlignLimits,
}

impl AlignProvider for DirectAligner<'_> {
    fn align_plain(&self, trace: &Trace) -> Result<Alignment, AlignError> {
        align::align(trace, self.net, &self.limits)
    }

    fn align_extended(&self, trace: &Trace) -> Result<Alignment, AlignError> {
        align::align_extended(trace, self.net, &self.limits)
    }
}

#[derive(Debug, Clone)]
pub struct MeasureConfig {
    pub matching: Matching,
    pub linearization_cap: u64,
    pub align_limits: AlignLimits,
    /// Echoed into the report.
    pub oracle_echo: String,
    /// Echoed into the report.
    pub epsilon_echo: String,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            matching: Matching::Interleavings,
            linearization_cap: 10_000,
            align_limits: AlignLimits::default(),
            oracle_echo: String::from("alpha-plus"),
            epsilon_echo: String::from("0"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    Repetitive,
    Concurrent,
}

impl core::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PatternKind::Repetitive => f.write_str("repetitive"),
            PatternKind::Concurrent => f.write_str("concurrent"),
        }
    }
}

/// One pattern in the breakdown.
#[derive(Debug, Clone)]
pub struct PatternRow {
    pub kind: PatternKind,
    /// The extended trace (repetitive) or the smallest source trace of the
    /// partial-order class (concurrent).
    pub provenance: String,
    pub positions: Vec<usize>,
    /// Repetition count; `None` for concurrent patterns.
    pub repetitions: Option<usize>,
    pub weight: u64,
    pub fulfilment: Fraction,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Global concurrency pairs the oracle settled on.
    pub concurrency_pairs: Vec<(String, String)>,
    /// Partial-order classes dropped for exceeding the linearization cap.
    pub capped_partial_orders: Vec<String>,
    pub phases_completed: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GeneralizationReport {
    pub g_pattern: Fraction,
    /// `None` when the family produced no patterns.
    pub g_rep: Option<Fraction>,
    pub g_conc: Option<Fraction>,
    pub total_weight: u64,
    pub rep_weight: u64,
    pub conc_weight: u64,
    pub rows: Vec<PatternRow>,
    pub oracle: String,
    pub epsilon: String,
    pub matching: Matching,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    #[error("{phase} failed on {object}: {source}")]
    Alignment {
        phase: Phase,
        object: String,
        source: AlignError,
    },
    #[error("interrupted during {phase}; completed phases: {completed:?}")]
    Interrupted {
        phase: Phase,
        completed: Vec<String>,
    },
}

/// Weighted average of fulfilments; 1 when no patterns exist.
pub fn aggregate<'a, I>(patterns: I) -> Fraction
where
    I: IntoIterator<Item = (&'a Fraction, u64)>,
{
    let mut numerator = Fraction::zero();
    let mut denominator = BigInt::zero();
    for (pf, weight) in patterns {
        numerator += pf * Fraction::from_integer(weight.into());
        denominator += BigInt::from(weight);
    }
    if denominator.is_zero() {
        Fraction::one()
    } else {
        numerator / Fraction::from_integer(denominator)
    }
}

/// Renders an exact fraction with `digits` fractional digits, rounding
/// half to even.
pub fn render_decimal(value: &Fraction, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = value * Fraction::from_integer(scale.clone());
    let num = scaled.numer();
    let den = scaled.denom();
    debug_assert!(den.is_positive());
    let negative = num.is_negative();
    let num_abs = num.abs();
    let (mut q, r) = (num_abs.clone() / den, num_abs % den);
    let twice = BigInt::from(2) * &r;
    if twice > *den || (twice == *den && (&q % BigInt::from(2)) == BigInt::one()) {
        q += 1;
    }
    let whole = &q / &scale;
    let frac = &q % &scale;
    let mut frac_str = frac.to_string();
    while (frac_str.len() as u32) < digits {
        frac_str.insert(0, '0');
    }
    let sign = if negative && !q.is_zero() { "-" } else { "" };
    if digits == 0 {
        alloc::format!("{sign}{whole}")
    } else {
        alloc::format!("{sign}{whole}.{frac_str}")
    }
}

/// Renders a fraction like `76/87` (or `1` for integers).
pub fn render_fraction(value: &Fraction) -> String {
    if value.denom() == &BigInt::one() {
        value.numer().to_string()
    } else {
        alloc::format!("{}/{}", value.numer(), value.denom())
    }
}

/// Runs the full pattern pipeline and assembles the report.
pub fn generalization(
    log: &EventLog,
    rel: &ConcurrencyRelation,
    config: &MeasureConfig,
    aligner: &dyn AlignProvider,
    hooks: &mut dyn ProgressHooks,
) -> Result<GeneralizationReport, MeasureError> {
    let mut diagnostics = Diagnostics {
        concurrency_pairs: rel
            .global_pairs()
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
        ..Diagnostics::default()
    };
    let mut completed: Vec<String> = Vec::new();
    let interrupted = |phase: Phase, completed: &[String]| MeasureError::Interrupted {
        phase,
        completed: completed.to_vec(),
    };

    // Repetitive patterns: reduce, extend.
    let phase = Phase::RepetitivePatterns;
    hooks
        .begin_phase(phase)
        .map_err(|_| interrupted(phase, &completed))?;
    let extended = tandem::extend_log(&tandem::reduce_log(log));
    completed.push(phase.name().to_string());

    // Alignments of the extended traces and pattern fulfilments.
    let phase = Phase::RepetitiveAlignments;
    hooks
        .begin_phase(phase)
        .map_err(|_| interrupted(phase, &completed))?;
    let mut rows: Vec<PatternRow> = Vec::new();
    for (et, &count) in extended.iter() {
        hooks.tick().map_err(|_| interrupted(phase, &completed))?;
        let alignment = aligner
            .align_extended(et)
            .map_err(|source| MeasureError::Alignment {
                phase,
                object: alloc::format!("{et}"),
                source,
            })?;
        for p in patterns::repetitive_patterns(et, &alignment, count) {
            rows.push(PatternRow {
                kind: PatternKind::Repetitive,
                provenance: alloc::format!("{et}"),
                positions: p.positions,
                repetitions: Some(p.repetitions),
                weight: p.weight,
                fulfilment: p.fulfilment,
            });
        }
    }
    completed.push(phase.name().to_string());

    // Partial orders, representative traces, concurrent patterns.
    let phase = Phase::ConcurrentPatterns;
    hooks
        .begin_phase(phase)
        .map_err(|_| interrupted(phase, &completed))?;
    let results = patterns::representative_traces_and_patterns_cancellable(
        log,
        rel,
        config.linearization_cap,
        &mut || hooks.tick().is_ok(),
    )
    .map_err(|patterns::Canceled| interrupted(phase, &completed))?;
    let mut analyses: Vec<PoAnalysis> = Vec::new();
    for result in results {
        hooks.tick().map_err(|_| interrupted(phase, &completed))?;
        match result {
            Ok(analysis) => analyses.push(analysis),
            Err(capped) => diagnostics.capped_partial_orders.push(capped.to_string()),
        }
    }
    completed.push(phase.name().to_string());

    // Alignments of the representative traces and pattern fulfilments.
    let phase = Phase::ConcurrentAlignments;
    hooks
        .begin_phase(phase)
        .map_err(|_| interrupted(phase, &completed))?;
    let mut cache: BTreeMap<Trace, Alignment> = BTreeMap::new();
    for analysis in &analyses {
        if analysis.patterns.is_empty() {
            continue;
        }
        for rt in &analysis.representative_traces {
            if cache.contains_key(rt) {
                continue;
            }
            hooks.tick().map_err(|_| interrupted(phase, &completed))?;
            let alignment = aligner
                .align_plain(rt)
                .map_err(|source| MeasureError::Alignment {
                    phase,
                    object: alloc::format!("{rt}"),
                    source,
                })?;
            cache.insert(rt.clone(), alignment);
        }
    }
    for analysis in &mut analyses {
        if analysis.patterns.is_empty() {
            continue;
        }
        patterns::compute_concurrent_fulfilments(analysis, &cache, config.matching);
        let provenance = alloc::format!("{}", analysis.group.sources[0]);
        for p in &analysis.patterns {
            rows.push(PatternRow {
                kind: PatternKind::Concurrent,
                provenance: provenance.clone(),
                positions: p.positions.clone(),
                repetitions: None,
                weight: p.weight,
                fulfilment: p.fulfilment.clone().expect("fulfilment was just computed"),
            });
        }
    }
    completed.push(phase.name().to_string());

    let phase = Phase::Aggregation;
    hooks
        .begin_phase(phase)
        .map_err(|_| interrupted(phase, &completed))?;
    let rep_rows = || {
        rows.iter()
            .filter(|r| r.kind == PatternKind::Repetitive)
            .map(|r| (&r.fulfilment, r.weight))
    };
    let conc_rows = || {
        rows.iter()
            .filter(|r| r.kind == PatternKind::Concurrent)
            .map(|r| (&r.fulfilment, r.weight))
    };
    let rep_weight = rep_rows().fold(0u64, |acc, (_, w)| acc.saturating_add(w));
    let conc_weight = conc_rows().fold(0u64, |acc, (_, w)| acc.saturating_add(w));
    let g_rep = (rep_weight > 0).then(|| aggregate(rep_rows()));
    let g_conc = (conc_weight > 0).then(|| aggregate(conc_rows()));
    let g_pattern = aggregate(rows.iter().map(|r| (&r.fulfilment, r.weight)));
    completed.push(phase.name().to_string());
    diagnostics.phases_completed = completed;

    Ok(GeneralizationReport {
        g_pattern,
        g_rep,
        g_conc,
        total_weight: rep_weight.saturating_add(conc_weight),
        rep_weight,
        conc_weight,
        rows,
        oracle: config.oracle_echo.clone(),
        epsilon: config.epsilon_echo.clone(),
        matching: config.matching,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::fixtures::{flower_net, running_example_net};
    use crate::testutil::{running_example_log, local_oracle, t};

    fn frac(n: i64, d: i64) -> Fraction {
        Fraction::new(n.into(), d.into())
    }

    fn run(
        log: &EventLog,
        sn: &SystemNet,
        rel: &ConcurrencyRelation,
        matching: Matching,
    ) -> GeneralizationReport {
        let config = MeasureConfig {
            matching,
            ..MeasureConfig::default()
        };
        let aligner = DirectAligner {
            net: sn,
            limits: config.align_limits,
        };
        generalization(log, rel, &config, &aligner, &mut NoHooks).unwrap()
    }

    #[test]
    fn running_example_scores() {
        let report = run(
            &running_example_log(),
            &running_example_net(),
            &local_oracle(),
            Matching::Interleavings,
        );
        assert_eq!(report.g_rep, Some(frac(76, 87)));
        assert_eq!(report.g_conc, Some(frac(11, 13)));
        assert_eq!(report.g_pattern, frac(142, 165));
        assert_eq!(report.rep_weight, 2900);
        assert_eq!(report.conc_weight, 2600);
        assert_eq!(report.total_weight, 5500);
        assert_eq!(render_decimal(&report.g_pattern, 6), "0.860606");
        assert_eq!(render_decimal(&report.g_rep.unwrap(), 6), "0.873563");
        assert_eq!(render_decimal(&report.g_conc.unwrap(), 6), "0.846154");
    }

    #[test]
    fn partial_matching_scores() {
        let report = run(
            &running_example_log(),
            &running_example_net(),
            &local_oracle(),
            Matching::Partial,
        );
        assert_eq!(report.g_conc, Some(frac(37, 39)));
        assert_eq!(report.g_pattern, frac(10, 11));
    }

    #[test]
    fn g_pattern_blends_the_two_slices() {
        let report = run(
            &running_example_log(),
            &running_example_net(),
            &local_oracle(),
            Matching::Interleavings,
        );
        let blend = (report.g_rep.clone().unwrap()
            * Fraction::from_integer(report.rep_weight.into())
            + report.g_conc.clone().unwrap() * Fraction::from_integer(report.conc_weight.into()))
            / Fraction::from_integer(report.total_weight.into());
        assert_eq!(report.g_pattern, blend);
    }

    #[test]
    fn patternless_log_scores_one() {
        let mut log = EventLog::new();
        log.add(t(&["A", "B", "C"]), 10);
        let report = run(
            &log,
            &running_example_net(),
            &ConcurrencyRelation::empty(),
            Matching::Interleavings,
        );
        assert_eq!(report.g_pattern, frac(1, 1));
        assert_eq!(report.g_rep, None);
        assert_eq!(report.g_conc, None);
        assert_eq!(report.total_weight, 0);
        assert!(report.rows.is_empty());
    }

    #[test]
    fn flower_model_scores_one() {
        let report = run(
            &running_example_log(),
            &flower_net(&["X", "A", "B", "C"]),
            &local_oracle(),
            Matching::Interleavings,
        );
        assert_eq!(report.g_pattern, frac(1, 1));
        assert!(report.rows.iter().all(|r| r.fulfilment == frac(1, 1)));
    }

    #[test]
    fn duplication_leaves_the_measure_unchanged() {
        let log = running_example_log();
        let mut doubled = EventLog::new();
        for (t, &c) in log.iter() {
            doubled.add(t.clone(), 2 * c);
        }
        let sn = running_example_net();
        let a = run(&log, &sn, &local_oracle(), Matching::Interleavings);
        let b = run(&doubled, &sn, &local_oracle(), Matching::Interleavings);
        assert_eq!(a.g_pattern, b.g_pattern);
        assert_eq!(a.g_rep, b.g_rep);
        assert_eq!(a.g_conc, b.g_conc);
    }

    #[test]
    fn aggregate_of_nothing_is_one() {
        assert_eq!(aggregate(core::iter::empty()), frac(1, 1));
    }

    #[test]
    fn decimal_rendering_rounds_half_to_even() {
        assert_eq!(render_decimal(&frac(1, 2), 0), "0");
        assert_eq!(render_decimal(&frac(3, 2), 0), "2");
        assert_eq!(render_decimal(&frac(1, 3), 6), "0.333333");
        assert_eq!(render_decimal(&frac(2, 3), 6), "0.666667");
        assert_eq!(render_decimal(&frac(1, 1), 6), "1.000000");
        // 0.0000005 -> ties to even at the sixth digit.
        assert_eq!(render_decimal(&frac(5, 10_000_000), 6), "0.000000");
        assert_eq!(render_decimal(&frac(15, 10_000_000), 6), "0.000002");
    }

    #[test]
    fn interruption_reports_completed_phases() {
        struct StopAt(usize, usize);
        impl ProgressHooks for StopAt {
            fn begin_phase(&mut self, _phase: Phase) -> Result<(), Interrupted> {
                self.1 += 1;
                if self.1 > self.0 {
                    Err(Interrupted)
                } else {
                    Ok(())
                }
            }
        }
        let sn = running_example_net();
        let config = MeasureConfig::default();
        let aligner = DirectAligner {
            net: &sn,
            limits: config.align_limits,
        };
        let err = generalization(
            &running_example_log(),
            &local_oracle(),
            &config,
            &aligner,
            &mut StopAt(2, 0),
        )
        .unwrap_err();
        match err {
            MeasureError::Interrupted { completed, .. } => {
                assert_eq!(
                    completed,
                    alloc::vec![
                        String::from("repetitive-patterns"),
                        String::from("repetitive-alignments")
                    ]
                );
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }
}
