//! Report rendering: JSON with the full breakdown, CSV with one row per
//! pattern, and a plain-text summary.

use patgen_core::measure::{
    render_decimal, render_fraction, GeneralizationReport, PatternKind,
};
use patgen_core::Fraction;
use serde::Serialize;

const DIGITS: u32 = 6;

#[derive(Serialize)]
struct ValueOut {
    fraction: String,
    decimal: String,
}

fn value_out(v: &Fraction) -> ValueOut {
    ValueOut {
        fraction: render_fraction(v),
        decimal: render_decimal(v, DIGITS),
    }
}

#[derive(Serialize)]
struct RowOut {
    kind: String,
    provenance: String,
    positions: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    repetitions: Option<usize>,
    weight: u64,
    fulfilment: String,
    fulfilment_decimal: String,
}

#[derive(Serialize)]
struct DiagnosticsOut {
    concurrency_pairs: Vec<[String; 2]>,
    capped_partial_orders: Vec<String>,
    phases_completed: Vec<String>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct ReportOut {
    g_pattern: ValueOut,
    g_repetitive: Option<ValueOut>,
    g_concurrent: Option<ValueOut>,
    total_weight: u64,
    repetitive_weight: u64,
    concurrent_weight: u64,
    oracle: String,
    noise_level: String,
    matching: String,
    patterns: Vec<RowOut>,
    diagnostics: DiagnosticsOut,
}

fn rows(report: &GeneralizationReport) -> Vec<RowOut> {
    report
        .rows
        .iter()
        .map(|r| RowOut {
            kind: r.kind.to_string(),
            provenance: r.provenance.clone(),
            positions: r.positions.clone(),
            repetitions: r.repetitions,
            weight: r.weight,
            fulfilment: render_fraction(&r.fulfilment),
            fulfilment_decimal: render_decimal(&r.fulfilment, DIGITS),
        })
        .collect()
}

/// JSON document with the full breakdown; deterministic field and row order.
pub fn to_json(report: &GeneralizationReport) -> String {
    let out = ReportOut {
        g_pattern: value_out(&report.g_pattern),
        g_repetitive: report.g_rep.as_ref().map(value_out),
        g_concurrent: report.g_conc.as_ref().map(value_out),
        total_weight: report.total_weight,
        repetitive_weight: report.rep_weight,
        concurrent_weight: report.conc_weight,
        oracle: report.oracle.clone(),
        noise_level: report.epsilon.clone(),
        matching: report.matching.to_string(),
        patterns: rows(report),
        diagnostics: DiagnosticsOut {
            concurrency_pairs: report
                .diagnostics
                .concurrency_pairs
                .iter()
                .map(|(a, b)| [a.clone(), b.clone()])
                .collect(),
            capped_partial_orders: report.diagnostics.capped_partial_orders.clone(),
            phases_completed: report.diagnostics.phases_completed.clone(),
            notes: report.diagnostics.notes.clone(),
        },
    };
    let mut s = serde_json::to_string_pretty(&out).expect("report serializes");
    s.push('\n');
    s
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One row per pattern, preceded by summary comment lines.
pub fn to_csv(report: &GeneralizationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# g_pattern={} ({}) total_weight={}\n",
        render_decimal(&report.g_pattern, DIGITS),
        render_fraction(&report.g_pattern),
        report.total_weight
    ));
    out.push_str("kind,provenance,positions,repetitions,weight,fulfilment,fulfilment_decimal\n");
    for r in rows(report) {
        let positions = r
            .positions
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.kind,
            csv_escape(&r.provenance),
            positions,
            r.repetitions.map(|k| k.to_string()).unwrap_or_default(),
            r.weight,
            csv_escape(&r.fulfilment),
            r.fulfilment_decimal
        ));
    }
    out
}

fn na_or(v: &Option<Fraction>) -> String {
    match v {
        Some(v) => format!(
            "{} ({})",
            render_decimal(v, DIGITS),
            render_fraction(v)
        ),
        None => "n/a".to_string(),
    }
}

/// Human-readable summary; the breakdown table is appended on request.
pub fn to_text(report: &GeneralizationReport, breakdown: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "G_pattern  {} ({})  weight {}\n",
        render_decimal(&report.g_pattern, DIGITS),
        render_fraction(&report.g_pattern),
        report.total_weight
    ));
    out.push_str(&format!(
        "G_rep      {}  weight {}\n",
        na_or(&report.g_rep),
        report.rep_weight
    ));
    out.push_str(&format!(
        "G_conc     {}  weight {}\n",
        na_or(&report.g_conc),
        report.conc_weight
    ));
    out.push_str(&format!(
        "oracle {}  noise {}  matching {}\n",
        report.oracle, report.epsilon, report.matching
    ));
    if !report.diagnostics.concurrency_pairs.is_empty() {
        let pairs = report
            .diagnostics
            .concurrency_pairs
            .iter()
            .map(|(a, b)| format!("({a},{b})"))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("concurrency pairs: {pairs}\n"));
    }
    for capped in &report.diagnostics.capped_partial_orders {
        out.push_str(&format!("capped: {capped}\n"));
    }
    for note in &report.diagnostics.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    if breakdown {
        out.push('\n');
        out.push_str("kind        positions      k  weight  pf                provenance\n");
        for r in &report.rows {
            let positions = r
                .positions
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let kind = match r.kind {
                PatternKind::Repetitive => "repetitive",
                PatternKind::Concurrent => "concurrent",
            };
            out.push_str(&format!(
                "{:<11} {:<14} {:<2} {:<7} {:<8} {:<8} {}\n",
                kind,
                format!("{{{positions}}}"),
                r.repetitions.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
                r.weight,
                render_fraction(&r.fulfilment),
                render_decimal(&r.fulfilment, DIGITS),
                r.provenance
            ));
        }
    }
    out
}
