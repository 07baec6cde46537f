//! The `count;label1,label2,...` line format for event logs.

use patgen_core::eventlog::{ActivityLabel, EventLog, Trace};

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("line {line}: expected `count;label,label,...`, missing `;`")]
    MissingSeparator { line: usize },
    #[error("line {line}: invalid trace count {value:?}")]
    InvalidCount { line: usize, value: String },
    #[error("line {line}: trace count must be positive")]
    NonPositiveCount { line: usize },
    #[error("line {line}: empty activity label")]
    EmptyLabel { line: usize },
}

/// Parses a log; duplicate traces merge with summed counts. Empty lines are
/// skipped, CRLF is accepted.
pub fn parse_csv(text: &str) -> Result<EventLog, CsvError> {
    let mut log = EventLog::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let (count_part, labels_part) = row
            .split_once(';')
            .ok_or(CsvError::MissingSeparator { line })?;
        let count: u64 = count_part
            .parse()
            .map_err(|_| CsvError::InvalidCount {
                line,
                value: count_part.to_string(),
            })?;
        if count == 0 {
            return Err(CsvError::NonPositiveCount { line });
        }
        let mut labels = Vec::new();
        for name in labels_part.split(',') {
            let label =
                ActivityLabel::new(name).map_err(|_| CsvError::EmptyLabel { line })?;
            labels.push(label);
        }
        log.add(Trace::new(labels), count);
    }
    Ok(log)
}

/// Renders a log in the same line format, traces in lexicographic order.
pub fn render_csv(log: &EventLog) -> String {
    let mut out = String::new();
    for (trace, count) in log.iter() {
        out.push_str(&count.to_string());
        out.push(';');
        for (i, label) in trace.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(label.as_str());
        }
        out.push('\n');
    }
    out
}
