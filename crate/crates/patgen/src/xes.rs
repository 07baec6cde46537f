//! XES event-log ingestion.
//!
//! Only the control-flow subset is read: `<trace>` elements containing
//! `<event>` elements whose `concept:name` string attribute is the activity
//! label. Everything else (timestamps, lifecycle, resources, globals,
//! extensions) is skipped.

use patgen_core::eventlog::{ActivityLabel, EventLog, Trace};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

#[derive(Debug, thiserror::Error)]
pub enum XesError {
    #[error("XML error at line {line}, column {column}: {message}")]
    Xml {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("trace {trace_index}: event without a concept:name attribute")]
    MissingConceptName { trace_index: usize },
    #[error("trace {trace_index}: event with an empty concept:name")]
    EmptyConceptName { trace_index: usize },
}

fn line_col(bytes: &[u8], offset: usize) -> (usize, usize) {
    let upto = offset.min(bytes.len());
    let line = bytes[..upto].iter().filter(|&&b| b == b'\n').count() + 1;
    let column = upto - bytes[..upto].iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

/// Parses an XES document into an event log; identical traces merge.
pub fn parse_xes(bytes: &[u8]) -> Result<EventLog, XesError> {
    let mut reader = Reader::from_reader(bytes);
    let xml_err = |reader: &Reader<&[u8]>, e: quick_xml::Error| {
        let (line, column) = line_col(bytes, reader.buffer_position() as usize);
        XesError::Xml {
            line,
            column,
            message: e.to_string(),
        }
    };

    let mut log = EventLog::new();
    let mut buf = Vec::new();
    let mut trace_index = 0usize;
    let mut in_trace = false;
    let mut in_event = false;
    let mut labels: Vec<ActivityLabel> = Vec::new();
    let mut event_name: Option<String> = None;

    let concept_name = |e: &BytesStart| -> Result<Option<String>, quick_xml::Error> {
        let mut key_matches = false;
        let mut value: Option<String> = None;
        for attr in e.attributes() {
            let attr = attr.map_err(quick_xml::Error::from)?;
            match attr.key.as_ref() {
                b"key" => key_matches = attr.unescape_value()?.as_ref() == "concept:name",
                b"value" => value = Some(attr.unescape_value()?.into_owned()),
                _ => {}
            }
        }
        Ok(if key_matches { value } else { None })
    };

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| xml_err(&reader, e))?;
        match event {
            Event::Start(e) | Event::Empty(e) => match e.local_name().as_ref() {
                b"trace" => {
                    in_trace = true;
                    trace_index += 1;
                    labels.clear();
                }
                b"event" if in_trace => {
                    in_event = true;
                    event_name = None;
                }
                b"string" if in_event => {
                    if let Some(value) = concept_name(&e).map_err(|er| xml_err(&reader, er))? {
                        event_name = Some(value);
                    }
                }
                _ => {}
            },
            Event::End(e) => match e.local_name().as_ref() {
                b"event" if in_event => {
                    in_event = false;
                    let name =
                        event_name
                            .take()
                            .ok_or(XesError::MissingConceptName { trace_index })?;
                    let label = ActivityLabel::new(name)
                        .map_err(|_| XesError::EmptyConceptName { trace_index })?;
                    labels.push(label);
                }
                b"trace" if in_trace => {
                    in_trace = false;
                    log.add(Trace::new(std::mem::take(&mut labels)), 1);
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(log)
}
