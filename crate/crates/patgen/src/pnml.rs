//! PNML ingestion for workflow system nets.
//!
//! Reads places, transitions and arcs (pages are transparent). A transition
//! is silent when its `<name>` text is absent or empty, or when a
//! `<toolspecific>` child carries `activity="$invisible$"`. The initial
//! place is the one with a positive `<initialMarking>`, or else the unique
//! place without incoming arcs; the final place is the unique place without
//! outgoing arcs.

use patgen_core::eventlog::ActivityLabel;
use patgen_core::petri::{NetBuilder, PlaceId, SystemNet, TransitionId};
use quick_xml::events::Event;
use quick_xml::Reader;
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum PnmlError {
    #[error("XML error at line {line}, column {column}: {message}")]
    Xml {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{element} element without an id attribute")]
    MissingId { element: String },
    #[error("arc {arc} references unknown node {reference}")]
    DanglingArc { arc: String, reference: String },
    #[error("arc {arc} must connect a place and a transition")]
    ArcBetweenSameKind { arc: String },
    #[error("transitions {first} and {second} share the label {label}")]
    DuplicateLabel {
        label: String,
        first: String,
        second: String,
    },
    #[error("no unique source place; candidates: {candidates:?}")]
    NoUniqueSource { candidates: Vec<String> },
    #[error("no unique sink place; candidates: {candidates:?}")]
    NoUniqueSink { candidates: Vec<String> },
    #[error("the net declares no places")]
    NoPlaces,
}

#[derive(Default)]
struct PlaceDecl {
    id: String,
    marked: bool,
}

#[derive(Default)]
struct TransitionDecl {
    id: String,
    name: String,
    invisible: bool,
}

struct ArcDecl {
    id: String,
    source: String,
    target: String,
}

fn line_col(bytes: &[u8], offset: usize) -> (usize, usize) {
    let upto = offset.min(bytes.len());
    let line = bytes[..upto].iter().filter(|&&b| b == b'\n').count() + 1;
    let column = upto - bytes[..upto].iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

pub fn parse_pnml(bytes: &[u8]) -> Result<SystemNet, PnmlError> {
    let mut reader = Reader::from_reader(bytes);
    let xml_err = |reader: &Reader<&[u8]>, e: quick_xml::Error| {
        let (line, column) = line_col(bytes, reader.buffer_position() as usize);
        PnmlError::Xml {
            line,
            column,
            message: e.to_string(),
        }
    };

    let mut places: Vec<PlaceDecl> = Vec::new();
    let mut transitions: Vec<TransitionDecl> = Vec::new();
    let mut arcs: Vec<ArcDecl> = Vec::new();

    enum Ctx {
        Place,
        Transition,
    }
    let mut ctx: Option<Ctx> = None;
    let mut in_name = false;
    let mut in_marking = false;
    let mut in_text = false;
    let mut buf = Vec::new();

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| xml_err(&reader, e))?;
        let is_empty_element = matches!(event, Event::Empty(_));
        match event {
            Event::Start(e) | Event::Empty(e) => {
                let empty = is_empty_element;
                let attr_of = |name: &[u8]| -> Result<Option<String>, quick_xml::Error> {
                    for attr in e.attributes() {
                        let attr = attr.map_err(quick_xml::Error::from)?;
                        if attr.key.as_ref() == name {
                            return Ok(Some(attr.unescape_value()?.into_owned()));
                        }
                    }
                    Ok(None)
                };
                match e.local_name().as_ref() {
                    b"place" => {
                        let id = attr_of(b"id")
                            .map_err(|er| xml_err(&reader, er))?
                            .ok_or_else(|| PnmlError::MissingId {
                                element: "place".into(),
                            })?;
                        places.push(PlaceDecl { id, marked: false });
                        if !empty {
                            ctx = Some(Ctx::Place);
                        }
                    }
                    b"transition" => {
                        let id = attr_of(b"id")
                            .map_err(|er| xml_err(&reader, er))?
                            .ok_or_else(|| PnmlError::MissingId {
                                element: "transition".into(),
                            })?;
                        transitions.push(TransitionDecl {
                            id,
                            ..TransitionDecl::default()
                        });
                        if !empty {
                            ctx = Some(Ctx::Transition);
                        }
                    }
                    b"arc" => {
                        let id = attr_of(b"id")
                            .map_err(|er| xml_err(&reader, er))?
                            .unwrap_or_else(|| format!("arc{}", arcs.len() + 1));
                        let source = attr_of(b"source")
                            .map_err(|er| xml_err(&reader, er))?
                            .ok_or_else(|| PnmlError::MissingId {
                                element: format!("arc {id} source"),
                            })?;
                        let target = attr_of(b"target")
                            .map_err(|er| xml_err(&reader, er))?
                            .ok_or_else(|| PnmlError::MissingId {
                                element: format!("arc {id} target"),
                            })?;
                        arcs.push(ArcDecl { id, source, target });
                    }
                    b"name" if ctx.is_some() => in_name = true,
                    b"initialMarking" if matches!(ctx, Some(Ctx::Place)) => in_marking = true,
                    b"text" if in_name || in_marking => in_text = !empty,
                    b"toolspecific" if matches!(ctx, Some(Ctx::Transition)) => {
                        if let Some(activity) =
                            attr_of(b"activity").map_err(|er| xml_err(&reader, er))?
                        {
                            if activity == "$invisible$" {
                                if let Some(t) = transitions.last_mut() {
                                    t.invisible = true;
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) if in_text => {
                let text = t.unescape().map_err(|er| xml_err(&reader, er))?;
                if in_name {
                    if let Some(tr) = transitions.last_mut() {
                        if matches!(ctx, Some(Ctx::Transition)) {
                            tr.name.push_str(&text);
                        }
                    }
                } else if in_marking {
                    if let Some(p) = places.last_mut() {
                        p.marked = text.trim().parse::<u64>().map(|n| n > 0).unwrap_or(false);
                    }
                }
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"place" | b"transition" => ctx = None,
                b"name" => in_name = false,
                b"initialMarking" => in_marking = false,
                b"text" => in_text = false,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if places.is_empty() {
        return Err(PnmlError::NoPlaces);
    }

    // Unique labelling check before building.
    let mut by_label: BTreeMap<&str, &str> = BTreeMap::new();
    for t in &transitions {
        let name = t.name.trim();
        if t.invisible || name.is_empty() {
            continue;
        }
        if let Some(first) = by_label.get(name) {
            return Err(PnmlError::DuplicateLabel {
                label: name.into(),
                first: (*first).into(),
                second: t.id.clone(),
            });
        }
        by_label.insert(name, &t.id);
    }

    let mut builder = NetBuilder::new();
    let mut place_ids: BTreeMap<&str, PlaceId> = BTreeMap::new();
    let mut transition_ids: BTreeMap<&str, TransitionId> = BTreeMap::new();
    for p in &places {
        place_ids.insert(&p.id, builder.add_place(p.id.clone()));
    }
    for t in &transitions {
        let name = t.name.trim();
        let label = if t.invisible || name.is_empty() {
            None
        } else {
            Some(ActivityLabel::new(name).expect("non-empty by the check above"))
        };
        transition_ids.insert(&t.id, builder.add_transition(t.id.clone(), label));
    }
    for arc in &arcs {
        match (
            place_ids.get(arc.source.as_str()),
            transition_ids.get(arc.source.as_str()),
            place_ids.get(arc.target.as_str()),
            transition_ids.get(arc.target.as_str()),
        ) {
            (Some(&p), None, None, Some(&t)) => builder.arc_place_to_transition(p, t),
            (None, Some(&t), Some(&p), None) => builder.arc_transition_to_place(t, p),
            (None, None, _, _) => {
                return Err(PnmlError::DanglingArc {
                    arc: arc.id.clone(),
                    reference: arc.source.clone(),
                })
            }
            (_, _, None, None) => {
                return Err(PnmlError::DanglingArc {
                    arc: arc.id.clone(),
                    reference: arc.target.clone(),
                })
            }
            _ => return Err(PnmlError::ArcBetweenSameKind { arc: arc.id.clone() }),
        }
    }
    let net = builder.build();

    let marked: Vec<usize> = places
        .iter()
        .enumerate()
        .filter(|(_, p)| p.marked)
        .map(|(i, _)| i)
        .collect();
    let source = match marked.as_slice() {
        [single] => PlaceId(*single as u32),
        [] => {
            let candidates: Vec<usize> = (0..places.len())
                .filter(|&i| net.producers(PlaceId(i as u32)).is_empty())
                .collect();
            match candidates.as_slice() {
                [single] => PlaceId(*single as u32),
                _ => {
                    return Err(PnmlError::NoUniqueSource {
                        candidates: candidates.iter().map(|&i| places[i].id.clone()).collect(),
                    })
                }
            }
        }
        _ => {
            return Err(PnmlError::NoUniqueSource {
                candidates: marked.iter().map(|&i| places[i].id.clone()).collect(),
            })
        }
    };
    let sinks: Vec<usize> = (0..places.len())
        .filter(|&i| net.consumers(PlaceId(i as u32)).is_empty())
        .collect();
    let sink = match sinks.as_slice() {
        [single] => PlaceId(*single as u32),
        _ => {
            return Err(PnmlError::NoUniqueSink {
                candidates: sinks.iter().map(|&i| places[i].id.clone()).collect(),
            })
        }
    };

    Ok(SystemNet::new(net, source, sink))
}
