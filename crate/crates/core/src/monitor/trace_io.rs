//! JSON Lines trace files.
//!
//! Line 1 is `{"kind":"header","meta":{..}}`. Every further line is either an
//! event object (its `kind` is the event kind) or a snapshot record
//! `{"kind":"snapshot","id":"P:K","snapshot":{..}}` written right after the
//! event that references it. Events are written process by process.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{Event, Snapshot, Trace, TraceMeta};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    kind: String,
    meta: TraceMeta,
}

#[derive(Serialize, Deserialize)]
struct SnapshotLine {
    kind: String,
    id: String,
    snapshot: Snapshot,
}

pub fn trace_to_string(trace: &Trace) -> String {
    let mut out = String::new();
    let header = HeaderLine {
        kind: "header".into(),
        meta: trace.meta.clone(),
    };
    push_line(&mut out, &header);
    for ev in trace.iter() {
        push_line(&mut out, ev);
        if let Some(id) = &ev.payload_ref {
            if let Some(snapshot) = trace.snapshots.get(id) {
                push_line(
                    &mut out,
                    &SnapshotLine {
                        kind: "snapshot".into(),
                        id: id.clone(),
                        snapshot: snapshot.clone(),
                    },
                );
            }
        }
    }
    out
}

fn push_line<T: Serialize>(out: &mut String, value: &T) {
    out.push_str(&serde_json::to_string(value).expect("trace records serialize"));
    out.push('\n');
}

pub fn write_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    fs::write(path, trace_to_string(trace))?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    trace_from_str(&fs::read_to_string(path)?)
}

pub fn trace_from_str(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let fmt = |line: usize, reason: String| TraceError::Format { line: line + 1, reason };

    let (n, first) = lines.next().ok_or_else(|| fmt(0, "empty trace file".into()))?;
    let header: HeaderLine = serde_json::from_str(first)
        .map_err(|e| fmt(n, format!("missing or malformed header line: {e}")))?;
    if header.kind != "header" {
        return Err(fmt(n, format!("first record has kind `{}`, expected header", header.kind)));
    }
    let mut trace = Trace::new(header.meta);

    for (n, line) in lines {
        let value: Value = serde_json::from_str(line).map_err(|e| fmt(n, e.to_string()))?;
        let kind = value
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| fmt(n, "record without a string `kind`".into()))?;
        match kind {
            "header" => return Err(fmt(n, "duplicate header".into())),
            "snapshot" => {
                let rec: SnapshotLine =
                    serde_json::from_value(value).map_err(|e| fmt(n, e.to_string()))?;
                trace.snapshots.insert(rec.id, rec.snapshot);
            }
            _ => {
                let ev: Event = serde_json::from_value(value).map_err(|e| fmt(n, e.to_string()))?;
                let p = ev.process.0;
                let list = trace.events.get_mut(p).ok_or_else(|| {
                    fmt(n, format!("process {p} outside world size {}", trace.meta.world_size))
                })?;
                if ev.event_no != list.len() as u64 {
                    return Err(fmt(
                        n,
                        format!(
                            "event {} out of order, expected event_no {}",
                            ev.event_ref(),
                            list.len()
                        ),
                    ));
                }
                list.push(ev);
            }
        }
    }

    for ev in trace.iter() {
        if let Some(id) = &ev.payload_ref {
            if !trace.snapshots.contains_key(id) {
                return Err(TraceError::Format {
                    line: 0,
                    reason: format!("event {} references unknown snapshot `{id}`", ev.event_ref()),
                });
            }
        }
    }
    Ok(trace)
}
