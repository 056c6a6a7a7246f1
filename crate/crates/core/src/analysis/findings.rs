use serde::{Deserialize, Serialize};

use crate::graph::EventGraph;
use crate::ids::EventRef;
use crate::monitor::EventKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingKind {
    IsolatedSend,
    IsolatedRecv,
    LengthMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    /// One event, or `[send, recv]` for a length mismatch.
    pub events: Vec<EventRef>,
    pub detail: String,
}

/// Sends nobody received, receives of messages nobody sent, and matched
/// pairs whose lengths differ. Ordered by the event that raises the
/// finding (the receive for mismatches).
pub fn detect_errors(g: &EventGraph) -> Vec<Finding> {
    let mut out = Vec::new();
    for e in g.trace.iter() {
        let r = e.event_ref();
        match e.kind {
            EventKind::Send if g.recvs_of(r).is_empty() => {
                let what = e.msg.map(|m| format!("message {m}")).unwrap_or_else(|| "message".into());
                let dest = e.peer.map(|p| p.to_string()).unwrap_or_else(|| "?".into());
                out.push(Finding {
                    kind: FindingKind::IsolatedSend,
                    events: vec![r],
                    detail: format!("{what} sent to rank {dest} is never received"),
                });
            }
            EventKind::Recv => match g.send_of(r) {
                None => {
                    let what = e.msg.map(|m| format!("message {m}")).unwrap_or_else(|| "a message".into());
                    out.push(Finding {
                        kind: FindingKind::IsolatedRecv,
                        events: vec![r],
                        detail: format!("receive of {what} that no event sends"),
                    });
                }
                Some(s) => {
                    let sent = g.trace.event(s).and_then(|se| se.length);
                    if sent != e.length {
                        let show = |l: Option<u64>| l.map(|v| v.to_string()).unwrap_or_else(|| "?".into());
                        out.push(Finding {
                            kind: FindingKind::LengthMismatch,
                            events: vec![s, r],
                            detail: format!(
                                "sender length {} but receiver length {}",
                                show(sent),
                                show(e.length)
                            ),
                        });
                    }
                }
            },
            _ => {}
        }
    }
    out
}
