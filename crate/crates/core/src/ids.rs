//! Identities shared by every layer: processes, messages, events and
//! receive filters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Rank of a simulated process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub usize);

impl ProcessId {
    pub fn rank(self) -> usize {
        self.0
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for ProcessId {
    fn from(rank: usize) -> Self {
        ProcessId(rank)
    }
}

/// Identity of a message: the sender and its per-sender send counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageId {
    pub sender: ProcessId,
    pub seq: u64,
}

impl MessageId {
    pub fn new(sender: usize, seq: u64) -> Self {
        MessageId {
            sender: ProcessId(sender),
            seq,
        }
    }
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sender, self.seq)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("expected `A:B` with two non-negative integers, got `{0}`")]
pub struct ParsePairError(pub String);

fn parse_pair(s: &str) -> Result<(usize, u64), ParsePairError> {
    let err = || ParsePairError(s.to_string());
    let (a, b) = s.trim().split_once(':').ok_or_else(err)?;
    let a = a.trim().parse::<usize>().map_err(|_| err())?;
    let b = b.trim().parse::<u64>().map_err(|_| err())?;
    Ok((a, b))
}

impl FromStr for MessageId {
    type Err = ParsePairError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (sender, seq) = parse_pair(s)?;
        Ok(MessageId::new(sender, seq))
    }
}

/// Address of one event: `process:event_no`.
///
/// Serialized as the string `"P:K"`, the addressing syntax shared by the
/// CLI, the service and the UI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventRef {
    pub process: ProcessId,
    pub event_no: u64,
}

impl EventRef {
    pub fn new(process: usize, event_no: u64) -> Self {
        EventRef {
            process: ProcessId(process),
            event_no,
        }
    }
}

impl fmt::Display for EventRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.process, self.event_no)
    }
}

impl FromStr for EventRef {
    type Err = ParsePairError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (process, event_no) = parse_pair(s)?;
        Ok(EventRef::new(process, event_no))
    }
}

impl Serialize for EventRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFilter {
    Rank(ProcessId),
    /// `ANY_SOURCE`: the receive is a wildcard receive.
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagFilter {
    Tag(u32),
    Any,
}

/// Which messages a receive accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecvFilter {
    pub source: SourceFilter,
    pub tag: TagFilter,
}

impl RecvFilter {
    pub fn from_rank(source: usize, tag: u32) -> Self {
        RecvFilter {
            source: SourceFilter::Rank(ProcessId(source)),
            tag: TagFilter::Tag(tag),
        }
    }

    pub fn any_source(tag: u32) -> Self {
        RecvFilter {
            source: SourceFilter::Any,
            tag: TagFilter::Tag(tag),
        }
    }

    pub fn any() -> Self {
        RecvFilter {
            source: SourceFilter::Any,
            tag: TagFilter::Any,
        }
    }

    pub fn is_wildcard(&self) -> bool {
        self.source == SourceFilter::Any
    }

    pub fn accepts_sender(&self, sender: ProcessId) -> bool {
        match self.source {
            SourceFilter::Any => true,
            SourceFilter::Rank(p) => p == sender,
        }
    }

    pub fn accepts_tag(&self, tag: u32) -> bool {
        match self.tag {
            TagFilter::Any => true,
            TagFilter::Tag(t) => t == tag,
        }
    }

    pub fn accepts(&self, env: &Envelope) -> bool {
        self.accepts_sender(env.id.sender) && self.accepts_tag(env.tag)
    }
}

/// A message in flight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub id: MessageId,
    pub dest: ProcessId,
    pub tag: u32,
    pub payload: Vec<u8>,
}

impl Envelope {
    /// Payload size in bytes.
    pub fn length(&self) -> u64 {
        self.payload.len() as u64
    }
}
