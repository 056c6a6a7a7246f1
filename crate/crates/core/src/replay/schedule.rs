use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ids::EventRef;
use crate::monitor::{OverheadModel, TraceMeta};
use crate::runtime::{Decision, RunConfig};

/// Everything needed to re-run a program, apart from the match decisions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunDescriptor {
    pub program: String,
    pub world_size: usize,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub lifecycle_events: bool,
    #[serde(default)]
    pub overhead_model: OverheadModel,
    /// Where the decisions came from, e.g. `seed:3`.
    #[serde(default)]
    pub origin: String,
}

impl RunDescriptor {
    pub fn new(program: &str, world_size: usize) -> RunDescriptor {
        RunDescriptor {
            program: program.to_string(),
            world_size,
            inputs: BTreeMap::new(),
            lifecycle_events: false,
            overhead_model: OverheadModel::default(),
            origin: String::new(),
        }
    }

    pub fn input(mut self, key: &str, value: impl ToString) -> RunDescriptor {
        self.inputs.insert(key.to_string(), value.to_string());
        self
    }

    pub fn overhead(mut self, model: OverheadModel) -> RunDescriptor {
        self.overhead_model = model;
        self
    }

    pub fn lifecycle(mut self, on: bool) -> RunDescriptor {
        self.lifecycle_events = on;
        self
    }

    /// The descriptor a trace was produced under.
    pub fn from_meta(meta: &TraceMeta) -> RunDescriptor {
        RunDescriptor {
            program: meta.program.clone(),
            world_size: meta.world_size,
            inputs: meta.inputs.clone(),
            lifecycle_events: meta.lifecycle_events,
            overhead_model: meta.overhead_model.clone(),
            origin: meta.seed_or_schedule_ref.clone(),
        }
    }

    pub fn config(&self) -> RunConfig {
        RunConfig::new(self.world_size)
            .with_inputs(self.inputs.clone())
            .lifecycle(self.lifecycle_events)
    }
}

/// The replay contract: which message every receive accepted, in the order
/// the matches were made.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSchedule {
    pub meta: RunDescriptor,
    pub decisions: Vec<Decision>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScheduleFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed schedule: {0}")]
    Format(#[from] serde_json::Error),
}

impl MatchSchedule {
    pub fn index_of(&self, recv: EventRef) -> Option<usize> {
        self.decisions
            .iter()
            .position(|d| d.process == recv.process && d.recv_event_no == recv.event_no)
    }

    pub fn decision(&self, recv: EventRef) -> Option<&Decision> {
        self.index_of(recv).map(|i| &self.decisions[i])
    }

    /// Decisions made before the one for `recv`.
    pub fn prefix_before(&self, recv: EventRef) -> Option<&[Decision]> {
        self.index_of(recv).map(|i| &self.decisions[..i])
    }

    /// Short content hash, used as the trace's `seed_or_schedule_ref`.
    pub fn reference(&self) -> String {
        let json = serde_json::to_vec(&self.decisions).expect("decisions serialize");
        let digest = Sha256::digest(&json);
        format!("schedule:{}", &hex::encode(digest)[..16])
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ScheduleFileError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<MatchSchedule, ScheduleFileError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// `trace.jsonl` -> `trace.schedule.json`
pub fn schedule_path_for(trace_path: &Path) -> std::path::PathBuf {
    let stem = match trace_path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => trace_path.with_extension(""),
        _ => trace_path.to_path_buf(),
    };
    let mut name = stem.file_name().unwrap_or_default().to_os_string();
    name.push(".schedule.json");
    stem.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::MessageId;

    #[test]
    fn schedule_json_field_names() {
        let s = MatchSchedule {
            meta: RunDescriptor::new("two_senders", 3),
            decisions: vec![Decision::new(0, 0, MessageId::new(2, 0))],
        };
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(
            v["decisions"][0],
            serde_json::json!({"process": 0, "recv_event_no": 0, "msg": {"sender": 2, "seq": 0}})
        );
        let back: MatchSchedule = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn sibling_schedule_path() {
        assert_eq!(
            schedule_path_for(Path::new("/tmp/t.jsonl")),
            Path::new("/tmp/t.schedule.json")
        );
        assert_eq!(
            schedule_path_for(Path::new("run.trace")),
            Path::new("run.trace.schedule.json")
        );
    }
}
