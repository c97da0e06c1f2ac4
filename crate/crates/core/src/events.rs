//! Reuse events and the line-delimited JSON event log.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::AudienceScope;
use crate::provenance::ProvenanceRecord;
use crate::recall::FeatureVector;
use crate::scalar::{is_non_negative, Scalar};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Override {
    #[default]
    None,
    Broadened,
    Narrowed,
}

/// One resurfacing of a content item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct ReuseEvent<T> {
    pub event_id: u64,
    pub item_id: String,
    pub day_index: u32,
    pub features: FeatureVector<T>,
    /// Attached provenance; carries the original audience.
    #[serde(default)]
    pub provenance: Option<ProvenanceRecord>,
    /// Scope chosen at reuse time, when observed.
    #[serde(default)]
    pub outgoing: Option<AudienceScope>,
    #[serde(default)]
    pub overridden: Override,
    #[serde(default = "default_true")]
    pub completed: bool,
    #[serde(default)]
    pub time_to_post_ms: T,
}

fn default_true() -> bool {
    true
}

impl<T: Scalar> ReuseEvent<T> {
    pub fn original_audience(&self) -> Option<AudienceScope> {
        self.provenance.as_ref().map(|p| p.original_audience)
    }
}

/// Ordered event log. Event ids are unique and day indices non-decreasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog<T> {
    events: Vec<ReuseEvent<T>>,
}

impl<T: Scalar> EventLog<T> {
    pub fn new(events: Vec<ReuseEvent<T>>) -> Result<Self> {
        let log = EventLog { events };
        log.validate()?;
        Ok(log)
    }

    pub fn empty() -> Self {
        EventLog { events: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.events.len());
        let mut last_day = 0u32;
        for (i, e) in self.events.iter().enumerate() {
            if !seen.insert(e.event_id) {
                return Err(Error::parameter("event_id", format!("duplicate id {} at position {i}", e.event_id)));
            }
            if e.day_index < last_day {
                return Err(Error::parameter(
                    "day_index",
                    format!("event {} goes back from day {last_day} to {}", e.event_id, e.day_index),
                ));
            }
            last_day = e.day_index;
            e.features.validate()?;
            if let Some(p) = &e.provenance {
                p.validate()?;
            }
            if !is_non_negative(e.time_to_post_ms) {
                return Err(Error::parameter("time_to_post_ms", format!("event {} has a negative value", e.event_id)));
            }
        }
        Ok(())
    }

    pub fn events(&self) -> &[ReuseEvent<T>] {
        &self.events
    }

    pub fn into_events(self) -> Vec<ReuseEvent<T>> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Parses one JSON object per non-blank line.
    pub fn from_jsonl_str(text: &str, source_name: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let event: ReuseEvent<T> = serde_json::from_str(line)
                .map_err(|e| Error::from_json(format!("{source_name}:{}", lineno + 1), &e))?;
            events.push(event);
        }
        Self::new(events)
    }

    pub fn to_jsonl_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for e in &self.events {
            serde_json::to_writer(&mut out, e).expect("event serializes");
            out.push(b'\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl_str(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&self.to_jsonl_bytes()).map_err(|e| Error::io(path, e))
    }
}
