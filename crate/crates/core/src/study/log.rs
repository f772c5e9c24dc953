//! Timestamped event logs and their JSON-lines encoding.
//!
//! One entry per line, fields in the fixed order `t`, `e`, `data`:
//!
//! ```text
//! {"t":0,"e":"start","data":{}}
//! {"t":850,"e":"clip","data":{"h":0.42}}
//! {"t":1210,"e":"aim","data":{"origin":[0.5,2.0,0.5],"dir":[0.0,-1.0,0.0]}}
//! {"t":1400,"e":"confirm","data":{}}
//! {"t":1416,"e":"tick","data":{"dt_ms":16.0}}
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::questions::QuestionKind;
use crate::geometry::Ray;
use crate::navigation::Rejection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "e", content = "data", rename_all = "lowercase")]
pub enum Event {
    /// Trial start; trial time is measured from here.
    Start {},
    Aim(Ray),
    Confirm {},
    Ascend {},
    Clip { h: f64 },
    Tick { dt_ms: f64 },
    /// The clip plane first cut the target sphere.
    Gate { defect: u32 },
    /// The target was reached at the deepest level.
    Reveal { defect: u32 },
    Answer { question: QuestionKind, choice: usize },
    Reject { op: String, reason: Rejection },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::Start {} => "start",
            Event::Aim(_) => "aim",
            Event::Confirm {} => "confirm",
            Event::Ascend {} => "ascend",
            Event::Clip { .. } => "clip",
            Event::Tick { .. } => "tick",
            Event::Gate { .. } => "gate",
            Event::Reveal { .. } => "reveal",
            Event::Answer { .. } => "answer",
            Event::Reject { .. } => "reject",
        }
    }

    /// Outcome records written by a replay; inputs ignore them.
    pub fn is_annotation(&self) -> bool {
        matches!(self, Event::Gate { .. } | Event::Reveal { .. } | Event::Reject { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: u64,
    #[serde(flatten)]
    pub event: Event,
}

impl LogEntry {
    pub fn new(t: u64, event: Event) -> Self {
        Self { t, event }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LogParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

/// Result of reading a JSONL log.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub log: EventLog,
    /// The last line lacked a newline and did not parse; it was dropped.
    pub truncated: bool,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: u64, event: Event) {
        self.entries.push(LogEntry::new(t, event));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("log entries serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses one entry per non-blank line. A final line cut off mid-write
    /// (no trailing newline, invalid JSON) is dropped and reported.
    pub fn from_jsonl(text: &str) -> Result<ParsedLog, LogParseError> {
        let mut entries = Vec::new();
        let mut truncated = false;
        let ends_cleanly = text.is_empty() || text.ends_with('\n');
        let lines: Vec<&str> = text.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<LogEntry>(line) {
                Ok(e) => entries.push(e),
                Err(_) if i + 1 == lines.len() && !ends_cleanly => truncated = true,
                Err(err) => {
                    return Err(LogParseError {
                        line: i + 1,
                        message: err.to_string(),
                    })
                }
            }
        }
        Ok(ParsedLog {
            log: EventLog { entries },
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    #[test]
    fn wire_format_is_fixed() {
        let mut log = EventLog::new();
        log.push(0, Event::Start {});
        log.push(5, Event::Clip { h: 0.5 });
        log.push(
            7,
            Event::Aim(Ray::new(Vec3::new(0.5, 2.0, 0.5), Vec3::new(0.0, -1.0, 0.0)).unwrap()),
        );
        log.push(8, Event::Confirm {});
        log.push(9, Event::Tick { dt_ms: 16.5 });
        log.push(
            9,
            Event::Reject {
                op: "confirm".into(),
                reason: Rejection::GateClosed,
            },
        );
        log.push(
            12,
            Event::Answer {
                question: QuestionKind::Q1,
                choice: 2,
            },
        );
        let text = log.to_jsonl();
        let expected = concat!(
            "{\"t\":0,\"e\":\"start\",\"data\":{}}\n",
            "{\"t\":5,\"e\":\"clip\",\"data\":{\"h\":0.5}}\n",
            "{\"t\":7,\"e\":\"aim\",\"data\":{\"origin\":[0.5,2.0,0.5],\"dir\":[0.0,-1.0,0.0]}}\n",
            "{\"t\":8,\"e\":\"confirm\",\"data\":{}}\n",
            "{\"t\":9,\"e\":\"tick\",\"data\":{\"dt_ms\":16.5}}\n",
            "{\"t\":9,\"e\":\"reject\",\"data\":{\"op\":\"confirm\",\"reason\":\"gate_closed\"}}\n",
            "{\"t\":12,\"e\":\"answer\",\"data\":{\"question\":\"q1\",\"choice\":2}}\n",
        );
        assert_eq!(text, expected);
        let back = EventLog::from_jsonl(&text).unwrap();
        assert!(!back.truncated);
        assert_eq!(back.log, log);
        assert_eq!(back.log.to_jsonl(), text);
    }

    #[test]
    fn truncated_tail_is_dropped() {
        let text = "{\"t\":0,\"e\":\"start\",\"data\":{}}\n{\"t\":5,\"e\":\"cl";
        let parsed = EventLog::from_jsonl(text).unwrap();
        assert!(parsed.truncated);
        assert_eq!(parsed.log.len(), 1);
        // a complete final line without newline is fine
        let parsed = EventLog::from_jsonl("{\"t\":0,\"e\":\"start\",\"data\":{}}").unwrap();
        assert!(!parsed.truncated);
        assert_eq!(parsed.log.len(), 1);
    }

    #[test]
    fn malformed_lines_report_their_number() {
        let text = "{\"t\":0,\"e\":\"start\",\"data\":{}}\n\n{\"t\":1,\"e\":\"warp\",\"data\":{}}\n";
        assert_eq!(EventLog::from_jsonl(text).unwrap_err().line, 3);
        let zero_dir = "{\"t\":1,\"e\":\"aim\",\"data\":{\"origin\":[0,0,0],\"dir\":[0,0,0]}}\n";
        assert_eq!(EventLog::from_jsonl(zero_dir).unwrap_err().line, 1);
    }

    #[test]
    fn aim_direction_is_normalized_on_read() {
        let line = "{\"t\":1,\"e\":\"aim\",\"data\":{\"origin\":[0,0,0],\"dir\":[0,0,2]}}\n";
        let parsed = EventLog::from_jsonl(line).unwrap();
        let Event::Aim(r) = &parsed.log.entries[0].event else {
            panic!()
        };
        assert_eq!(r.direction, Vec3::new(0.0, 0.0, 1.0));
    }
}
