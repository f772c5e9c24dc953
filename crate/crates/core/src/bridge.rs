//! Request/response bridge for an interactive front end.
//!
//! Each request is one JSON object `{"op": ..., "data": ..., "t": ...}` with
//! `op` one of `aim`, `confirm`, `ascend`, `clip`, `tick`, `answer` or
//! `state`; `data` follows the session-log schema for that event and `t`
//! (optional, ms) stamps it. Without `t` the bridge keeps its own clock,
//! advanced by ticks. Every reply is `{"state": ...}` or `{"error": ...}`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::navigation::{ConfigError, NavSnapshot, Rejection};
use crate::study::{
    Event, EventLog, LogEntry, Question, StepOutcome, TrialMetrics, TrialRunner, TrialSetup,
};

#[derive(Debug, Deserialize)]
struct Request {
    op: String,
    #[serde(default)]
    data: Value,
    #[serde(default)]
    t: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeState {
    pub t: u64,
    pub nav: NavSnapshot,
    pub gate_open: bool,
    pub revealed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<TrialMetrics>,
    pub rejections: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejected: Option<Rejection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question: Option<Question>,
}

#[derive(Debug, Clone)]
pub struct Bridge {
    runner: TrialRunner,
    clock_ms: f64,
}

impl Bridge {
    /// Starts a session; the recorded log opens with a `start` at t = 0.
    pub fn new(setup: TrialSetup) -> Result<Self, ConfigError> {
        let mut runner = TrialRunner::new(setup)?;
        runner
            .apply(&LogEntry::new(0, Event::Start {}))
            .expect("first entry");
        Ok(Self { runner, clock_ms: 0.0 })
    }

    pub fn runner(&self) -> &TrialRunner {
        &self.runner
    }

    pub fn recorded(&self) -> &EventLog {
        self.runner.recorded()
    }

    fn state(&self, rejected: Option<Rejection>) -> BridgeState {
        BridgeState {
            t: self.runner.now(),
            nav: self.runner.state().snapshot(),
            gate_open: self.runner.gate_open(),
            revealed: self.runner.revealed(),
            metrics: self.runner.metrics(),
            rejections: self.runner.rejections(),
            rejected,
            question: self.runner.pending_question().cloned(),
        }
    }

    pub fn handle(&mut self, request: &Value) -> Value {
        match self.try_handle(request) {
            Ok(state) => json!({ "state": state }),
            Err(message) => json!({ "error": message }),
        }
    }

    /// One request line in, one reply line out.
    pub fn handle_line(&mut self, line: &str) -> String {
        let reply = match serde_json::from_str::<Value>(line) {
            Ok(v) => self.handle(&v),
            Err(e) => json!({ "error": format!("invalid JSON: {e}") }),
        };
        reply.to_string()
    }

    fn try_handle(&mut self, request: &Value) -> Result<BridgeState, String> {
        let req: Request = serde_json::from_value(request.clone()).map_err(|e| e.to_string())?;
        let op = req.op.as_str();
        if op == "state" {
            return Ok(self.state(None));
        }
        if !matches!(op, "aim" | "confirm" | "ascend" | "clip" | "tick" | "answer") {
            return Err(format!("unknown op {op:?}"));
        }
        let data = if req.data.is_null() { json!({}) } else { req.data };
        let event: Event =
            serde_json::from_value(json!({ "e": op, "data": data })).map_err(|e| format!("bad {op} data: {e}"))?;
        if let Event::Tick { dt_ms } = event {
            if dt_ms >= 0.0 && dt_ms.is_finite() {
                self.clock_ms += dt_ms;
            }
        }
        let t = match req.t {
            Some(t) => {
                self.clock_ms = self.clock_ms.max(t as f64);
                t
            }
            None => (self.clock_ms.floor() as u64).max(self.runner.now()),
        };
        let outcome = self
            .runner
            .apply(&LogEntry::new(t, event))
            .map_err(|e| e.to_string())?;
        let rejected = match outcome {
            StepOutcome::Rejected(r) => Some(r),
            _ => None,
        };
        Ok(self.state(rejected))
    }
}
