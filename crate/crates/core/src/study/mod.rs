//! The experiment apparatus: counterbalanced schedules, trial lists, event
//! logs, gated replay with timing metrics, probe questions and an oracle
//! operator.

mod agent;
mod log;
mod questions;
mod runner;
mod schedule;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agent::{run_oracle_agent, AgentRun, ACTION_MS};
pub use log::{Event, EventLog, LogEntry, LogParseError, ParsedLog};
pub use questions::{accuracy, make_q1, make_q2, score_answer, Question, QuestionKind, CHOICES};
pub use runner::{
    clip_gate, replay, run_trial, AnswerRecord, ReplayError, ReplayErrorKind, ReplaySummary,
    StepOutcome, TrialMetrics, TrialOutcome, TrialRunner, TrialSetup, GATE_EPSILON,
};
pub use schedule::{
    build_schedule, build_trials, derive_seed, Condition, Measure, ParticipantSchedule, Phase,
    TrialSpec, DEFECTS_PER_OBJECT, MAIN_OBJECTS_PER_CONDITION,
};

use crate::geometry::GeometryError;
use crate::navigation::{ConfigError, Rejection};
use crate::object_model::ObjectError;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StudyError {
    #[error("participant count must be a positive multiple of 4, got {0}")]
    ParticipantCount(u32),
    #[error("questions need a focus below the top level")]
    QuestionAtTop,
    #[error("object questions need exactly 4 defects, got {0}")]
    DefectCount(usize),
    #[error("defects must share one depth of at least 1")]
    DefectDepth,
    #[error("choice {0} is out of range")]
    ChoiceOutOfRange(usize),
    #[error("the oracle agent could not reach the target")]
    Unreachable,
    #[error("the oracle agent's input was rejected: {0}")]
    AgentRejected(Rejection),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Object(#[from] ObjectError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Schedule export document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleExport {
    pub primo_schema: u32,
    pub master_seed: u64,
    pub participants: Vec<ParticipantPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantPlan {
    #[serde(flatten)]
    pub schedule: ParticipantSchedule,
    pub trials: Vec<TrialSpec>,
}

impl ScheduleExport {
    pub fn build(n_participants: u32, master_seed: u64) -> Result<Self, StudyError> {
        let participants = build_schedule(n_participants)?
            .into_iter()
            .map(|schedule| ParticipantPlan {
                trials: build_trials(&schedule, master_seed),
                schedule,
            })
            .collect();
        Ok(Self {
            primo_schema: SCHEMA_VERSION,
            master_seed,
            participants,
        })
    }
}

/// One finished trial as consumed by the analysis stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub participant: u32,
    pub condition: Condition,
    pub measure: Measure,
    pub phase: Phase,
    pub completed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<TrialMetrics>,
    #[serde(default)]
    pub answers: Vec<AnswerRecord>,
}

impl TrialRecord {
    pub fn new(trial: &TrialSpec, outcome: &TrialOutcome) -> Self {
        Self {
            participant: trial.participant,
            condition: trial.condition,
            measure: trial.measure,
            phase: trial.phase,
            completed: outcome.completed,
            metrics: outcome.metrics,
            answers: outcome.answers.clone(),
        }
    }
}
