//! An ideal operator that drives a trial straight to its target.
//!
//! The agent acts through the same [`TrialRunner`] as any recorded log, so
//! its log replays to the same outcome. It answers every probe correctly.

use super::log::{Event, EventLog, LogEntry};
use super::runner::{StepOutcome, TrialOutcome, TrialRunner, TrialSetup};
use super::StudyError;
use crate::geometry::{octant_aabb, Ray, Vec3};
use crate::navigation::{NavStyle, STAGE};

/// Clock advance between agent actions.
pub const ACTION_MS: u64 = 100;

/// How far outside the stage structured aims start, in child-centre offsets.
const AIM_REACH: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRun {
    /// Inputs only, as a viewer would record them.
    pub log: EventLog,
    pub outcome: TrialOutcome,
    pub aims: usize,
    pub confirms: usize,
}

struct Driver {
    runner: TrialRunner,
    log: EventLog,
    t: u64,
}

impl Driver {
    fn act(&mut self, dt: u64, event: Event) -> Result<(), StudyError> {
        self.t += dt;
        let entry = LogEntry::new(self.t, event);
        let outcome = self.runner.apply(&entry)?;
        self.log.entries.push(entry);
        if let StepOutcome::Rejected(r) = outcome {
            return Err(StudyError::AgentRejected(r));
        }
        Ok(())
    }

    fn answer_pending(&mut self) -> Result<(), StudyError> {
        if let Some(q) = self.runner.pending_question() {
            let event = Event::Answer {
                question: q.kind,
                choice: q.correct_index,
            };
            self.act(ACTION_MS, event)?;
        }
        Ok(())
    }

    fn confirm_and_settle(&mut self) -> Result<(), StudyError> {
        self.act(ACTION_MS, Event::Confirm {})?;
        let ms = self.runner.setup().config.animation_ms;
        self.act(ms.ceil() as u64, Event::Tick { dt_ms: ms })?;
        self.answer_pending()
    }
}

/// Diagonal aim directions for freeform selection, tried in order.
const DIAGONALS: [[f64; 3]; 4] = [
    [1.0, -1.0, 1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, -1.0, -1.0],
];

pub fn run_oracle_agent(setup: &TrialSetup) -> Result<AgentRun, StudyError> {
    match setup.config.style {
        NavStyle::Structured => structured(setup),
        NavStyle::Unstructured => DIAGONALS
            .iter()
            .find_map(|d| unstructured(setup, Vec3::new(d[0], d[1], d[2])).ok())
            .ok_or(StudyError::Unreachable),
    }
}

fn start(setup: &TrialSetup) -> Result<Driver, StudyError> {
    let mut d = Driver {
        runner: TrialRunner::new(setup.clone())?,
        log: EventLog::new(),
        t: 0,
    };
    d.act(0, Event::Start {})?;
    // a plane through the centre opens the gate and leaves the sphere's far
    // side as the first visible surface below it
    d.act(ACTION_MS, Event::Clip { h: setup.target.center.y })?;
    Ok(d)
}

fn finish(d: Driver) -> Result<AgentRun, StudyError> {
    let count = |name| d.log.entries.iter().filter(|e| e.event.name() == name).count();
    let (aims, confirms) = (count("aim"), count("confirm"));
    let outcome = d.runner.finish();
    if !outcome.completed {
        return Err(StudyError::Unreachable);
    }
    Ok(AgentRun {
        log: d.log,
        outcome,
        aims,
        confirms,
    })
}

/// One aim and one confirm per level. The aim comes in from outside the
/// stage along the diagonal through the wanted child's centre, so that
/// child is the first one entered.
fn structured(setup: &TrialSetup) -> Result<AgentRun, StudyError> {
    let mut d = start(setup)?;
    for &idx in setup.target.cell_path.indices() {
        let child = octant_aabb(&STAGE, idx).expect("stage is a cube").center();
        let from = STAGE.center() + (child - STAGE.center()) * AIM_REACH;
        d.act(ACTION_MS, Event::Aim(Ray::through(from, child)?))?;
        d.confirm_and_settle()?;
    }
    finish(d)
}

/// One aim at the target, then confirms only; the cursor is retained.
fn unstructured(setup: &TrialSetup, dir: Vec3) -> Result<AgentRun, StudyError> {
    let mut d = start(setup)?;
    let center = d.runner.state().transform().apply(setup.target.center);
    d.act(ACTION_MS, Event::Aim(Ray::through(center - dir * 4.0, center)?))?;
    for _ in 0..setup.target.cell_path.depth() {
        d.confirm_and_settle()?;
    }
    finish(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navigation::{DisplayMode, NavConfig};
    use crate::study::{build_trials, replay, ParticipantSchedule};

    #[test]
    fn action_counts_at_depth_three() {
        let trials = build_trials(&ParticipantSchedule::for_participant(2), 99);
        for trial in trials.iter().take(20) {
            for style in [NavStyle::Structured, NavStyle::Unstructured] {
                let cfg = NavConfig::new(style, DisplayMode::Everything);
                let setup = TrialSetup::from_trial(trial, cfg).unwrap();
                let run = run_oracle_agent(&setup).unwrap();
                let expected_aims = if style == NavStyle::Structured { 3 } else { 1 };
                assert_eq!((run.aims, run.confirms), (expected_aims, 3), "{style:?}");
                assert!(run.outcome.completed);
                assert!(run.outcome.answers.iter().all(|a| a.correct));
                let again = replay(setup, &run.log).unwrap();
                assert_eq!(again, run.outcome);
            }
        }
    }
}
