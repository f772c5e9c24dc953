//! Incremental trial replay: task gating, reveal detection, probe questions
//! and timing metrics.
//!
//! Replay is the single source of truth. Input logs may carry `gate`,
//! `reveal` and `reject` records from an earlier run; they are skipped and
//! recomputed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::log::{Event, EventLog, LogEntry};
use super::questions::{make_q1, make_q2, score_answer, Question, QuestionKind};
use super::schedule::{Measure, TrialSpec, DEFECTS_PER_OBJECT};
use super::StudyError;
use crate::geometry::{Aabb, Plane1D, Similarity};
use crate::navigation::{ConfigError, NavConfig, NavState, Rejection, SceneGeometry};
use crate::object_model::{generate_lattice, place_defects, DefectRegion, LatticeSpec};

/// Slack for the inclusive gate boundary; `0.55 - 0.5` exceeds `0.05` in
/// binary floating point.
pub const GATE_EPSILON: f64 = 1e-9;

/// True when the horizontal clip plane cuts the defect sphere under `transform`.
pub fn clip_gate(clip: Plane1D, defect: &DefectRegion, transform: &Similarity) -> bool {
    let center_y = transform.apply(defect.center).y;
    let radius = transform.apply_length(defect.radius);
    (clip.height() - center_y).abs() <= radius + GATE_EPSILON
}

/// Everything a replay needs besides the log.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub scene: Arc<SceneGeometry>,
    pub target: DefectRegion,
    pub config: NavConfig,
    pub measure: Measure,
    pub question_seed: u64,
    /// Ask the object-level question once the target is revealed.
    pub ask_q2: bool,
}

impl TrialSetup {
    /// Materializes a scheduled trial on the default lattice, with the
    /// object's defects placed from its seed at `config.max_depth`.
    pub fn from_trial(trial: &TrialSpec, config: NavConfig) -> Result<Self, StudyError> {
        let object = generate_lattice(&LatticeSpec::default())?;
        let defects = place_defects(trial.object_seed, config.max_depth, DEFECTS_PER_OBJECT as usize)?;
        let target = defects[trial.defect_index as usize].clone();
        Ok(Self {
            scene: Arc::new(SceneGeometry { object, defects }),
            target,
            config,
            measure: trial.measure,
            question_seed: trial.question_seed,
            ask_q2: trial.asks_q2(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub clipping_ms: u64,
    pub navigation_ms: u64,
    pub total_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question: QuestionKind,
    pub choice: usize,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayErrorKind {
    #[error("timestamp {t} is before the previous {previous}")]
    NonMonotonic { previous: u64, t: u64 },
    #[error("start event is only allowed first")]
    MisplacedStart,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {index}: {kind}")]
pub struct ReplayError {
    pub index: usize,
    pub kind: ReplayErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    Rejected(Rejection),
    /// Annotation from an earlier run.
    Skipped,
}

#[derive(Debug, Clone)]
pub struct TrialRunner {
    setup: TrialSetup,
    nav: NavState,
    index: usize,
    start_ms: u64,
    last_t: Option<u64>,
    gate_ms: Option<u64>,
    reveal_ms: Option<u64>,
    q1_asked: bool,
    pending: Option<Question>,
    answers: Vec<AnswerRecord>,
    rejections: usize,
    recorded: EventLog,
}

impl TrialRunner {
    pub fn new(setup: TrialSetup) -> Result<Self, ConfigError> {
        let nav = NavState::with_scene(setup.config, setup.scene.clone())?;
        Ok(Self {
            setup,
            nav,
            index: 0,
            start_ms: 0,
            last_t: None,
            gate_ms: None,
            reveal_ms: None,
            q1_asked: false,
            pending: None,
            answers: Vec::new(),
            rejections: 0,
            recorded: EventLog::new(),
        })
    }

    pub fn setup(&self) -> &TrialSetup {
        &self.setup
    }

    pub fn state(&self) -> &NavState {
        &self.nav
    }

    pub fn gate_open(&self) -> bool {
        self.gate_ms.is_some()
    }

    pub fn revealed(&self) -> bool {
        self.reveal_ms.is_some()
    }

    pub fn pending_question(&self) -> Option<&Question> {
        self.pending.as_ref()
    }

    pub fn rejections(&self) -> usize {
        self.rejections
    }

    pub fn answers(&self) -> &[AnswerRecord] {
        &self.answers
    }

    /// Timestamp of the last applied entry, or 0.
    pub fn now(&self) -> u64 {
        self.last_t.unwrap_or(0)
    }

    /// The input log plus freshly computed outcome records.
    pub fn recorded(&self) -> &EventLog {
        &self.recorded
    }

    pub fn metrics(&self) -> Option<TrialMetrics> {
        let (gate, reveal) = (self.gate_ms?, self.reveal_ms?);
        let clipping_ms = gate - self.start_ms;
        let navigation_ms = reveal - gate;
        Some(TrialMetrics {
            clipping_ms,
            navigation_ms,
            total_ms: clipping_ms + navigation_ms,
        })
    }

    pub fn apply(&mut self, entry: &LogEntry) -> Result<StepOutcome, ReplayError> {
        let index = self.index;
        let fail = |kind| Err(ReplayError { index, kind });
        if let Some(previous) = self.last_t {
            if entry.t < previous {
                return fail(ReplayErrorKind::NonMonotonic { previous, t: entry.t });
            }
        }
        if matches!(entry.event, Event::Start {}) && index != 0 {
            return fail(ReplayErrorKind::MisplacedStart);
        }
        self.index += 1;
        self.last_t = Some(entry.t);
        if entry.event.is_annotation() {
            return Ok(StepOutcome::Skipped);
        }
        let t = entry.t;
        let result = match &entry.event {
            Event::Start {} => {
                self.start_ms = t;
                Ok(())
            }
            Event::Aim(ray) => self.navigable().and_then(|_| self.nav.aim(ray)),
            Event::Confirm {} => self.navigable().and_then(|_| self.descend()),
            Event::Ascend {} => self.navigable().and_then(|_| self.nav.ascend()),
            Event::Clip { h } => self.navigable().and_then(|_| self.nav.set_clip_height(*h)),
            Event::Tick { dt_ms } => self.nav.tick(*dt_ms),
            Event::Answer { question, choice } => self.answer(*question, *choice),
            Event::Gate { .. } | Event::Reveal { .. } | Event::Reject { .. } => unreachable!(),
        };
        self.recorded.push(t, entry.event.clone());
        if let Err(reason) = result {
            self.rejections += 1;
            self.recorded.push(
                t,
                Event::Reject {
                    op: entry.event.name().to_string(),
                    reason,
                },
            );
        }
        self.update_task(t);
        Ok(match result {
            Ok(()) => StepOutcome::Applied,
            Err(r) => StepOutcome::Rejected(r),
        })
    }

    fn navigable(&self) -> Result<(), Rejection> {
        match self.pending {
            Some(_) => Err(Rejection::QuestionPending),
            None => Ok(()),
        }
    }

    fn descend(&mut self) -> Result<(), Rejection> {
        if !self.gate_open() {
            // report animation first so rejections mean the same with or without the gate
            if self.nav.is_animating() {
                return Err(Rejection::Animating);
            }
            return Err(Rejection::GateClosed);
        }
        self.nav.confirm()?;
        let q1_depth = self.setup.config.max_depth as usize - 1;
        if self.setup.measure == Measure::Awareness
            && !self.q1_asked
            && q1_depth >= 1
            && self.nav.depth() == q1_depth
        {
            self.q1_asked = true;
            self.pending = Some(make_q1(&self.nav, self.setup.question_seed).expect("depth is at least 1"));
        }
        Ok(())
    }

    fn answer(&mut self, kind: QuestionKind, choice: usize) -> Result<(), Rejection> {
        let q = self
            .pending
            .as_ref()
            .filter(|q| q.kind == kind)
            .ok_or(Rejection::NoQuestion)?;
        let correct = score_answer(q, choice).map_err(|_| Rejection::InvalidInput)?;
        self.answers.push(AnswerRecord {
            question: kind,
            choice,
            correct,
        });
        self.pending = None;
        Ok(())
    }

    fn update_task(&mut self, t: u64) {
        let target = &self.setup.target;
        if self.gate_ms.is_none() && clip_gate(self.nav.clip(), target, &self.nav.transform()) {
            self.gate_ms = Some(t);
            self.recorded.push(t, Event::Gate { defect: target.id });
        }
        if self.gate_ms.is_some()
            && self.reveal_ms.is_none()
            && self.nav.reveal_defect(std::slice::from_ref(target)).is_some()
        {
            self.reveal_ms = Some(t);
            self.recorded.push(t, Event::Reveal { defect: target.id });
            if self.setup.ask_q2 {
                let q = make_q2(&self.setup.scene.defects, self.setup.question_seed)
                    .expect("objects carry four defects");
                self.pending = Some(q);
            }
        }
    }

    pub fn finish(self) -> TrialOutcome {
        TrialOutcome {
            completed: self.revealed(),
            metrics: self.metrics(),
            rejections: self.rejections,
            answers: self.answers,
            final_state: self.nav,
            recorded: self.recorded,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// The target was revealed.
    pub completed: bool,
    /// Present for completed trials.
    pub metrics: Option<TrialMetrics>,
    pub rejections: usize,
    pub answers: Vec<AnswerRecord>,
    pub final_state: NavState,
    pub recorded: EventLog,
}

/// Compact, serializable view of an outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub completed: bool,
    #[serde(flatten)]
    pub metrics: Option<TrialMetrics>,
    pub rejections: usize,
    pub depth: usize,
    pub focus: Aabb,
    pub answers: Vec<AnswerRecord>,
}

impl TrialOutcome {
    pub fn summary(&self) -> ReplaySummary {
        ReplaySummary {
            completed: self.completed,
            metrics: self.metrics,
            rejections: self.rejections,
            depth: self.final_state.depth(),
            focus: self.final_state.focus(),
            answers: self.answers.clone(),
        }
    }
}

pub fn replay(setup: TrialSetup, log: &EventLog) -> Result<TrialOutcome, StudyError> {
    let mut runner = TrialRunner::new(setup)?;
    for entry in &log.entries {
        runner.apply(entry)?;
    }
    Ok(runner.finish())
}

/// Replays `events` for a scheduled trial on its generated object.
pub fn run_trial(trial: &TrialSpec, events: &EventLog, config: NavConfig) -> Result<TrialOutcome, StudyError> {
    replay(TrialSetup::from_trial(trial, config)?, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{octant_aabb, OctPath, OctantIndex, Ray, Vec3};
    use crate::navigation::{DisplayMode, NavStyle, STAGE};
    use crate::object_model::TriangleMesh;

    fn sphere(y: f64, r: f64) -> DefectRegion {
        DefectRegion {
            id: 1,
            center: Vec3::new(0.5, y, 0.5),
            radius: r,
            cell_path: OctPath::root(),
        }
    }

    #[test]
    fn gate_examples() {
        let d = sphere(0.5, 0.05);
        let id = Similarity::IDENTITY;
        assert!(clip_gate(Plane1D::new(0.5), &d, &id));
        assert!(!clip_gate(Plane1D::new(0.56), &d, &id));
        assert!(clip_gate(Plane1D::new(0.55), &d, &id));
        assert!(clip_gate(Plane1D::new(0.45), &d, &id));
        // under a 2x zoom about the origin the sphere sits at y = 1, r = 0.1
        let zoom = Similarity::new(2.0, Vec3::ZERO);
        assert!(clip_gate(Plane1D::new(0.95), &d, &zoom));
        assert!(!clip_gate(Plane1D::new(0.85), &d, &zoom));
    }

    /// A structured depth-1 setup whose target sits in octant 0.
    fn setup(measure: Measure) -> TrialSetup {
        let config = NavConfig::new(NavStyle::Structured, DisplayMode::Selection).with_max_depth(1);
        let target = DefectRegion {
            id: 3,
            center: Vec3::splat(0.25),
            radius: 0.075,
            cell_path: OctPath::from_indices(&[0]).unwrap(),
        };
        TrialSetup {
            scene: Arc::new(SceneGeometry {
                object: TriangleMesh::empty(),
                defects: vec![target.clone()],
            }),
            target,
            config,
            measure,
            question_seed: 5,
            ask_q2: false,
        }
    }

    fn aim_octant(i: u8) -> Event {
        let c = octant_aabb(&STAGE, OctantIndex::new(i).unwrap()).unwrap().center();
        Event::Aim(Ray::through(STAGE.center() + (c - STAGE.center()) * 8.0, c).unwrap())
    }

    fn log(entries: &[(u64, Event)]) -> EventLog {
        EventLog {
            entries: entries.iter().cloned().map(|(t, e)| LogEntry::new(t, e)).collect(),
        }
    }

    fn basic_log() -> EventLog {
        log(&[
            (0, Event::Start {}),
            (1000, Event::Clip { h: 0.25 }),
            (2000, aim_octant(0)),
            (3000, Event::Confirm {}),
            (4000, Event::Tick { dt_ms: 250.0 }),
            (5000, Event::Tick { dt_ms: 250.0 }),
        ])
    }

    #[test]
    fn metrics_from_constructed_log() {
        let out = replay(setup(Measure::Time), &basic_log()).unwrap();
        assert!(out.completed);
        assert_eq!(
            out.metrics,
            Some(TrialMetrics {
                clipping_ms: 1000,
                navigation_ms: 4000,
                total_ms: 5000
            })
        );
        assert_eq!(out.rejections, 0);
        let names: Vec<_> = out.recorded.entries.iter().map(|e| e.event.name()).collect();
        assert_eq!(names, ["start", "clip", "gate", "aim", "confirm", "tick", "tick", "reveal"]);
    }

    #[test]
    fn confirm_before_gate_is_rejected() {
        let mut l = basic_log();
        l.entries.insert(1, LogEntry::new(500, Event::Confirm {}));
        l.entries.insert(1, LogEntry::new(400, aim_octant(0)));
        let out = replay(setup(Measure::Time), &l).unwrap();
        assert_eq!(out.rejections, 1);
        assert_eq!(out.metrics.unwrap().total_ms, 5000);
        let reject = out.recorded.entries.iter().find(|e| e.event.name() == "reject").unwrap();
        assert_eq!(
            reject.event,
            Event::Reject {
                op: "confirm".into(),
                reason: Rejection::GateClosed
            }
        );
    }

    #[test]
    fn replay_is_deterministic_and_closed() {
        let a = replay(setup(Measure::Time), &basic_log()).unwrap();
        let b = replay(setup(Measure::Time), &basic_log()).unwrap();
        assert_eq!(a, b);
        // replaying the recorded log, annotations included, changes nothing
        let c = replay(setup(Measure::Time), &a.recorded).unwrap();
        assert_eq!(c.recorded, a.recorded);
        assert_eq!(c.final_state, a.final_state);
    }

    #[test]
    fn start_offsets_trial_time() {
        let mut l = basic_log();
        l.entries[0].t = 400;
        let m = replay(setup(Measure::Time), &l).unwrap().metrics.unwrap();
        assert_eq!((m.clipping_ms, m.navigation_ms), (600, 4000));
        l.entries.remove(0);
        let m = replay(setup(Measure::Time), &l).unwrap().metrics.unwrap();
        assert_eq!(m.clipping_ms, 1000);
    }

    #[test]
    fn malformed_logs_report_index() {
        let mut l = basic_log();
        l.entries[3].t = 10;
        let Err(StudyError::Replay(e)) = replay(setup(Measure::Time), &l) else {
            panic!()
        };
        assert_eq!(e.index, 3);
        let mut l = basic_log();
        l.entries.push(LogEntry::new(6000, Event::Start {}));
        assert!(replay(setup(Measure::Time), &l).is_err());
    }

    #[test]
    fn incomplete_trial_has_no_metrics() {
        let mut l = basic_log();
        l.entries.truncate(4);
        let out = replay(setup(Measure::Time), &l).unwrap();
        assert!(!out.completed);
        assert_eq!(out.metrics, None);
    }

    #[test]
    fn q1_blocks_navigation_until_answered() {
        let mut s = setup(Measure::Awareness);
        s.config = s.config.with_max_depth(2);
        s.target.radius = 0.03;
        s.target.center = Vec3::splat(0.125);
        s.target.cell_path = OctPath::from_indices(&[0, 0]).unwrap();
        let mut r = TrialRunner::new(s).unwrap();
        let steps = [
            (1000, Event::Clip { h: 0.125 }),
            (2000, aim_octant(0)),
            (3000, Event::Confirm {}),
            (3500, Event::Tick { dt_ms: 500.0 }),
        ];
        for (t, e) in steps {
            r.apply(&LogEntry::new(t, e)).unwrap();
        }
        let q = r.pending_question().unwrap().clone();
        assert_eq!(q.kind, QuestionKind::Q1);
        assert_eq!(
            r.apply(&LogEntry::new(3600, aim_octant(0))).unwrap(),
            StepOutcome::Rejected(Rejection::QuestionPending)
        );
        let wrong = LogEntry::new(3700, Event::Answer {
            question: QuestionKind::Q2,
            choice: 0,
        });
        assert_eq!(r.apply(&wrong).unwrap(), StepOutcome::Rejected(Rejection::NoQuestion));
        let ans = LogEntry::new(3800, Event::Answer {
            question: QuestionKind::Q1,
            choice: q.correct_index,
        });
        assert_eq!(r.apply(&ans).unwrap(), StepOutcome::Applied);
        assert!(r.answers()[0].correct);
        for (t, e) in [
            (4000, aim_octant(0)),
            (4100, Event::Confirm {}),
            (4600, Event::Tick { dt_ms: 500.0 }),
        ] {
            r.apply(&LogEntry::new(t, e)).unwrap();
        }
        let out = r.finish();
        assert!(out.completed);
        assert_eq!(out.rejections, 2);
        assert_eq!(out.metrics.unwrap().total_ms, 4600);
    }

    #[test]
    fn scheduled_trials_materialize() {
        use crate::study::{build_trials, ParticipantSchedule};
        let trials = build_trials(&ParticipantSchedule::for_participant(0), 1);
        let cfg = NavConfig::new(trials[0].condition.style, trials[0].condition.display);
        let s = TrialSetup::from_trial(&trials[0], cfg).unwrap();
        assert_eq!(s.scene.defects.len(), 4);
        assert_eq!(s.target, s.scene.defects[0]);
        assert!(s.target.is_contained());
    }
}
