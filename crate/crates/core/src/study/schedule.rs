//! Counterbalanced condition orders and per-participant trial lists.

use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::navigation::{DisplayMode, NavStyle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub display: DisplayMode,
    pub style: NavStyle,
}

impl Condition {
    /// The four conditions in canonical order; seeds use this index.
    pub const ALL: [Condition; 4] = [
        Condition::new(DisplayMode::Selection, NavStyle::Structured),
        Condition::new(DisplayMode::Selection, NavStyle::Unstructured),
        Condition::new(DisplayMode::Everything, NavStyle::Structured),
        Condition::new(DisplayMode::Everything, NavStyle::Unstructured),
    ];

    pub const fn new(display: DisplayMode, style: NavStyle) -> Self {
        Self { display, style }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).expect("ALL is exhaustive")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Measure {
    Time,
    Awareness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Training,
    Main,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantSchedule {
    pub participant: u32,
    /// Order group in `0..4`: bit 0 set means EVERYTHING first, bit 1 set
    /// means UNSTRUCTURED first within each display block.
    pub group: u8,
    pub condition_order: [Condition; 4],
}

impl ParticipantSchedule {
    pub fn for_participant(participant: u32) -> Self {
        let group = (participant % 4) as u8;
        let (d1, d2) = if group & 1 == 0 {
            (DisplayMode::Selection, DisplayMode::Everything)
        } else {
            (DisplayMode::Everything, DisplayMode::Selection)
        };
        let (s1, s2) = if group & 2 == 0 {
            (NavStyle::Structured, NavStyle::Unstructured)
        } else {
            (NavStyle::Unstructured, NavStyle::Structured)
        };
        Self {
            participant,
            group,
            condition_order: [
                Condition::new(d1, s1),
                Condition::new(d1, s2),
                Condition::new(d2, s1),
                Condition::new(d2, s2),
            ],
        }
    }
}

/// Participants `0..n`, cycling through the four order groups.
pub fn build_schedule(n_participants: u32) -> Result<Vec<ParticipantSchedule>, StudyError> {
    if n_participants == 0 || !n_participants.is_multiple_of(4) {
        return Err(StudyError::ParticipantCount(n_participants));
    }
    Ok((0..n_participants).map(ParticipantSchedule::for_participant).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub participant: u32,
    pub condition: Condition,
    /// 0 is the training object, 1..=4 the main objects.
    pub object_index: u32,
    pub object_seed: u64,
    pub defect_index: u32,
    pub measure: Measure,
    pub phase: Phase,
    /// Seed for probe questions asked during or after this trial.
    pub question_seed: u64,
}

impl TrialSpec {
    /// Whether the object-level question follows this trial.
    pub fn asks_q2(&self) -> bool {
        self.measure == Measure::Awareness
            && self.phase == Phase::Main
            && self.defect_index + 1 == DEFECTS_PER_OBJECT
    }
}

pub const DEFECTS_PER_OBJECT: u32 = 4;
pub const MAIN_OBJECTS_PER_CONDITION: u32 = 4;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one study element: `h0 = mix(master)`, then
/// `h(i+1) = mix(h(i) ^ mix(part(i)))` over `parts`, typically
/// `[participant, condition, object]` or `[participant, condition, object, defect]`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(master), |h, &p| mix(h ^ mix(p)))
}

/// Trials for one participant in presentation order. Per condition: the
/// training object (2 TIME then 2 AWARENESS defects), then 2 TIME objects
/// and 2 AWARENESS objects with 4 defects each.
pub fn build_trials(schedule: &ParticipantSchedule, master_seed: u64) -> Vec<TrialSpec> {
    let mut trials = Vec::with_capacity(80);
    for condition in schedule.condition_order {
        let c = condition.index() as u64;
        for object_index in 0..=MAIN_OBJECTS_PER_CONDITION {
            let object_seed = derive_seed(
                master_seed,
                &[u64::from(schedule.participant), c, u64::from(object_index)],
            );
            for defect_index in 0..DEFECTS_PER_OBJECT {
                let (phase, measure) = match object_index {
                    0 if defect_index < 2 => (Phase::Training, Measure::Time),
                    0 => (Phase::Training, Measure::Awareness),
                    1 | 2 => (Phase::Main, Measure::Time),
                    _ => (Phase::Main, Measure::Awareness),
                };
                trials.push(TrialSpec {
                    participant: schedule.participant,
                    condition,
                    object_index,
                    object_seed,
                    defect_index,
                    measure,
                    phase,
                    question_seed: derive_seed(
                        master_seed,
                        &[
                            u64::from(schedule.participant),
                            c,
                            u64::from(object_index),
                            u64::from(defect_index),
                        ],
                    ),
                });
            }
        }
    }
    trials
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    #[test]
    fn groups_are_balanced_and_blocked() {
        let s = build_schedule(24).unwrap();
        let mut groups = HashMap::new();
        for p in &s {
            *groups.entry(p.group).or_insert(0) += 1;
            let o = p.condition_order;
            assert_eq!(o[0].display, o[1].display);
            assert_eq!(o[2].display, o[3].display);
            assert_ne!(o[0].display, o[2].display);
            assert_eq!(o.iter().collect::<HashSet<_>>().len(), 4);
        }
        assert_eq!(groups.len(), 4);
        assert!(groups.values().all(|&n| n == 6));
        for pos in 0..4 {
            let mut counts = HashMap::new();
            for p in &s {
                *counts.entry(p.condition_order[pos]).or_insert(0) += 1;
            }
            assert!(counts.values().all(|&n| n == 6), "position {pos}: {counts:?}");
        }
    }

    #[test]
    fn schedule_size_rules() {
        assert_eq!(build_schedule(4).unwrap().len(), 4);
        assert!(build_schedule(6).is_err());
        assert!(build_schedule(0).is_err());
    }

    #[test]
    fn trial_counts() {
        let p = ParticipantSchedule::for_participant(5);
        let t = build_trials(&p, 42);
        assert_eq!(t.len(), 80);
        assert_eq!(t.iter().filter(|t| t.phase == Phase::Training).count(), 16);
        assert_eq!(t.iter().filter(|t| t.measure == Measure::Time).count(), 40);
        for c in Condition::ALL {
            let ct: Vec<_> = t.iter().filter(|t| t.condition == c).collect();
            assert_eq!(ct.len(), 20);
            assert_eq!(ct.iter().filter(|t| t.phase == Phase::Training).count(), 4);
        }
        // training block shape: 2 TIME then 2 AWARENESS
        let first: Vec<_> = t[..4].iter().map(|t| (t.phase, t.measure)).collect();
        assert_eq!(
            first,
            [
                (Phase::Training, Measure::Time),
                (Phase::Training, Measure::Time),
                (Phase::Training, Measure::Awareness),
                (Phase::Training, Measure::Awareness)
            ]
        );
        assert_eq!(t.iter().filter(|t| t.asks_q2()).count(), 8);
    }

    #[test]
    fn seeds_are_deterministic_and_unique() {
        let s = build_schedule(24).unwrap();
        let mut objects = HashSet::new();
        let mut questions = HashSet::new();
        for p in &s {
            let a = build_trials(p, 7);
            assert_eq!(a, build_trials(p, 7));
            for t in &a {
                objects.insert(t.object_seed);
                questions.insert(t.question_seed);
            }
        }
        assert_eq!(objects.len(), 24 * 4 * 5);
        assert_eq!(questions.len(), 24 * 80);
        assert_ne!(build_trials(&s[0], 7), build_trials(&s[0], 8));
    }
}
