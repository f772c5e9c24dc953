//! Freeze-probe location questions.
//!
//! Q1 asks where the current focus sits inside the object; Q2 asks where
//! all four defects of an object were. Each has four choices, one correct.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::geometry::{locate_point, path_to_aabb, Aabb, OctPath, Vec3};
use crate::navigation::NavState;
use crate::object_model::DefectRegion;

pub const CHOICES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionKind {
    /// Location of the current focus.
    Q1,
    /// Locations of all defects in the object.
    Q2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub kind: QuestionKind,
    /// Each choice is a set of object-space centres.
    pub choices: Vec<Vec<Vec3>>,
    pub correct_index: usize,
}

impl Question {
    pub fn correct(&self) -> &[Vec3] {
        &self.choices[self.correct_index]
    }
}

type Cell = [u64; 3];

fn cell_center(cell: Cell, depth: usize) -> Vec3 {
    path_to_aabb(&Aabb::UNIT, &OctPath::from_cell_coords(cell, depth))
        .expect("unit root is a cube")
        .center()
}

fn random_cell(rng: &mut ChaCha8Rng, depth: usize) -> Cell {
    let n = 1u64 << depth;
    std::array::from_fn(|_| rng.random_range(0..n))
}

fn top_octant(cell: Cell, depth: usize) -> [bool; 3] {
    cell.map(|c| (c >> (depth - 1)) & 1 == 1)
}

/// Draws uniformly among cells satisfying `accept` that are not in `taken`.
fn draw_cell(
    rng: &mut ChaCha8Rng,
    depth: usize,
    taken: &[Cell],
    accept: impl Fn(Cell) -> bool,
) -> Option<Cell> {
    let n = 1u64 << depth;
    let candidates: Vec<Cell> = (0..n * n * n)
        .map(|i| [i % n, (i / n) % n, i / (n * n)])
        .filter(|c| !taken.contains(c) && accept(*c))
        .collect();
    (!candidates.is_empty()).then(|| candidates[rng.random_range(0..candidates.len())])
}

fn shuffled(rng: &mut ChaCha8Rng, correct: Vec<Vec3>, distractors: Vec<Vec<Vec3>>) -> (Vec<Vec<Vec3>>, usize) {
    let mut order: Vec<usize> = (0..CHOICES).collect();
    order.shuffle(rng);
    let mut all = Vec::with_capacity(CHOICES);
    all.push(correct);
    all.extend(distractors);
    let choices = order.iter().map(|&i| all[i].clone()).collect();
    let correct_index = order.iter().position(|&i| i == 0).expect("0 is in order");
    (choices, correct_index)
}

/// Q1 for the current focus. Distractors are the centres of same-depth
/// grid cells: the home cell mirrored across a random principal plane, a
/// cell in the same top-level octant, and a cell in a different one.
pub fn make_q1(state: &NavState, seed: u64) -> Result<Question, StudyError> {
    let depth = state.depth();
    if depth == 0 {
        return Err(StudyError::QuestionAtTop);
    }
    let focus_center = state.focus().center();
    let home = locate_point(&Aabb::UNIT, depth, focus_center)
        .expect("focus centre lies in the unit cube")
        .cell_coords();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = rng.random_range(0..3);
    let mut mirror = home;
    mirror[axis] = (1u64 << depth) - 1 - home[axis];
    let top = top_octant(home, depth);
    let mut taken = vec![home, mirror];
    let same = draw_cell(&mut rng, depth, &taken, |c| top_octant(c, depth) == top)
        // depth 1: the top octant holds only the home cell
        .or_else(|| draw_cell(&mut rng, depth, &taken, |_| true))
        .expect("at least 8 cells");
    taken.push(same);
    let other = draw_cell(&mut rng, depth, &taken, |c| top_octant(c, depth) != top)
        .expect("other octants have free cells");
    let distractors = [mirror, same, other]
        .map(|c| vec![cell_center(c, depth)])
        .to_vec();
    let (choices, correct_index) = shuffled(&mut rng, vec![focus_center], distractors);
    Ok(Question {
        kind: QuestionKind::Q1,
        choices,
        correct_index,
    })
}

/// Q2 for an object's four defects. Each distractor moves at least two
/// defects to unoccupied lowest-level cells.
pub fn make_q2(defects: &[DefectRegion], seed: u64) -> Result<Question, StudyError> {
    if defects.len() != CHOICES {
        return Err(StudyError::DefectCount(defects.len()));
    }
    let depth = defects[0].cell_path.depth();
    if depth == 0 || defects.iter().any(|d| d.cell_path.depth() != depth) {
        return Err(StudyError::DefectDepth);
    }
    let truth_cells: Vec<Cell> = defects.iter().map(|d| d.cell_path.cell_coords()).collect();
    let truth: Vec<Vec3> = defects.iter().map(|d| d.center).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut distractors: Vec<Vec<Cell>> = Vec::new();
    while distractors.len() < CHOICES - 1 {
        let moved = rng.random_range(2..=defects.len());
        let mut slots: Vec<usize> = (0..defects.len()).collect();
        slots.shuffle(&mut rng);
        let mut cells = truth_cells.clone();
        for &slot in &slots[..moved] {
            let mut taken = truth_cells.clone();
            taken.extend(cells.iter().copied());
            cells[slot] = loop {
                let c = random_cell(&mut rng, depth);
                if !taken.contains(&c) {
                    break c;
                }
            };
        }
        let mut key = cells.clone();
        key.sort_unstable();
        if !distractors.iter().any(|d| {
            let mut k = d.clone();
            k.sort_unstable();
            k == key
        }) {
            distractors.push(cells);
        }
    }
    let distractors = distractors
        .into_iter()
        .map(|cells| cells.into_iter().map(|c| cell_center(c, depth)).collect())
        .collect();
    let (choices, correct_index) = shuffled(&mut rng, truth, distractors);
    Ok(Question {
        kind: QuestionKind::Q2,
        choices,
        correct_index,
    })
}

pub fn score_answer(q: &Question, picked: usize) -> Result<bool, StudyError> {
    if picked >= q.choices.len() {
        return Err(StudyError::ChoiceOutOfRange(picked));
    }
    Ok(picked == q.correct_index)
}

/// Fraction of correct answers; `None` when there are none.
pub fn accuracy(answers: &[bool]) -> Option<f64> {
    (!answers.is_empty())
        .then(|| answers.iter().filter(|&&a| a).count() as f64 / answers.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{octant_aabb, OctantIndex, Ray};
    use crate::navigation::{DisplayMode, NavConfig, NavStyle, STAGE};
    use crate::object_model::{place_defects, TriangleMesh};

    fn at_path(indices: &[u8]) -> NavState {
        let cfg = NavConfig::new(NavStyle::Structured, DisplayMode::Selection).with_max_depth(4);
        let mut s = NavState::new(cfg, TriangleMesh::empty(), Vec::new()).unwrap();
        for &i in indices {
            let c = octant_aabb(&STAGE, OctantIndex::new(i).unwrap()).unwrap().center();
            let from = STAGE.center() + (c - STAGE.center()) * 8.0;
            s.aim(&Ray::through(from, c).unwrap()).unwrap();
            s.confirm().unwrap();
            s.tick(1e9).unwrap();
        }
        s
    }

    #[test]
    fn q1_structure() {
        for path in [&[3u8][..], &[0, 7], &[5, 5, 2]] {
            let s = at_path(path);
            for seed in 0..50 {
                let q = make_q1(&s, seed).unwrap();
                assert_eq!(q.choices.len(), 4);
                assert_eq!(q.correct(), &[s.focus().center()]);
                let matches = q.choices.iter().filter(|c| c[0] == s.focus().center()).count();
                assert_eq!(matches, 1);
                for i in 0..4 {
                    for j in i + 1..4 {
                        assert_ne!(q.choices[i], q.choices[j]);
                    }
                }
                assert_eq!(q, make_q1(&s, seed).unwrap());
            }
        }
        assert!(make_q1(&at_path(&[]), 1).is_err());
    }

    #[test]
    fn q1_distractor_kinds() {
        let s = at_path(&[6, 1]);
        let depth = 2;
        let home = locate_point(&Aabb::UNIT, depth, s.focus().center()).unwrap();
        let q = make_q1(&s, 11).unwrap();
        let tops: Vec<_> = q
            .choices
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != q.correct_index)
            .map(|(_, c)| locate_point(&Aabb::UNIT, depth, c[0]).unwrap().top())
            .collect();
        assert_eq!(tops.iter().filter(|t| **t == home.top()).count(), 1);
    }

    #[test]
    fn q2_structure() {
        let defects = place_defects(9, 3, 4).unwrap();
        for seed in 0..50 {
            let q = make_q2(&defects, seed).unwrap();
            assert_eq!(q.choices.len(), 4);
            let truth: Vec<Vec3> = defects.iter().map(|d| d.center).collect();
            assert_eq!(q.correct(), &truth[..]);
            for (i, c) in q.choices.iter().enumerate() {
                if i == q.correct_index {
                    continue;
                }
                let differing = c.iter().zip(&truth).filter(|(a, b)| a != b).count();
                assert!(differing >= 2);
            }
        }
        assert!(make_q2(&defects[..3], 1).is_err());
    }

    #[test]
    fn q2_fits_at_depth_one() {
        let defects = place_defects(2, 1, 4).unwrap();
        for seed in 0..20 {
            make_q2(&defects, seed).unwrap();
        }
    }

    #[test]
    fn scoring() {
        let q = make_q2(&place_defects(1, 2, 4).unwrap(), 3).unwrap();
        assert!(score_answer(&q, q.correct_index).unwrap());
        assert!(!score_answer(&q, (q.correct_index + 1) % 4).unwrap());
        assert!(score_answer(&q, 4).is_err());
        assert_eq!(accuracy(&[true, false, true, false]), Some(0.5));
        assert_eq!(accuracy(&[]), None);
    }
}
