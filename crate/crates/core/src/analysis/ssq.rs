//! Simulator sickness questionnaire scoring.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsqItem {
    pub name: String,
    pub nausea: bool,
    pub oculomotor: bool,
    pub disorientation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsqMultipliers {
    pub nausea: f64,
    pub oculomotor: f64,
    pub disorientation: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsqWeightConfig {
    pub items: Vec<SsqItem>,
    pub multipliers: SsqMultipliers,
}

impl SsqWeightConfig {
    /// The 16-symptom instrument with its published subscale membership and
    /// multipliers; ratings run 0 (none) to 3 (severe).
    pub fn standard() -> Self {
        const ITEMS: [(&str, bool, bool, bool); 16] = [
            ("general discomfort", true, true, false),
            ("fatigue", false, true, false),
            ("headache", false, true, false),
            ("eyestrain", false, true, false),
            ("difficulty focusing", false, true, true),
            ("increased salivation", true, false, false),
            ("sweating", true, false, false),
            ("nausea", true, false, true),
            ("difficulty concentrating", true, true, false),
            ("fullness of head", false, false, true),
            ("blurred vision", false, true, true),
            ("dizzy (eyes open)", false, false, true),
            ("dizzy (eyes closed)", false, false, true),
            ("vertigo", false, false, true),
            ("stomach awareness", true, false, false),
            ("burping", true, false, false),
        ];
        Self {
            items: ITEMS
                .iter()
                .map(|&(name, nausea, oculomotor, disorientation)| SsqItem {
                    name: name.to_string(),
                    nausea,
                    oculomotor,
                    disorientation,
                })
                .collect(),
            multipliers: SsqMultipliers {
                nausea: 9.54,
                oculomotor: 7.58,
                disorientation: 13.92,
                total: 3.74,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsqScores {
    pub nausea: f64,
    pub oculomotor: f64,
    pub disorientation: f64,
    pub total: f64,
}

pub fn ssq_scores(ratings: &[u32], weights: &SsqWeightConfig) -> Result<SsqScores, AnalysisError> {
    if ratings.len() != weights.items.len() {
        return Err(AnalysisError::SsqLength {
            expected: weights.items.len(),
            got: ratings.len(),
        });
    }
    let (mut n, mut o, mut d) = (0.0, 0.0, 0.0);
    for (item, &r) in weights.items.iter().zip(ratings) {
        let r = f64::from(r);
        if item.nausea {
            n += r;
        }
        if item.oculomotor {
            o += r;
        }
        if item.disorientation {
            d += r;
        }
    }
    let m = weights.multipliers;
    Ok(SsqScores {
        nausea: n * m.nausea,
        oculomotor: o * m.oculomotor,
        disorientation: d * m.disorientation,
        total: (n + o + d) * m.total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_ratings() {
        let s = ssq_scores(&[0; 16], &SsqWeightConfig::standard()).unwrap();
        assert_eq!(s, SsqScores { nausea: 0.0, oculomotor: 0.0, disorientation: 0.0, total: 0.0 });
    }

    #[test]
    fn subscales_have_seven_members() {
        let w = SsqWeightConfig::standard();
        assert_eq!(w.items.iter().filter(|i| i.nausea).count(), 7);
        assert_eq!(w.items.iter().filter(|i| i.oculomotor).count(), 7);
        assert_eq!(w.items.iter().filter(|i| i.disorientation).count(), 7);
    }

    #[test]
    fn all_severe_golden() {
        // each subscale raw sum is 7 * 3 = 21
        let s = ssq_scores(&[3; 16], &SsqWeightConfig::standard()).unwrap();
        assert!((s.nausea - 200.34).abs() < 1e-9);
        assert!((s.oculomotor - 159.18).abs() < 1e-9);
        assert!((s.disorientation - 292.32).abs() < 1e-9);
        assert!((s.total - 235.62).abs() < 1e-9);
    }

    #[test]
    fn single_symptom_golden() {
        // "nausea" rated 2 counts toward N and D only
        let mut r = [0; 16];
        r[7] = 2;
        let s = ssq_scores(&r, &SsqWeightConfig::standard()).unwrap();
        assert!((s.nausea - 19.08).abs() < 1e-9);
        assert_eq!(s.oculomotor, 0.0);
        assert!((s.disorientation - 27.84).abs() < 1e-9);
        assert!((s.total - 14.96).abs() < 1e-9);
    }

    #[test]
    fn doubled_multipliers_double_scores() {
        let r = [1, 0, 2, 3, 0, 1, 1, 0, 2, 0, 1, 3, 0, 0, 1, 2];
        let w = SsqWeightConfig::standard();
        let mut w2 = w.clone();
        let m = &mut w2.multipliers;
        (m.nausea, m.oculomotor, m.disorientation, m.total) =
            (2.0 * m.nausea, 2.0 * m.oculomotor, 2.0 * m.disorientation, 2.0 * m.total);
        let (a, b) = (ssq_scores(&r, &w).unwrap(), ssq_scores(&r, &w2).unwrap());
        assert_eq!(b.nausea, 2.0 * a.nausea);
        assert_eq!(b.total, 2.0 * a.total);
    }

    #[test]
    fn length_mismatch() {
        assert!(ssq_scores(&[0; 15], &SsqWeightConfig::standard()).is_err());
    }
}
