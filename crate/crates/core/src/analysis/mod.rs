//! Statistics over study output: descriptive summaries, the 2x2 ANOVA with
//! partial eta squared, Cohen's d, the Wilcoxon signed-rank test and SSQ
//! scoring, plus the report that ties them to trial records.

mod anova;
mod ssq;
mod wilcoxon;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anova::{
    anova_2x2, cohens_d, descriptive, f_survival, AnovaResult, CellSummary, Descriptive, Effect,
    Sample, SampleTable, CELLS,
};
pub use ssq::{ssq_scores, SsqItem, SsqMultipliers, SsqScores, SsqWeightConfig};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N};

use crate::navigation::{DisplayMode, NavStyle};
use crate::study::{Measure, Phase, QuestionKind, TrialRecord};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("cell ({0:?}, {1:?}) has no data")]
    EmptyCell(DisplayMode, NavStyle),
    #[error("pooled standard deviation is zero")]
    ZeroVariance,
    #[error("all paired differences are zero")]
    NoNonzeroDifferences,
    #[error("expected {expected} SSQ ratings, got {got}")]
    SsqLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub measure: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anova: Option<AnovaResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Pre/post questionnaire ratings for one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsqRecord {
    pub participant: u32,
    pub pre: Vec<u32>,
    pub post: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsqSubscaleReport {
    pub subscale: String,
    pub pre: Descriptive,
    pub post: Descriptive,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wilcoxon: Option<WilcoxonResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub primo_schema: u32,
    pub trials: usize,
    pub measures: Vec<MeasureReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ssq: Vec<SsqSubscaleReport>,
}

fn measure_report(name: &str, table: &SampleTable) -> MeasureReport {
    let (anova, error) = match anova_2x2(table) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    MeasureReport {
        measure: name.to_string(),
        n: table.len(),
        anova,
        error,
    }
}

/// Timing measures come from completed main TIME trials; accuracy measures
/// score each answer 1 or 0 over main AWARENESS trials.
pub fn analyze_records(records: &[TrialRecord]) -> Result<AnalysisReport, AnalysisError> {
    type Extract = fn(&TrialRecord) -> Vec<f64>;
    let timing: [(&str, Extract); 3] = [
        ("clipping_ms", |r| r.metrics.iter().map(|m| m.clipping_ms as f64).collect()),
        ("navigation_ms", |r| r.metrics.iter().map(|m| m.navigation_ms as f64).collect()),
        ("total_ms", |r| r.metrics.iter().map(|m| m.total_ms as f64).collect()),
    ];
    let answers = |kind: QuestionKind| {
        move |r: &TrialRecord| -> Vec<f64> {
            r.answers
                .iter()
                .filter(|a| a.question == kind)
                .map(|a| if a.correct { 1.0 } else { 0.0 })
                .collect()
        }
    };
    let build = |measure: Measure, extract: &dyn Fn(&TrialRecord) -> Vec<f64>| {
        let mut table = SampleTable::new();
        for r in records.iter().filter(|r| r.phase == Phase::Main && r.measure == measure) {
            for value in extract(r) {
                table.push(Sample {
                    display: r.condition.display,
                    style: r.condition.style,
                    value,
                    participant: r.participant,
                })?;
            }
        }
        Ok::<_, AnalysisError>(table)
    };
    let mut measures = Vec::new();
    for (name, extract) in timing {
        measures.push(measure_report(name, &build(Measure::Time, &extract)?));
    }
    measures.push(measure_report("q1_accuracy", &build(Measure::Awareness, &answers(QuestionKind::Q1))?));
    measures.push(measure_report("q2_accuracy", &build(Measure::Awareness, &answers(QuestionKind::Q2))?));
    Ok(AnalysisReport {
        primo_schema: SCHEMA_VERSION,
        trials: records.len(),
        measures,
        ssq: Vec::new(),
    })
}

/// Per-subscale pre/post summaries and a Wilcoxon test on the differences.
pub fn analyze_ssq(records: &[SsqRecord], weights: &SsqWeightConfig) -> Result<Vec<SsqSubscaleReport>, AnalysisError> {
    let mut pairs: [Vec<(f64, f64)>; 4] = Default::default();
    for r in records {
        let (a, b) = (ssq_scores(&r.pre, weights)?, ssq_scores(&r.post, weights)?);
        for (i, (x, y)) in [
            (a.nausea, b.nausea),
            (a.oculomotor, b.oculomotor),
            (a.disorientation, b.disorientation),
            (a.total, b.total),
        ]
        .into_iter()
        .enumerate()
        {
            pairs[i].push((x, y));
        }
    }
    ["nausea", "oculomotor", "disorientation", "total"]
        .iter()
        .zip(&pairs)
        .map(|(name, p)| {
            let pre: Vec<f64> = p.iter().map(|x| x.0).collect();
            let post: Vec<f64> = p.iter().map(|x| x.1).collect();
            let (wilcoxon, error) = match wilcoxon_signed_rank(p) {
                Ok(w) => (Some(w), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(SsqSubscaleReport {
                subscale: name.to_string(),
                pre: descriptive(&pre)?,
                post: descriptive(&post)?,
                wilcoxon,
                error,
            })
        })
        .collect()
}

fn cell_label(display: DisplayMode, style: NavStyle) -> &'static str {
    match (display, style) {
        (DisplayMode::Selection, NavStyle::Structured) => "SEL/STR",
        (DisplayMode::Selection, NavStyle::Unstructured) => "SEL/UNS",
        (DisplayMode::Everything, NavStyle::Structured) => "EVR/STR",
        (DisplayMode::Everything, NavStyle::Unstructured) => "EVR/UNS",
    }
}

/// Plain-text table: one block per measure with cell means and sds, then
/// F, p and partial eta squared per effect.
pub fn format_table(report: &AnalysisReport) -> String {
    let mut out = String::new();
    for m in &report.measures {
        let _ = writeln!(out, "{} (n = {})", m.measure, m.n);
        let Some(a) = &m.anova else {
            let _ = writeln!(out, "  {}", m.error.as_deref().unwrap_or("no result"));
            continue;
        };
        for c in &a.cells {
            let sd = c.sd.map_or("-".to_string(), |s| format!("{s:.2}"));
            let _ = writeln!(out, "  {:<8} mu={:<12.2} sigma={:<10} n={}", cell_label(c.display, c.style), c.mean, sd, c.n);
        }
        for (name, e) in [("display", a.display), ("style", a.style), ("display x style", a.interaction)] {
            let _ = writeln!(
                out,
                "  {:<16} F({},{})={:<10.3} p={:<8.4} eta_p^2={:.3}",
                name, e.df.0, e.df.1, e.f, e.p, e.eta_p_sq
            );
        }
    }
    for s in &report.ssq {
        let w = s.wilcoxon.map_or(String::from("-"), |w| format!("Z={:.3} p={:.4}", w.z, w.p));
        let _ = writeln!(out, "ssq {:<15} pre={:<9.2} post={:<9.2} {}", s.subscale, s.pre.mean, s.post.mean, w);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::{AnswerRecord, Condition, TrialMetrics};

    fn record(c: Condition, measure: Measure, total: u64) -> TrialRecord {
        TrialRecord {
            participant: 0,
            condition: c,
            measure,
            phase: Phase::Main,
            completed: true,
            metrics: (measure == Measure::Time).then_some(TrialMetrics {
                clipping_ms: total / 4,
                navigation_ms: total - total / 4,
                total_ms: total,
            }),
            answers: if measure == Measure::Awareness {
                vec![AnswerRecord {
                    question: QuestionKind::Q1,
                    choice: 0,
                    correct: total.is_multiple_of(2),
                }]
            } else {
                Vec::new()
            },
        }
    }

    #[test]
    fn report_covers_all_measures() {
        let mut records = Vec::new();
        for c in crate::study::Condition::ALL {
            for k in 0..6 {
                records.push(record(c, Measure::Time, 4000 + 100 * k));
                records.push(record(c, Measure::Awareness, k));
            }
        }
        let report = analyze_records(&records).unwrap();
        let names: Vec<_> = report.measures.iter().map(|m| m.measure.as_str()).collect();
        assert_eq!(names, ["clipping_ms", "navigation_ms", "total_ms", "q1_accuracy", "q2_accuracy"]);
        let total = report.measures[2].anova.as_ref().unwrap();
        assert_eq!(total.display.p, 1.0);
        assert_eq!(report.measures[3].n, 24);
        assert!(report.measures[4].anova.is_none());
        let text = format_table(&report);
        assert!(text.contains("total_ms (n = 24)"));
        assert!(text.contains("SEL/STR"));
    }

    #[test]
    fn ssq_report() {
        let w = SsqWeightConfig::standard();
        let records: Vec<_> = (0..6)
            .map(|p| SsqRecord {
                participant: p,
                pre: vec![0; 16],
                post: (0..16).map(|i| (i + p) % 2).collect(),
            })
            .collect();
        let r = analyze_ssq(&records, &w).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r[3].wilcoxon.unwrap().p_greater < 0.05);
    }
}
