//! Descriptive statistics, the 2x2 fixed-effects ANOVA and Cohen's d.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::AnalysisError;
use crate::navigation::{DisplayMode, NavStyle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for a single value.
    pub sd: Option<f64>,
}

impl Descriptive {
    pub fn sd(&self) -> Result<f64, AnalysisError> {
        self.sd.ok_or(AnalysisError::TooFewValues { needed: 2, got: self.n })
    }
}

pub fn descriptive(values: &[f64]) -> Result<Descriptive, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::TooFewValues { needed: 1, got: 0 });
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(Descriptive { n, mean, sd })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub display: DisplayMode,
    pub style: NavStyle,
    pub value: f64,
    pub participant: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleTable {
    rows: Vec<Sample>,
}

/// Cells in the order (SELECTION, STRUCTURED), (SELECTION, UNSTRUCTURED),
/// (EVERYTHING, STRUCTURED), (EVERYTHING, UNSTRUCTURED).
pub const CELLS: [(DisplayMode, NavStyle); 4] = [
    (DisplayMode::Selection, NavStyle::Structured),
    (DisplayMode::Selection, NavStyle::Unstructured),
    (DisplayMode::Everything, NavStyle::Structured),
    (DisplayMode::Everything, NavStyle::Unstructured),
];

fn cell_index(display: DisplayMode, style: NavStyle) -> usize {
    CELLS.iter().position(|c| *c == (display, style)).expect("CELLS is exhaustive")
}

impl SampleTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: Sample) -> Result<(), AnalysisError> {
        if !sample.value.is_finite() {
            return Err(AnalysisError::NonFinite(sample.value));
        }
        self.rows.push(sample);
        Ok(())
    }

    pub fn rows(&self) -> &[Sample] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values grouped by cell, in [`CELLS`] order.
    pub fn cells(&self) -> [Vec<f64>; 4] {
        let mut cells: [Vec<f64>; 4] = Default::default();
        for r in &self.rows {
            cells[cell_index(r.display, r.style)].push(r.value);
        }
        cells
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| Sample {
                    value: r.value * c,
                    ..*r
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub ss: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub df: (u32, u32),
    pub p: f64,
    pub eta_p_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub display: DisplayMode,
    pub style: NavStyle,
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub display: Effect,
    pub style: Effect,
    pub interaction: Effect,
    pub ss_error: f64,
    pub df_error: u32,
    pub ss_total: f64,
    pub cells: Vec<CellSummary>,
}

/// Upper tail of F(d1, d2) at `f`.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

/// Two-way fixed-effects ANOVA on display x style with single-df contrasts
/// per effect, `SS = psi^2 / sum(c_i^2 / n_i)`; equals the classical
/// decomposition on balanced tables.
pub fn anova_2x2(table: &SampleTable) -> Result<AnovaResult, AnalysisError> {
    let cells = table.cells();
    if let Some(i) = cells.iter().position(Vec::is_empty) {
        return Err(AnalysisError::EmptyCell(CELLS[i].0, CELLS[i].1));
    }
    let n_total = table.len();
    if n_total <= 4 {
        return Err(AnalysisError::TooFewValues { needed: 5, got: n_total });
    }
    let stats: Vec<Descriptive> = cells.iter().map(|c| descriptive(c)).collect::<Result<_, _>>()?;
    let ss_error: f64 = cells
        .iter()
        .zip(&stats)
        .map(|(c, s)| c.iter().map(|v| (v - s.mean).powi(2)).sum::<f64>())
        .sum();
    let grand = table.rows.iter().map(|r| r.value).sum::<f64>() / n_total as f64;
    let ss_total: f64 = table.rows.iter().map(|r| (r.value - grand).powi(2)).sum();
    let df_error = (n_total - 4) as u32;
    let ms_error = ss_error / f64::from(df_error);

    let effect = |coef: [f64; 4]| {
        let psi: f64 = coef.iter().zip(&stats).map(|(c, s)| c * s.mean).sum();
        let weight: f64 = coef.iter().zip(&stats).map(|(c, s)| c * c / s.n as f64).sum();
        let ss = psi * psi / weight;
        let f = if ss == 0.0 {
            0.0
        } else if ms_error == 0.0 {
            f64::INFINITY
        } else {
            ss / ms_error
        };
        let eta_p_sq = if ss + ss_error == 0.0 { 0.0 } else { ss / (ss + ss_error) };
        Effect {
            ss,
            f,
            df: (1, df_error),
            p: f_survival(f, 1.0, f64::from(df_error)),
            eta_p_sq,
        }
    };

    Ok(AnovaResult {
        display: effect([1.0, 1.0, -1.0, -1.0]),
        style: effect([1.0, -1.0, 1.0, -1.0]),
        interaction: effect([1.0, -1.0, -1.0, 1.0]),
        ss_error,
        df_error,
        ss_total,
        cells: CELLS
            .iter()
            .zip(&stats)
            .map(|(&(display, style), s)| CellSummary {
                display,
                style,
                n: s.n,
                mean: s.mean,
                sd: s.sd,
            })
            .collect(),
    })
}

/// `(mean(a) - mean(b)) / pooled sd`.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    for g in [a, b] {
        if g.len() < 2 {
            return Err(AnalysisError::TooFewValues { needed: 2, got: g.len() });
        }
    }
    let (da, db) = (descriptive(a)?, descriptive(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * da.sd()?.powi(2) + (nb - 1.0) * db.sd()?.powi(2)) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    Ok((da.mean - db.mean) / pooled)
}
