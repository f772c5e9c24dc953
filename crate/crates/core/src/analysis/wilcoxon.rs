//! Wilcoxon signed-rank test on paired samples.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::AnalysisError;

/// Largest effective sample size tested by exact enumeration.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs with a nonzero difference.
    pub n_effective: usize,
    /// Rank sum of positive differences `post - pre`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Normal approximation with tie and continuity correction.
    #[serde(rename = "Z")]
    pub z: f64,
    /// Two-sided.
    pub p: f64,
    /// One-sided, alternative `post > pre`.
    pub p_greater: f64,
    /// One-sided, alternative `post < pre`.
    pub p_less: f64,
    pub method: WilcoxonMethod,
}

/// Ranks of `values` (1-based, ties averaged), doubled so they stay integral.
pub(crate) fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share rank (i+1 + j+1)/2
        let doubled = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = doubled;
        }
        i = j + 1;
    }
    ranks
}

fn normal_upper(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult, AnalysisError> {
    let diffs: Vec<f64> = pairs.iter().map(|(pre, post)| post - pre).filter(|d| *d != 0.0).collect();
    if let Some(bad) = diffs.iter().find(|d| !d.is_finite()) {
        return Err(AnalysisError::NonFinite(*bad));
    }
    let n = diffs.len();
    if n == 0 {
        return Err(AnalysisError::NoNonzeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let total: u64 = ranks.iter().sum();
    let plus2: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_plus = plus2 as f64 / 2.0;
    let w_minus = (total - plus2) as f64 / 2.0;

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let sd = var.sqrt();
    let dev = w_plus - mean;
    let z = if dev == 0.0 { 0.0 } else { (dev - 0.5 * dev.signum()) / sd };

    let (p_greater, p_less, method) = if n <= EXACT_MAX_N {
        let (ge, le) = exact_tails(&ranks, plus2);
        (ge, le, WilcoxonMethod::Exact)
    } else {
        let upper = normal_upper((dev - 0.5) / sd);
        let lower = 1.0 - normal_upper((dev + 0.5) / sd);
        (upper, lower, WilcoxonMethod::Normal)
    };
    Ok(WilcoxonResult {
        n_effective: n,
        w_plus,
        w_minus,
        z,
        p: (2.0 * p_greater.min(p_less)).min(1.0),
        p_greater,
        p_less,
        method,
    })
}

/// `P(W+ >= w)` and `P(W+ <= w)` under the sign-flip null, by counting the
/// subsets of `ranks` at each doubled sum.
fn exact_tails(ranks: &[u64], w2: u64) -> (f64, f64) {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let patterns = (1u64 << ranks.len()) as f64;
    let ge: u64 = counts[w2 as usize..].iter().sum();
    let le: u64 = counts[..=w2 as usize].iter().sum();
    (ge as f64 / patterns, le as f64 / patterns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_positive_five() {
        let pairs: Vec<_> = (1..=5).map(|i| (0.0, i as f64)).collect();
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!(r.w_plus, 15.0);
        assert_eq!(r.p_greater, 1.0 / 32.0);
        assert_eq!(r.p, 1.0 / 16.0);
        assert!(r.z > 0.0);
    }

    #[test]
    fn zero_differences_are_dropped_or_rejected() {
        assert!(matches!(
            wilcoxon_signed_rank(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(AnalysisError::NoNonzeroDifferences)
        ));
        let r = wilcoxon_signed_rank(&[(1.0, 1.0), (0.0, 2.0), (0.0, -1.0)]).unwrap();
        assert_eq!(r.n_effective, 2);
        assert_eq!((r.w_plus, r.w_minus), (2.0, 1.0));
    }

    #[test]
    fn tied_ranks_are_averaged() {
        assert_eq!(doubled_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![7, 2, 7, 4]);
        let r = wilcoxon_signed_rank(&[(0.0, 1.0), (0.0, -1.0), (0.0, 2.0)]).unwrap();
        assert_eq!((r.w_plus, r.w_minus), (4.5, 1.5));
    }

    #[test]
    fn normal_branch_for_large_n() {
        let pairs: Vec<_> = (1..=20).map(|i| (0.0, if i % 5 == 0 { -(i as f64) } else { i as f64 })).collect();
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Normal);
        assert!(r.p > 0.0 && r.p < 0.05);
        assert!((r.p_greater + r.p_less - 1.0).abs() < 0.1);
    }
}
