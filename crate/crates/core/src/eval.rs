//! Prediction metrics and the statistical comparison of two result samples.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Significance level for Win/Tie/Lose verdicts.
pub const SIGNIFICANCE: f64 = 0.05;

/// Largest combined sample size for which the exact rank-sum null is used.
pub const EXACT_LIMIT: usize = 16;

/// Binary confusion matrix with defective as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

/// PD, PF, G-Measure and MCC of one prediction run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub pd: f64,
    pub pf: f64,
    pub g_measure: f64,
    pub mcc: f64,
}

pub fn confusion(actual: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction count",
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput("no labels to compare".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&a, &p) in actual.iter().zip(predicted) {
        match (a != 0, p != 0) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Metrics from a confusion matrix. Zero denominators give 0. A run with no
/// positive predictions at all (tp = fp = 0) has MCC 0.
pub fn metrics(cm: &ConfusionMatrix) -> EvalRecord {
    let (tp, fn_, fp, tn) = (cm.tp as f64, cm.fn_ as f64, cm.fp as f64, cm.tn as f64);
    let pd = ratio_or_zero(tp, tp + fn_);
    let pf = ratio_or_zero(fp, fp + tn);
    let g_measure = ratio_or_zero(2.0 * pd * (1.0 - pf), pd + (1.0 - pf));
    let mcc = if cm.tp == 0 && cm.fp == 0 {
        0.0
    } else {
        let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        ratio_or_zero(tp * tn - fp * fn_, den)
    };
    EvalRecord { pd, pf, g_measure, mcc }
}

/// Midranks (1-based) of `values`.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Number of `m`-subsets of {1..total} by rank sum.
fn rank_sum_counts(m: usize, total: usize) -> Vec<f64> {
    let max_sum = total * (total + 1) / 2;
    // ways[j][s]: subsets of size j with sum s among the ranks seen so far.
    let mut ways = vec![vec![0.0f64; max_sum + 1]; m + 1];
    ways[0][0] = 1.0;
    for r in 1..=total {
        for j in (1..=m.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                ways[j][s] += ways[j - 1][s - r];
            }
        }
    }
    ways.swap_remove(m)
}

/// Two-sided Wilcoxon rank-sum p-value. Uses the exact null when the samples
/// are small and tie-free, otherwise the normal approximation with tie and
/// continuity corrections.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("rank-sum test needs two non-empty samples".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let has_ties = {
        let mut s = pooled.clone();
        s.sort_by(f64::total_cmp);
        s.windows(2).any(|w| w[0] == w[1])
    };
    if pooled.len() <= EXACT_LIMIT && !has_ties {
        Ok(exact_p(&ranks[..a.len()], pooled.len()))
    } else {
        Ok(normal_p(&ranks, a.len(), b.len()))
    }
}

fn exact_p(a_ranks: &[f64], total: usize) -> f64 {
    let m = a_ranks.len();
    let w = a_ranks.iter().sum::<f64>().round() as usize;
    let counts = rank_sum_counts(m, total);
    let all: f64 = counts.iter().sum();
    let lower: f64 = counts[..=w].iter().sum();
    let upper: f64 = counts[w..].iter().sum();
    (2.0 * lower.min(upper) / all).min(1.0)
}

/// Normal-approximation p-value for the rank sum of the first `m` ranks.
pub fn normal_p(ranks: &[f64], m: usize, n: usize) -> f64 {
    let total = (m + n) as f64;
    let w: f64 = ranks[..m].iter().sum();
    let mean = m as f64 * (total + 1.0) / 2.0;

    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count() as f64;
        tie_term += t * t * t - t;
        i += t as usize;
    }
    let var = if total > 1.0 {
        m as f64 * n as f64 / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)))
    } else {
        0.0
    };
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effect {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Effect {
    pub fn from_delta(delta: f64) -> Self {
        let d = delta.abs();
        if d < 0.147 {
            Effect::Negligible
        } else if d < 0.33 {
            Effect::Small
        } else if d < 0.474 {
            Effect::Medium
        } else {
            Effect::Large
        }
    }
}

impl std::fmt::Display for Effect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Effect::Negligible => "negligible",
            Effect::Small => "small",
            Effect::Medium => "medium",
            Effect::Large => "large",
        };
        f.write_str(s)
    }
}

/// Cliff's delta of `a` over `b` with its effect-size label.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<(f64, Effect)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("Cliff's delta needs two non-empty samples".into()));
    }
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut dominance: i64 = 0;
    for &x in a {
        let below = sorted.partition_point(|&y| y < x) as i64;
        let above = (sorted.len() - sorted.partition_point(|&y| y <= x)) as i64;
        dominance += below - above;
    }
    let delta = dominance as f64 / (a.len() as f64 * b.len() as f64);
    Ok((delta, Effect::from_delta(delta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Win,
    Tie,
    Lose,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Win => "win",
            Verdict::Tie => "tie",
            Verdict::Lose => "lose",
        })
    }
}

/// Outcome of comparing two samples of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub p_value: f64,
    pub delta: f64,
    pub effect: Effect,
    pub verdict: Verdict,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn verdict_from(p: f64, a: &[f64], b: &[f64]) -> Verdict {
    if p >= SIGNIFICANCE {
        Verdict::Tie
    } else if mean(a) > mean(b) {
        Verdict::Win
    } else {
        Verdict::Lose
    }
}

/// Tie when not significant at 5%, otherwise decided by the sample means.
pub fn win_tie_lose(a: &[f64], b: &[f64]) -> Result<Verdict> {
    let p = wilcoxon_ranksum(a, b)?;
    Ok(verdict_from(p, a, b))
}

/// Rank-sum test, Cliff's delta and verdict for `a` against `b`.
pub fn compare_samples(a: &[f64], b: &[f64]) -> Result<StatResult> {
    let p_value = wilcoxon_ranksum(a, b)?;
    let (delta, effect) = cliffs_delta(a, b)?;
    Ok(StatResult {
        p_value,
        delta,
        effect,
        verdict: verdict_from(p_value, a, b),
    })
}
