//! Pairwise statistical comparison of two result sets.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::runner::{PairResult, METRICS};
use crate::error::{Error, Result};
use crate::eval::{compare_samples, StatResult, Verdict};

/// Whether larger values of a metric are better.
pub fn higher_is_better(metric: &str) -> bool {
    metric != "pf"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub source: String,
    pub target: String,
    pub metric: String,
    pub stat: StatResult,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub win: usize,
    pub tie: usize,
    pub lose: usize,
}

impl Tally {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Win => self.win += 1,
            Verdict::Tie => self.tie += 1,
            Verdict::Lose => self.lose += 1,
        }
    }
}

impl std::fmt::Display for Tally {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.win, self.tie, self.lose)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<PairComparison>,
    /// W/T/L of `a` against `b`, per metric in `METRICS` order.
    pub totals: Vec<(String, Tally)>,
}

/// Compares `a` against `b` pair by pair. Both sets must cover the same
/// pairs. For PF the verdict is taken on negated values, so a lower PF wins.
pub fn compare(a: &[PairResult], b: &[PairResult]) -> Result<Comparison> {
    if a.is_empty() {
        return Err(Error::InsufficientData("empty result set".into()));
    }
    let mut rows = Vec::new();
    let mut totals: Vec<(String, Tally)> = METRICS.iter().map(|m| (m.to_string(), Tally::default())).collect();
    for pa in a {
        let Some(pb) = b.iter().find(|p| p.source == pa.source && p.target == pa.target) else {
            return Err(Error::Format(format!(
                "pair {} missing from the second result set",
                pa.label()
            )));
        };
        for (mi, metric) in METRICS.iter().enumerate() {
            let (mut xa, mut xb) = (pa.values(metric), pb.values(metric));
            if !higher_is_better(metric) {
                xa.iter_mut().for_each(|v| *v = -*v);
                xb.iter_mut().for_each(|v| *v = -*v);
            }
            let mut stat = compare_samples(&xa, &xb)?;
            if !higher_is_better(metric) {
                // Report delta on the original scale.
                stat.delta = -stat.delta;
            }
            totals[mi].1.add(stat.verdict);
            rows.push(PairComparison {
                source: pa.source.clone(),
                target: pa.target.clone(),
                metric: metric.to_string(),
                stat,
            });
        }
    }
    if let Some(pb) = b
        .iter()
        .find(|pb| !a.iter().any(|pa| pa.source == pb.source && pa.target == pb.target))
    {
        return Err(Error::Format(format!(
            "pair {} missing from the first result set",
            pb.label()
        )));
    }
    Ok(Comparison { rows, totals })
}

pub fn render(c: &Comparison) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<32} {:<10} {:>9} {:>8}  {:<10} verdict",
        "pair", "metric", "p", "delta", "effect"
    );
    for r in &c.rows {
        let _ = writeln!(
            s,
            "{:<32} {:<10} {:>9.4} {:>8.3}  {:<10} {}",
            format!("{}=>{}", r.source, r.target),
            r.metric,
            r.stat.p_value,
            r.stat.delta,
            r.stat.effect.to_string(),
            r.stat.verdict
        );
    }
    let _ = writeln!(s);
    for (m, t) in &c.totals {
        let _ = writeln!(s, "{m:<10} W/T/L {t}");
    }
    s
}
