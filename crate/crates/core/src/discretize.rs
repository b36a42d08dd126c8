//! Supervised entropy-based discretization with the minimum description
//! length stopping rule (Fayyad & Irani).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::DefectDataset;
use crate::error::{Error, Result};

/// Per-feature cut points, ascending. Feature `j` has `cuts[j].len() + 1` bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationModel {
    pub cuts: Vec<Vec<f64>>,
}

/// A dataset whose cells are bin indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedDataset {
    pub rows: Vec<Vec<usize>>,
    pub labels: Vec<u8>,
}

impl DiscretizationModel {
    pub fn n_features(&self) -> usize {
        self.cuts.len()
    }

    pub fn bin_count(&self, j: usize) -> usize {
        self.cuts[j].len() + 1
    }

    pub fn bin_counts(&self) -> Vec<usize> {
        self.cuts.iter().map(|c| c.len() + 1).collect()
    }

    /// Bin of `value` under feature `j`: the number of cuts strictly below it.
    pub fn bin(&self, j: usize, value: f64) -> usize {
        self.cuts[j].partition_point(|&c| c < value)
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<usize>> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                what: "feature count",
                expected: self.n_features(),
                got: row.len(),
            });
        }
        Ok(row.iter().enumerate().map(|(j, &v)| self.bin(j, v)).collect())
    }
}

/// Class counts for a two-class problem.
#[derive(Debug, Clone, Copy, Default)]
struct Counts([usize; 2]);

impl Counts {
    fn total(self) -> usize {
        self.0[0] + self.0[1]
    }

    fn classes(self) -> usize {
        self.0.iter().filter(|&&c| c > 0).count()
    }

    fn entropy(self) -> f64 {
        let n = self.total() as f64;
        if n == 0.0 {
            return 0.0;
        }
        self.0
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    }

    fn minus(self, other: Counts) -> Counts {
        Counts([self.0[0] - other.0[0], self.0[1] - other.0[1]])
    }
}

/// A block of equal values with its class counts.
#[derive(Debug, Clone, Copy)]
struct Block {
    value: f64,
    counts: Counts,
}

impl Block {
    /// Single-class class index, if pure.
    fn pure_class(&self) -> Option<usize> {
        match self.counts.0 {
            [_, 0] => Some(0),
            [0, _] => Some(1),
            _ => None,
        }
    }
}

/// Fits MDLP cut points for one feature.
pub fn fit_mdlp(values: &[f64], labels: &[u8]) -> Result<Vec<f64>> {
    if values.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: values.len(),
            got: labels.len(),
        });
    }
    let mut pairs: Vec<(f64, u8)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut blocks: Vec<Block> = Vec::new();
    for (v, l) in pairs {
        match blocks.last_mut() {
            Some(b) if b.value == v => b.counts.0[usize::from(l)] += 1,
            _ => {
                let mut counts = Counts::default();
                counts.0[usize::from(l)] += 1;
                blocks.push(Block { value: v, counts });
            }
        }
    }

    let mut cuts = Vec::new();
    split(&blocks, &mut cuts);
    cuts.sort_by(f64::total_cmp);
    Ok(cuts)
}

/// Recursively splits `blocks`, pushing accepted cut points.
fn split(blocks: &[Block], cuts: &mut Vec<f64>) {
    if blocks.len() < 2 {
        return;
    }
    let total = blocks.iter().fold(Counts::default(), |acc, b| {
        Counts([acc.0[0] + b.counts.0[0], acc.0[1] + b.counts.0[1]])
    });
    if total.classes() < 2 {
        return;
    }
    let n = total.total() as f64;
    let ent = total.entropy();

    // Best boundary: after block i (cut between blocks i and i+1).
    let mut best: Option<(usize, f64, Counts)> = None;
    let mut left = Counts::default();
    for i in 0..blocks.len() - 1 {
        left.0[0] += blocks[i].counts.0[0];
        left.0[1] += blocks[i].counts.0[1];
        let a = blocks[i].pure_class();
        let b = blocks[i + 1].pure_class();
        let on_boundary = !(a.is_some() && a == b);
        if !on_boundary {
            continue;
        }
        let right = total.minus(left);
        let weighted = (left.total() as f64 * left.entropy() + right.total() as f64 * right.entropy()) / n;
        if best.is_none_or(|(_, w, _)| weighted < w) {
            best = Some((i, weighted, left));
        }
    }
    let Some((i, weighted, left)) = best else {
        return;
    };
    let right = total.minus(left);

    let gain = ent - weighted;
    let m = total.classes() as f64;
    let m1 = left.classes() as f64;
    let m2 = right.classes() as f64;
    let delta = (3f64.powf(m) - 2.0).log2() - (m * ent - m1 * left.entropy() - m2 * right.entropy());
    let threshold = ((n - 1.0).log2() + delta) / n;
    if gain <= threshold {
        return;
    }

    cuts.push((blocks[i].value + blocks[i + 1].value) / 2.0);
    split(&blocks[..=i], cuts);
    split(&blocks[i + 1..], cuts);
}

/// Fits one cut list per feature against the dataset labels.
pub fn fit_all(ds: &DefectDataset) -> Result<DiscretizationModel> {
    let cuts = (0..ds.n_features())
        .into_par_iter()
        .map(|j| fit_mdlp(&ds.column(j), &ds.labels))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscretizationModel { cuts })
}

/// Maps every cell of `ds` to its bin under `model`.
pub fn apply(model: &DiscretizationModel, ds: &DefectDataset) -> Result<DiscretizedDataset> {
    apply_rows(model, &ds.rows).map(|rows| DiscretizedDataset {
        rows,
        labels: ds.labels.clone(),
    })
}

/// Maps a bare feature matrix to bin indices.
pub fn apply_rows(model: &DiscretizationModel, rows: &[Vec<f64>]) -> Result<Vec<Vec<usize>>> {
    rows.iter().map(|r| model.apply_row(r)).collect()
}
