//! Maximal information coefficient between a feature and the class label.
//!
//! This is the approximate MINE search: for every grid with `gx * gy <= B(n)`
//! one axis is equipartitioned into `gy` rows and the other axis is cut by
//! dynamic programming over "superclumps" of points. The normalized mutual
//! information `I / ln(min(gx, gy))` is maximized over all grids and over
//! both axis orientations, which makes the score symmetric.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::DefectDataset;
use crate::error::{Error, Result};

/// Grid-search parameters. Defaults match the reference MINE tool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MineParams {
    /// Grid-size exponent: `B(n) = max(n^alpha, 4)`.
    pub alpha: f64,
    /// Clump factor: at most `c * gx` superclumps are kept on the cut axis.
    pub c: usize,
}

impl Default for MineParams {
    fn default() -> Self {
        Self { alpha: 0.6, c: 15 }
    }
}

impl MineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in (0,1], got {}",
                self.alpha
            )));
        }
        if self.c < 1 {
            return Err(Error::InvalidParameter("clump factor c must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-feature relevance scores against the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicProfile {
    pub mic: Vec<f64>,
    pub mic_sum: f64,
}

impl MicProfile {
    pub fn from_scores(mic: Vec<f64>) -> Self {
        let mic_sum = mic.iter().sum();
        Self { mic, mic_sum }
    }

    /// Every feature equally relevant (score 1). This is the plain
    /// transfer naive Bayes weighting.
    pub fn uniform(k: usize) -> Self {
        Self::from_scores(vec![1.0; k])
    }

    pub fn len(&self) -> usize {
        self.mic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mic.is_empty()
    }
}

/// MIC of two paired samples, in `[0, 1]`.
pub fn mic_score(x: &[f64], y: &[f64], params: &MineParams) -> Result<f64> {
    params.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "paired sample length",
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!("MIC needs at least 4 points, got {n}")));
    }
    if is_constant(x) || is_constant(y) {
        return Ok(0.0);
    }

    let bound = (n as f64).powf(params.alpha).max(4.0);
    let max_rows = ((bound / 2.0).floor() as usize).max(2);

    let x_order = argsort(x);
    let y_order = argsort(y);

    let mut best = 0.0_f64;
    for (cut, cut_order, equi, equi_order) in [(x, &x_order, y, &y_order), (y, &y_order, x, &x_order)] {
        let cut_sorted: Vec<f64> = cut_order.iter().map(|&i| cut[i]).collect();
        let equi_sorted: Vec<f64> = equi_order.iter().map(|&i| equi[i]).collect();
        for rows in 2..=max_rows {
            let max_cols = (bound / rows as f64).floor() as usize;
            if max_cols < 2 {
                continue;
            }
            let (row_by_equi_rank, n_rows) = equipartition(&equi_sorted, rows);
            // Row of every point, indexed by original position, then by cut-axis rank.
            let mut row_of = vec![0usize; n];
            for (rank, &i) in equi_order.iter().enumerate() {
                row_of[i] = row_by_equi_rank[rank];
            }
            let rows_along_cut: Vec<usize> = cut_order.iter().map(|&i| row_of[i]).collect();

            let clump_limit = (params.c * max_cols).max(1);
            let (col_of, n_cols) = superclumps(&cut_sorted, &rows_along_cut, clump_limit);
            let scores = optimize_cut_axis(&rows_along_cut, n_rows, &col_of, n_cols, max_cols);
            best = scores.into_iter().fold(best, f64::max);
        }
    }
    Ok(best.clamp(0.0, 1.0))
}

/// MIC of every feature column against the labels.
pub fn mic_profile(ds: &DefectDataset, params: &MineParams) -> Result<MicProfile> {
    if ds.n_rows() < 4 {
        return Err(Error::InsufficientData(format!(
            "MIC profile needs at least 4 rows, got {}",
            ds.n_rows()
        )));
    }
    let labels: Vec<f64> = ds.labels.iter().map(|&l| f64::from(l)).collect();
    let scores = (0..ds.n_features())
        .into_par_iter()
        .map(|j| mic_score(&ds.column(j), &labels, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(MicProfile::from_scores(scores))
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

/// Splits sorted values into at most `bins` rows of roughly equal size.
/// Runs of equal values always land in the same row.
fn equipartition(sorted: &[f64], bins: usize) -> (Vec<usize>, usize) {
    let n = sorted.len();
    let mut out = vec![0usize; n];
    let mut target = n as f64 / bins as f64;
    let mut row = 0usize;
    let mut filled = 0usize;
    let mut i = 0usize;
    while i < n {
        let run = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let with_run = (filled as f64 + run as f64 - target).abs();
        let without = (filled as f64 - target).abs();
        if filled != 0 && with_run >= without {
            row += 1;
            filled = 0;
            target = (n - i) as f64 / (bins - row) as f64;
        }
        out[i..i + run].fill(row);
        i += run;
        filled += run;
    }
    (out, row + 1)
}

/// Groups consecutive points (in cut-axis order) into clumps: maximal runs
/// sharing a row, where a block of tied cut values spanning several rows
/// becomes its own clump. When there are more than `limit` clumps they are
/// merged into `limit` superclumps of roughly equal size.
fn superclumps(cut_sorted: &[f64], rows: &[usize], limit: usize) -> (Vec<usize>, usize) {
    let n = cut_sorted.len();
    // Tagged rows: Ok(row) for ordinary points, Err(id) for mixed tie blocks.
    let mut tag: Vec<std::result::Result<usize, usize>> = rows.iter().map(|&r| Ok(r)).collect();
    let mut i = 0usize;
    let mut next_id = 0usize;
    while i < n {
        let run = cut_sorted[i..].iter().take_while(|&&v| v == cut_sorted[i]).count();
        if run > 1 && rows[i..i + run].iter().any(|&r| r != rows[i]) {
            tag[i..i + run].fill(Err(next_id));
            next_id += 1;
        }
        i += run;
    }

    let mut clump = vec![0usize; n];
    let mut current = 0usize;
    for j in 1..n {
        if tag[j] != tag[j - 1] {
            current += 1;
        }
        clump[j] = current;
    }
    let count = current + 1;
    if count <= limit {
        return (clump, count);
    }
    let as_values: Vec<f64> = clump.iter().map(|&c| c as f64).collect();
    equipartition(&as_values, limit)
}

/// Entropy (nats) of a set of counts with the given total.
fn entropy_of(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / t;
            -p * p.ln()
        })
        .sum()
}

/// Dynamic program over column boundaries placed between superclumps.
/// Returns the normalized score for every column count `2..=max_cols`.
fn optimize_cut_axis(rows: &[usize], n_rows: usize, col_of: &[usize], n_cols: usize, max_cols: usize) -> Vec<f64> {
    if n_cols == 1 {
        return vec![0.0; max_cols.saturating_sub(1)];
    }
    let n = rows.len();
    let p = n_cols;

    // prefix[t] = points in clumps 0..t; row_prefix[r][t] likewise per row.
    let mut prefix = vec![0usize; p + 1];
    let mut row_prefix = vec![vec![0usize; p + 1]; n_rows];
    for (&r, &c) in rows.iter().zip(col_of) {
        prefix[c + 1] += 1;
        row_prefix[r][c + 1] += 1;
    }
    for t in 1..=p {
        prefix[t] += prefix[t - 1];
        for rp in row_prefix.iter_mut() {
            rp[t] += rp[t - 1];
        }
    }

    let h_rows = entropy_of(row_prefix.iter().map(|rp| rp[p]), n);

    // Row entropy inside the column spanning clumps s..t (1-based prefix ends).
    let mut h_span = vec![vec![0.0; p + 1]; p + 1];
    for t in 3..=p {
        for s in 2..t {
            h_span[s][t] = entropy_of(row_prefix.iter().map(|rp| rp[t] - rp[s]), prefix[t] - prefix[s]);
        }
    }

    // best[t][l]: mutual information of the best l-column split of the first t clumps.
    let mut best = vec![vec![0.0; max_cols + 1]; p + 1];
    for t in 2..=p {
        let total = prefix[t];
        let mut f_max = f64::NEG_INFINITY;
        for s in 1..=t {
            let left = prefix[s];
            let right = total - left;
            let h_cols = entropy_of([left, right].into_iter(), total);
            let h_joint = entropy_of(row_prefix.iter().flat_map(|rp| [rp[s], rp[t] - rp[s]]), total);
            let f = h_cols - h_joint;
            if f > f_max {
                f_max = f;
                best[t][2] = h_rows + f;
            }
        }
    }
    for l in 3..=max_cols {
        for t in l..=p {
            let ct = prefix[t] as f64;
            let mut f_max = f64::NEG_INFINITY;
            for s in (l - 1)..=t {
                let cs = prefix[s] as f64;
                let f = (cs / ct) * (best[s][l - 1] - h_rows) - ((ct - cs) / ct) * h_span[s][t];
                if f > f_max {
                    f_max = f;
                    best[t][l] = h_rows + f;
                }
            }
        }
    }
    for l in (p + 1)..=max_cols {
        best[p][l] = best[p][p];
    }

    (2..=max_cols)
        .map(|l| best[p][l] / (l.min(n_rows) as f64).ln())
        .collect()
}
