//! Minority over-sampling: the transfer-oriented TOMO sampler, its 2-means
//! target clustering, and the SMOTE baseline.
//!
//! TOMO orders each minority sample's neighbors by a blend of two row-normalized
//! distances: the distance to the neighbor (source structure) and the
//! neighbor's distance to the centroid of the smaller 2-means cluster of the
//! target data (where the target's defective modules probably sit). Synthetic
//! rows are then generated from those ordered neighbor lists.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::DefectDataset;
use crate::error::{Error, Result};

/// Offset mixed into the TOMO seed for the synthesis stream, so clustering
/// and synthesis draw from different sequences.
const SYNTHESIS_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

const MAX_KMEANS_ITERATIONS: usize = 1000;

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Result of splitting the target into two clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSplit {
    /// Cluster id (0 or 1) for every target row.
    pub assignment: Vec<u8>,
    /// Which cluster id is the smaller, potential-minority one.
    pub minority_cluster: u8,
    /// Mean of the minority cluster's rows.
    pub minority_centroid: Vec<f64>,
}

impl ClusterSplit {
    pub fn minority_size(&self) -> usize {
        self.assignment.iter().filter(|&&a| a == self.minority_cluster).count()
    }
}

fn mean_of<'a>(rows: impl Iterator<Item = &'a Vec<f64>>, k: usize) -> Vec<f64> {
    let mut sum = vec![0.0; k];
    let mut n = 0usize;
    for r in rows {
        for (s, v) in sum.iter_mut().zip(r) {
            *s += v;
        }
        n += 1;
    }
    sum.iter().map(|s| s / n as f64).collect()
}

fn farthest_from(rows: &[Vec<f64>], from: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::NEG_INFINITY;
    for (i, r) in rows.iter().enumerate() {
        let d = euclidean(r, from);
        if d > best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Lloyd's 2-means with farthest-pair seeding. The smaller cluster is the
/// potential minority; equal sizes go to the centroid with smaller L2 norm.
pub fn two_means(rows: &[Vec<f64>], seed: u64) -> Result<ClusterSplit> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "2-means needs at least 2 rows, got {n}"
        )));
    }
    let k = rows[0].len();
    if rows.iter().all(|r| r == &rows[0]) {
        return Err(Error::Degenerate(
            "all target rows are identical; no 2-cluster split exists".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..n);
    let a = farthest_from(rows, &rows[start]);
    let b = farthest_from(rows, &rows[a]);
    let mut centroids = [rows[a].clone(), rows[b].clone()];

    let mut assignment = vec![u8::MAX; n];
    for _ in 0..MAX_KMEANS_ITERATIONS {
        let next: Vec<u8> = rows
            .iter()
            .map(|r| u8::from(euclidean(r, &centroids[1]) < euclidean(r, &centroids[0])))
            .collect();
        if next == assignment {
            break;
        }
        assignment = next;
        for c in 0..2u8 {
            let members = rows.iter().zip(&assignment).filter(|(_, &a)| a == c).map(|(r, _)| r);
            if assignment.contains(&c) {
                centroids[c as usize] = mean_of(members, k);
            } else {
                // Empty cluster: re-seed it with the point farthest from the other centroid.
                let other = &centroids[1 - c as usize];
                let far = farthest_from(rows, other);
                assignment[far] = c;
                centroids[c as usize] = rows[far].clone();
            }
        }
    }

    let size1 = assignment.iter().filter(|&&a| a == 1).count();
    let size0 = n - size1;
    let norm = |c: &[f64]| c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let minority_cluster = match size0.cmp(&size1) {
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Equal => u8::from(norm(&centroids[1]) < norm(&centroids[0])),
    };
    Ok(ClusterSplit {
        assignment,
        minority_cluster,
        minority_centroid: centroids[minority_cluster as usize].clone(),
    })
}

/// Neighbor index matrix for minority rows already sorted by distance to the
/// target minority centroid. Row `i` lists the other rows, nearest first,
/// under the blended distance `lambda * dSS + (1 - lambda) * dTS` where each
/// term is row-normalized to sum to one. Self-distances are excluded from
/// the source-source normalization.
pub fn neighbor_order(sorted_minority: &[Vec<f64>], centroid: &[f64], lambda: f64) -> Result<Vec<Vec<usize>>> {
    let n = sorted_minority.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "neighbor ordering needs at least 2 minority rows, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be in [0,1], got {lambda}"
        )));
    }

    let to_centroid: Vec<f64> = sorted_minority.iter().map(|r| euclidean(r, centroid)).collect();
    let ts_sum: f64 = to_centroid.iter().sum();
    let ts_norm: Vec<f64> = to_centroid
        .iter()
        .map(|d| if ts_sum > 0.0 { d / ts_sum } else { 0.0 })
        .collect();

    let mut order = Vec::with_capacity(n);
    for i in 0..n {
        let ss: Vec<f64> = (0..n)
            .map(|j| {
                if i == j {
                    0.0
                } else {
                    euclidean(&sorted_minority[i], &sorted_minority[j])
                }
            })
            .collect();
        let ss_sum: f64 = ss.iter().sum();
        let mut others: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let ss_n = if ss_sum > 0.0 { ss[j] / ss_sum } else { 0.0 };
                (j, lambda * ss_n + (1.0 - lambda) * ts_norm[j])
            })
            .collect();
        others.sort_by(|a, b| a.1.total_cmp(&b.1));
        order.push(others.into_iter().map(|(j, _)| j).collect());
    }
    Ok(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomoParams {
    /// Desired (original + synthetic minority) / majority size.
    pub ratio: f64,
    /// Weight of the source-source distance in the neighbor ordering.
    pub lambda: f64,
    pub seed: u64,
    /// Interpolate toward the neighbor (SMOTE sign) instead of
    /// extrapolating away from it.
    #[serde(default)]
    pub interpolate: bool,
}

impl Default for TomoParams {
    fn default() -> Self {
        Self {
            ratio: 1.0,
            lambda: 0.4,
            seed: 0,
            interpolate: false,
        }
    }
}

/// Where one synthetic row came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    /// Index of the base row in the sampler's input.
    pub base: usize,
    /// Index of the neighbor row in the sampler's input.
    pub neighbor: usize,
    pub r: f64,
}

/// Output of an over-sampler: synthetic minority rows plus their origins.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBatch {
    pub rows: Vec<Vec<f64>>,
    pub provenance: Vec<SyntheticOrigin>,
}

impl SyntheticBatch {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// The generation case chosen from `n0` and `n_P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `n0 < n_P`: the first `n0` rows, one synthetic each with their nearest neighbor.
    Partial,
    /// `n_P <= n0 <= n_P (n_P - 1)`: `floor(n0/n_P)` neighbors per row plus a remainder.
    Neighbors,
    /// `n0 > n_P (n_P - 1)`: full passes over every neighbor, then as above.
    Passes,
}

/// Synthetic row count: `floor(n_N * ratio) - n_P`, floored at zero.
pub fn synthetic_count(n_minority: usize, n_majority: usize, ratio: f64) -> usize {
    let wanted = (n_majority as f64 * ratio).floor();
    if wanted <= n_minority as f64 {
        0
    } else {
        wanted as usize - n_minority
    }
}

/// Generation plan as (sorted minority index, neighbor rank) pairs, in
/// generation order.
pub fn tomo_plan(n_minority: usize, n0: usize) -> (Branch, Vec<(usize, usize)>) {
    let np = n_minority;
    let mut plan = Vec::with_capacity(n0);
    if n0 < np {
        plan.extend((0..n0).map(|i| (i, 0)));
        return (Branch::Partial, plan);
    }
    let per_row = n0 / np;
    let leftover = n0 - per_row * np;
    if n0 <= np * (np - 1) {
        for i in 0..np {
            plan.extend((0..per_row).map(|j| (i, j)));
        }
        plan.extend((0..leftover).map(|i| (i, per_row)));
        return (Branch::Neighbors, plan);
    }
    let passes = per_row / (np - 1);
    for _ in 0..passes {
        for i in 0..np {
            plan.extend((0..np - 1).map(|j| (i, j)));
        }
    }
    let rest = per_row - passes * (np - 1);
    for i in 0..np {
        plan.extend((0..rest).map(|j| (i, j)));
    }
    plan.extend((0..leftover).map(|i| (i, rest)));
    (Branch::Passes, plan)
}

/// Uniform draw from the open interval (0, 1).
fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let r: f64 = rng.random();
        if r > 0.0 {
            return r;
        }
    }
}

/// TOMO over-sampling of the defective class (label 1) of `source`, guided
/// by the unlabeled `target` rows. Provenance indices refer to rows of `source`.
pub fn tomo(source: &DefectDataset, target: &[Vec<f64>], params: &TomoParams) -> Result<SyntheticBatch> {
    if params.ratio.is_nan() || params.ratio <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ratio must be > 0, got {}",
            params.ratio
        )));
    }
    if !(0.0..=1.0).contains(&params.lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be in [0,1], got {}",
            params.lambda
        )));
    }
    let (min_idx, min_rows) = source.rows_with_label(1);
    let n_majority = source.n_rows() - min_idx.len();
    if min_idx.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "TOMO needs at least 2 minority rows, got {}",
            min_idx.len()
        )));
    }
    if n_majority == 0 {
        return Err(Error::InsufficientData("TOMO needs majority-class rows".into()));
    }
    let n0 = synthetic_count(min_idx.len(), n_majority, params.ratio);
    if n0 == 0 {
        return Ok(SyntheticBatch::default());
    }

    let split = two_means(target, params.seed)?;
    let centroid = &split.minority_centroid;

    // Stable sort keeps dataset order among equidistant rows.
    let mut sorted: Vec<usize> = (0..min_rows.len()).collect();
    let dist: Vec<f64> = min_rows.iter().map(|r| euclidean(r, centroid)).collect();
    sorted.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
    let sorted_rows: Vec<Vec<f64>> = sorted.iter().map(|&i| min_rows[i].clone()).collect();

    let neighbors = neighbor_order(&sorted_rows, centroid, params.lambda)?;
    let (_, plan) = tomo_plan(sorted_rows.len(), n0);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ SYNTHESIS_STREAM);
    let sign = if params.interpolate { 1.0 } else { -1.0 };
    let mut batch = SyntheticBatch {
        rows: Vec::with_capacity(n0),
        provenance: Vec::with_capacity(n0),
    };
    for (i, rank) in plan {
        let nb = neighbors[i][rank];
        let base = &sorted_rows[i];
        let other = &sorted_rows[nb];
        let r = open_unit(&mut rng);
        batch
            .rows
            .push(base.iter().zip(other).map(|(b, o)| b + sign * r * (o - b)).collect());
        batch.provenance.push(SyntheticOrigin {
            base: min_idx[sorted[i]],
            neighbor: min_idx[sorted[nb]],
            r,
        });
    }
    Ok(batch)
}

/// Indices of the `k` nearest other rows to row `i` (ties by index).
fn nearest(rows: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(usize, f64)> = (0..rows.len())
        .filter(|&j| j != i)
        .map(|j| (j, euclidean(&rows[i], &rows[j])))
        .collect();
    d.sort_by(|a, b| a.1.total_cmp(&b.1));
    d.into_iter().take(k).map(|(j, _)| j).collect()
}

/// Classic SMOTE: `percent / 100` synthetic rows per minority row, each
/// interpolated toward one of its `k` nearest minority neighbors.
/// Provenance indices refer to rows of `minority`.
pub fn smote(minority: &[Vec<f64>], percent: usize, k: usize, seed: u64) -> Result<SyntheticBatch> {
    if percent == 0 || !percent.is_multiple_of(100) {
        return Err(Error::InvalidParameter(format!(
            "SMOTE percentage must be a positive multiple of 100, got {percent}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("SMOTE needs k >= 1".into()));
    }
    if minority.len() <= k {
        return Err(Error::InsufficientData(format!(
            "SMOTE with k={k} needs more than {k} minority rows, got {}",
            minority.len()
        )));
    }
    let per_row = percent / 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = SyntheticBatch::default();
    for (i, base) in minority.iter().enumerate() {
        let nn = nearest(minority, i, k);
        for _ in 0..per_row {
            let nb = nn[rng.random_range(0..nn.len())];
            let r: f64 = rng.random();
            batch
                .rows
                .push(base.iter().zip(&minority[nb]).map(|(b, o)| b + r * (o - b)).collect());
            batch.provenance.push(SyntheticOrigin {
                base: i,
                neighbor: nb,
                r,
            });
        }
    }
    Ok(batch)
}
