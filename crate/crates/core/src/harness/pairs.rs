use std::collections::HashSet;

use crate::dataset::DatasetStats;
use crate::error::{Error, Result};

pub const N_SOURCES: usize = 7;
pub const N_TARGETS: usize = 5;
pub const MIN_DATASETS: usize = 11;

/// Source/target pairs by defective rate: the 7 lowest-rate datasets are
/// sources, the 5 highest-rate are targets, and a dataset is never paired
/// with itself. Rate ties are broken by name.
pub fn build_pairs(stats: &[DatasetStats]) -> Result<Vec<(String, String)>> {
    if stats.len() < MIN_DATASETS {
        return Err(Error::InsufficientData(format!(
            "pair construction needs at least {MIN_DATASETS} datasets, got {}",
            stats.len()
        )));
    }
    build_pairs_with(stats, N_SOURCES, N_TARGETS)
}

pub fn build_pairs_with(stats: &[DatasetStats], n_sources: usize, n_targets: usize) -> Result<Vec<(String, String)>> {
    let mut names = HashSet::new();
    for s in stats {
        if !names.insert(s.name.as_str()) {
            return Err(Error::Format(format!("duplicate dataset name `{}`", s.name)));
        }
    }
    if stats.len() < n_sources.max(n_targets) {
        return Err(Error::InsufficientData(format!(
            "need {} datasets for {n_sources} sources and {n_targets} targets, got {}",
            n_sources.max(n_targets),
            stats.len()
        )));
    }

    let mut ascending: Vec<&DatasetStats> = stats.iter().collect();
    ascending.sort_by(|a, b| {
        a.defective_rate
            .total_cmp(&b.defective_rate)
            .then_with(|| a.name.cmp(&b.name))
    });
    let mut descending: Vec<&DatasetStats> = stats.iter().collect();
    descending.sort_by(|a, b| {
        b.defective_rate
            .total_cmp(&a.defective_rate)
            .then_with(|| a.name.cmp(&b.name))
    });

    let mut pairs = Vec::new();
    for s in ascending.iter().take(n_sources) {
        for t in descending.iter().take(n_targets) {
            if s.name != t.name {
                pairs.push((s.name.clone(), t.name.clone()));
            }
        }
    }
    Ok(pairs)
}
