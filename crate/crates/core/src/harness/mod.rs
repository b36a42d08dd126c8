//! Experiment configuration, pair construction, execution and reporting.

pub mod compare;
pub mod config;
pub mod pairs;
pub mod report;
pub mod runner;

pub use compare::{compare, Comparison, PairComparison, Tally};
pub use config::{Classifier, ExperimentConfig, Method, PairSpec, Sampler, SEED_ENV};
pub use pairs::{build_pairs, build_pairs_with};
pub use runner::{
    read_results_file, run_experiment, run_pair, run_repetition, sweep, train_pipeline, write_results_file, MeanStd,
    PairResult, SweepParam, SweepRow,
};
