//! Per-pair experiment execution.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Classifier, ExperimentConfig, PairSpec, Sampler};
use super::pairs::build_pairs;
use crate::dataset::{self, summarize, DatasetStats, DefectDataset};
use crate::discretize;
use crate::error::{Error, Result};
use crate::eval::{confusion, metrics, EvalRecord};
use crate::fwtnb::{self, FwtnbModel};
use crate::mic::{mic_profile, MicProfile};
use crate::sampling::{smote, tomo, TomoParams};

/// Maximum redraws when a training subsample is missing a class.
pub const MAX_REDRAWS: u64 = 10;

/// Results of one source/target pair across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub source: String,
    pub target: String,
    pub records: Vec<EvalRecord>,
}

/// Mean and sample standard deviation of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3}±{:.3}", self.mean, self.std)
    }
}

/// Metrics of a result sample, by name.
pub const METRICS: [&str; 4] = ["pd", "pf", "g_measure", "mcc"];

pub fn metric_value(r: &EvalRecord, name: &str) -> f64 {
    match name {
        "pd" => r.pd,
        "pf" => r.pf,
        "g_measure" => r.g_measure,
        "mcc" => r.mcc,
        other => panic!("unknown metric {other}"),
    }
}

impl PairResult {
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.records.iter().map(|r| metric_value(r, metric)).collect()
    }

    pub fn summary(&self, metric: &str) -> MeanStd {
        MeanStd::of(&self.values(metric))
    }

    pub fn label(&self) -> String {
        format!("{}=>{}", self.source, self.target)
    }
}

/// Stable per-repetition seed from the master seed, pair names, repetition
/// and redraw attempt.
pub fn repetition_seed(master: u64, source: &str, target: &str, repetition: usize, attempt: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(source.as_bytes());
    h.update([0u8]);
    h.update(target.as_bytes());
    h.update([0u8]);
    h.update((repetition as u64).to_le_bytes());
    h.update(attempt.to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Random subsample of `fraction` of the rows, without replacement, in
/// original row order. A fraction of 1 keeps every row.
pub fn subsample(ds: &DefectDataset, fraction: f64, seed: u64) -> DefectDataset {
    let n = ds.n_rows();
    if fraction >= 1.0 {
        return ds.clone();
    }
    let take = ((n as f64 * fraction).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, take).into_vec();
    idx.sort_unstable();
    ds.subset(&idx)
}

/// A trained pipeline ready to predict the target.
#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    pub model: FwtnbModel,
    pub classifier: Classifier,
    pub synthetic_rows: usize,
}

impl TrainedPipeline {
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        rows.iter()
            .map(|r| {
                self.model
                    .predict_raw(r, self.classifier == Classifier::Fwtnb)
                    .map(|p| p.label)
            })
            .collect()
    }
}

/// Rebalances `train`, weights it against `target`, discretizes and fits.
/// Both datasets are expected to be cleaned and log-transformed.
pub fn train_pipeline(
    train: &DefectDataset,
    target: &[Vec<f64>],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TrainedPipeline> {
    let synthetic = match cfg.method.sampler {
        Sampler::Tomo => {
            let params = TomoParams {
                ratio: cfg.ratio,
                lambda: cfg.lambda,
                seed,
                interpolate: cfg.interpolate,
            };
            tomo(train, target, &params)?.rows
        }
        Sampler::Smote(pct) => {
            let (_, minority) = train.rows_with_label(1);
            smote(&minority, pct, cfg.smote_k, seed)?.rows
        }
        Sampler::None => Vec::new(),
    };
    let augmented = train.with_extra_rows(&synthetic, 1)?;

    let mic = match cfg.method.classifier {
        Classifier::Fwtnb => mic_profile(&augmented, &cfg.mine)?,
        Classifier::Tnb => MicProfile::uniform(augmented.n_features()),
    };
    let ranges = fwtnb::target_ranges(target)?;
    let weights = fwtnb::instance_weights(&augmented.rows, &ranges, &mic, cfg.similarity)?;

    let disc = discretize::fit_all(&augmented)?;
    let binned = discretize::apply(&disc, &augmented)?;
    let model = fwtnb::fit(&binned, &weights.weights, &mic, cfg.sigma, &disc)?;
    Ok(TrainedPipeline {
        model,
        classifier: cfg.method.classifier,
        synthetic_rows: synthetic.len(),
    })
}

/// Whether a training sample can feed the configured sampler.
fn trainable(train: &DefectDataset, cfg: &ExperimentConfig) -> bool {
    let pos = train.n_defective();
    let neg = train.n_rows() - pos;
    let min_pos = match cfg.method.sampler {
        Sampler::Tomo => 2,
        Sampler::Smote(_) => cfg.smote_k + 1,
        Sampler::None => 1,
    };
    pos >= min_pos && neg >= 1
}

/// One repetition: subsample (redrawing degenerate samples), train, predict.
pub fn run_repetition(
    source: &DefectDataset,
    target: &DefectDataset,
    cfg: &ExperimentConfig,
    repetition: usize,
) -> Result<(EvalRecord, TrainedPipeline)> {
    for attempt in 0..=MAX_REDRAWS {
        let seed = repetition_seed(cfg.seed, &source.name, &target.name, repetition, attempt);
        let train = subsample(source, cfg.train_fraction, seed);
        if !trainable(&train, cfg) {
            if cfg.train_fraction >= 1.0 {
                break;
            }
            log::debug!(
                "{}=>{} rep {repetition}: redrawing degenerate subsample",
                source.name,
                target.name
            );
            continue;
        }
        let pipeline = train_pipeline(&train, &target.rows, cfg, seed)?;
        let predicted = pipeline.predict(&target.rows)?;
        let record = metrics(&confusion(&target.labels, &predicted)?);
        return Ok((record, pipeline));
    }
    Err(Error::Degenerate(format!(
        "{}=>{}: no usable training sample for repetition {repetition} after {MAX_REDRAWS} redraws",
        source.name, target.name
    )))
}

/// Runs every repetition for one pair.
pub fn run_pair(source: &DefectDataset, target: &DefectDataset, cfg: &ExperimentConfig) -> Result<PairResult> {
    cfg.validate()?;
    let outcomes = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| run_repetition(source, target, cfg, r))
        .collect::<Result<Vec<_>>>()?;

    if let Some(dir) = &cfg.model_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(format!("{}__{}.json", source.name, target.name));
        std::fs::write(&path, outcomes[0].1.model.to_json()?).map_err(|e| Error::io(&path, e))?;
    }

    Ok(PairResult {
        source: source.name.clone(),
        target: target.name.clone(),
        records: outcomes.into_iter().map(|(r, _)| r).collect(),
    })
}

/// All `*.csv` files in a directory, sorted by file name.
pub fn dataset_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

/// Raw (pre-cleaning) statistics for every dataset in a directory.
pub fn directory_stats(dir: &Path, bug_column: &str) -> Result<Vec<DatasetStats>> {
    dataset_files(dir)?
        .iter()
        .map(|p| dataset::load_promise_csv(p, bug_column).map(|d| summarize(&d)))
        .collect()
}

/// Pairs named by the config, resolved against the dataset directory.
pub fn resolve_pairs(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    match &cfg.pairs {
        PairSpec::Explicit(p) => Ok(p.clone()),
        PairSpec::Auto(_) => build_pairs(&directory_stats(&cfg.dataset_dir, &cfg.bug_column)?),
    }
}

/// Loads, cleans and log-transforms each dataset named in `pairs` once.
pub fn load_pair_datasets(
    cfg: &ExperimentConfig,
    pairs: &[(String, String)],
) -> Result<BTreeMap<String, DefectDataset>> {
    let mut out = BTreeMap::new();
    for (s, t) in pairs {
        for name in [s, t] {
            if !out.contains_key(name) {
                let path = cfg.dataset_dir.join(format!("{name}.csv"));
                out.insert(name.clone(), dataset::load_prepared(&path, &cfg.bug_column)?);
            }
        }
    }
    Ok(out)
}

/// Runs the full experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PairResult>> {
    cfg.validate()?;
    let pairs = resolve_pairs(cfg)?;
    let data = load_pair_datasets(cfg, &pairs)?;
    pairs
        .iter()
        .map(|(s, t)| {
            log::info!("running {} on {s}=>{t}", cfg.method);
            run_pair(&data[s], &data[t], cfg)
        })
        .collect()
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Writes per-repetition results as CSV.
pub fn write_results<W: Write>(results: &[PairResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "target", "repetition", "pd", "pf", "g_measure", "mcc"])?;
    for pr in results {
        for (i, r) in pr.records.iter().enumerate() {
            w.write_record([
                pr.source.clone(),
                pr.target.clone(),
                i.to_string(),
                fmt_num(r.pd),
                fmt_num(r.pf),
                fmt_num(r.g_measure),
                fmt_num(r.mcc),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

pub fn write_results_file(results: &[PairResult], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_results(results, std::io::BufWriter::new(f))
}

#[derive(Deserialize)]
struct ResultRow {
    source: String,
    target: String,
    repetition: usize,
    pd: f64,
    pf: f64,
    g_measure: f64,
    mcc: f64,
}

/// Reads a results CSV back into per-pair results, in first-seen pair order.
pub fn read_results<R: Read>(input: R) -> Result<Vec<PairResult>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out: Vec<PairResult> = Vec::new();
    let mut reps: Vec<Vec<usize>> = Vec::new();
    for row in rdr.deserialize::<ResultRow>() {
        let row = row?;
        let pos = match out
            .iter()
            .position(|p| p.source == row.source && p.target == row.target)
        {
            Some(p) => p,
            None => {
                out.push(PairResult {
                    source: row.source.clone(),
                    target: row.target.clone(),
                    records: Vec::new(),
                });
                reps.push(Vec::new());
                out.len() - 1
            }
        };
        out[pos].records.push(EvalRecord {
            pd: row.pd,
            pf: row.pf,
            g_measure: row.g_measure,
            mcc: row.mcc,
        });
        reps[pos].push(row.repetition);
    }
    // Order records by repetition index regardless of file order.
    for (pr, r) in out.iter_mut().zip(reps) {
        let mut paired: Vec<(usize, EvalRecord)> = r.into_iter().zip(pr.records.drain(..)).collect();
        paired.sort_by_key(|(i, _)| *i);
        pr.records = paired.into_iter().map(|(_, rec)| rec).collect();
    }
    Ok(out)
}

pub fn read_results_file(path: &Path) -> Result<Vec<PairResult>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_results(f)
}

/// Which hyper-parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    Lambda,
    Sigma,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lambda" => Ok(SweepParam::Lambda),
            "sigma" => Ok(SweepParam::Sigma),
            other => Err(Error::Config(format!(
                "sweep parameter must be lambda or sigma, got `{other}`"
            ))),
        }
    }
}

/// One row of a sweep table: G-Measure and MCC across pairs at one value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub g_measure: MeanStd,
    pub mcc: MeanStd,
}

/// Runs every pair once on the full source at each parameter value.
pub fn sweep(
    param: SweepParam,
    values: &[f64],
    cfg: &ExperimentConfig,
    data: &BTreeMap<String, DefectDataset>,
    pairs: &[(String, String)],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.repetitions = 1;
            c.train_fraction = 1.0;
            c.model_dir = None;
            match param {
                SweepParam::Lambda => c.lambda = v,
                SweepParam::Sigma => c.sigma = v,
            }
            c.validate()?;
            let results = pairs
                .iter()
                .map(|(s, t)| run_pair(&data[s], &data[t], &c))
                .collect::<Result<Vec<_>>>()?;
            let g: Vec<f64> = results.iter().map(|r| r.records[0].g_measure).collect();
            let m: Vec<f64> = results.iter().map(|r| r.records[0].mcc).collect();
            Ok(SweepRow {
                value: v,
                g_measure: MeanStd::of(&g),
                mcc: MeanStd::of(&m),
            })
        })
        .collect()
}

pub fn write_sweep<W: Write>(param: SweepParam, rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let name = match param {
        SweepParam::Lambda => "lambda",
        SweepParam::Sigma => "sigma",
    };
    w.write_record([name, "g_mean", "g_std", "mcc_mean", "mcc_std"])?;
    for r in rows {
        w.write_record([
            fmt_num(r.value),
            fmt_num(r.g_measure.mean),
            fmt_num(r.g_measure.std),
            fmt_num(r.mcc.mean),
            fmt_num(r.mcc.std),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<sweep>", e))?;
    Ok(())
}
