use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::DEFAULT_BUG_COLUMN;
use crate::error::{Error, Result};
use crate::fwtnb::SimilarityMode;
use crate::mic::MineParams;

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV: &str = "CPDP_SEED";

/// How the source data is rebalanced before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sampler {
    Tomo,
    /// SMOTE at the given percentage of the minority size.
    Smote(usize),
    None,
}

/// Which naive Bayes variant is trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classifier {
    /// MIC-weighted similarity and MIC-exponentiated posterior.
    Fwtnb,
    /// Uniform feature importance.
    Tnb,
}

/// A sampler + classifier pipeline, spelled like `tomofwtnb`, `tomo+tnb`,
/// `smote200+tnb`, `fwtnb+smote100`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Method {
    pub sampler: Sampler,
    pub classifier: Classifier,
}

impl Method {
    pub const TOMOFWTNB: Method = Method {
        sampler: Sampler::Tomo,
        classifier: Classifier::Fwtnb,
    };
}

impl Default for Method {
    fn default() -> Self {
        Method::TOMOFWTNB
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "tomofwtnb" {
            return Ok(Method::TOMOFWTNB);
        }
        let mut sampler = None;
        let mut classifier = None;
        for tok in s.split('+').map(str::trim) {
            let (slot_taken, parsed_sampler, parsed_classifier) = match tok {
                "tomo" => (sampler.is_some(), Some(Sampler::Tomo), None),
                "fwtnb" => (classifier.is_some(), None, Some(Classifier::Fwtnb)),
                "tnb" => (classifier.is_some(), None, Some(Classifier::Tnb)),
                "smote" => (sampler.is_some(), Some(Sampler::Smote(100)), None),
                t if t.starts_with("smote") => {
                    let pct: usize = t["smote".len()..]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad SMOTE percentage in `{t}`")))?;
                    (sampler.is_some(), Some(Sampler::Smote(pct)), None)
                }
                other => return Err(Error::Config(format!("unknown method component `{other}`"))),
            };
            if slot_taken {
                return Err(Error::Config(format!(
                    "method `{s}` names two samplers or two classifiers"
                )));
            }
            sampler = sampler.or(parsed_sampler);
            classifier = classifier.or(parsed_classifier);
        }
        let classifier = classifier.ok_or_else(|| Error::Config(format!("method `{s}` names no classifier")))?;
        Ok(Method {
            sampler: sampler.unwrap_or(Sampler::None),
            classifier,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let clf = match self.classifier {
            Classifier::Fwtnb => "fwtnb",
            Classifier::Tnb => "tnb",
        };
        match self.sampler {
            Sampler::Tomo if self.classifier == Classifier::Fwtnb => f.write_str("tomofwtnb"),
            Sampler::Tomo => write!(f, "tomo+{clf}"),
            Sampler::Smote(n) => write!(f, "smote{n}+{clf}"),
            Sampler::None => f.write_str(clf),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// Either `"auto"` or an explicit list of `[source, target]` dataset names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairSpec {
    Auto(String),
    Explicit(Vec<(String, String)>),
}

impl Default for PairSpec {
    fn default() -> Self {
        PairSpec::Auto("auto".into())
    }
}

fn default_ratio() -> f64 {
    1.0
}
fn default_lambda() -> f64 {
    0.4
}
fn default_sigma() -> f64 {
    1.0
}
fn default_repetitions() -> usize {
    30
}
fn default_train_fraction() -> f64 {
    0.9
}
fn default_output() -> PathBuf {
    PathBuf::from("results.csv")
}
fn default_bug_column() -> String {
    DEFAULT_BUG_COLUMN.to_string()
}
fn default_smote_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset_dir: PathBuf,
    #[serde(default)]
    pub pairs: PairSpec,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_bug_column")]
    pub bug_column: String,
    /// Neighbor count for SMOTE.
    #[serde(default = "default_smote_k")]
    pub smote_k: usize,
    /// Use the conventional interpolating sign in TOMO synthesis.
    #[serde(default)]
    pub interpolate: bool,
    #[serde(default)]
    pub similarity: SimilarityMode,
    #[serde(default)]
    pub mine: MineParams,
    /// When set, the model of repetition 0 of each pair is saved here as JSON.
    #[serde(default)]
    pub model_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset_dir: dataset_dir.into(),
            pairs: PairSpec::default(),
            method: Method::default(),
            ratio: default_ratio(),
            lambda: default_lambda(),
            sigma: default_sigma(),
            repetitions: default_repetitions(),
            train_fraction: default_train_fraction(),
            seed: 0,
            output: default_output(),
            bug_column: default_bug_column(),
            smote_k: default_smote_k(),
            interpolate: false,
            similarity: SimilarityMode::default(),
            mine: MineParams::default(),
            model_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0,1], got {}",
                self.train_fraction
            )));
        }
        if self.repetitions < 1 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.ratio.is_nan() || self.ratio <= 0.0 {
            return Err(Error::Config(format!("ratio must be > 0, got {}", self.ratio)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must be in [0,1], got {}", self.lambda)));
        }
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::Config(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if let PairSpec::Auto(s) = &self.pairs {
            if s != "auto" {
                return Err(Error::Config(format!("pairs must be \"auto\" or a list, got {s:?}")));
            }
        }
        if let Sampler::Smote(n) = self.method.sampler {
            if n == 0 || !n.is_multiple_of(100) {
                return Err(Error::Config(format!(
                    "SMOTE percentage must be a positive multiple of 100, got {n}"
                )));
            }
        }
        self.mine.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, applying the seed override from the environment.
    /// Relative `dataset_dir`/`output`/`model_dir` paths resolve against the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            let resolve = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            resolve(&mut cfg.dataset_dir);
            resolve(&mut cfg.output);
            if let Some(m) = cfg.model_dir.as_mut() {
                resolve(m);
            }
        }
        if let Ok(s) = std::env::var(SEED_ENV) {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?;
        }
        Ok(cfg)
    }
}
