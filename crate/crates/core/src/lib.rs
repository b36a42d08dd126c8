//! Cross-project defect prediction with transfer-oriented minority
//! over-sampling (TOMO) and feature-weighted transfer naive Bayes (FWTNB).

pub mod dataset;
pub mod discretize;
pub mod error;
pub mod eval;
pub mod fwtnb;
pub mod harness;
pub mod mic;
pub mod sampling;

pub use dataset::{DatasetStats, DefectDataset};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, EvalRecord};
pub use fwtnb::{FwtnbModel, Prediction, SimilarityMode};
pub use mic::{MicProfile, MineParams};
pub use sampling::{SyntheticBatch, TomoParams};
