//! Feature-weighted transfer naive Bayes.
//!
//! Source rows are weighted by how well they fall inside the target's
//! per-feature value ranges, with each feature's vote scaled by its MIC
//! relevance, then mapped through the data-gravitation curve
//! `w = m / (S - m + 1)^2` where `S` is the MIC total. Training is
//! Laplace-smoothed weighted naive Bayes over discretized features.
//! Prediction raises each class-conditional probability to the power
//! `exp(MIC_j / (sigma^2 * S))`; with every exponent equal to one the rule
//! is plain transfer naive Bayes.

use serde::{Deserialize, Serialize};

use crate::discretize::{DiscretizationModel, DiscretizedDataset};
use crate::error::{Error, Result};
use crate::mic::MicProfile;

/// Current version of the JSON model document.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Per-feature [min, max] of the target data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRanges {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl TargetRanges {
    /// Ranges that contain every value.
    pub fn unbounded(k: usize) -> Self {
        Self {
            min: vec![f64::NEG_INFINITY; k],
            max: vec![f64::INFINITY; k],
        }
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    pub fn contains(&self, j: usize, v: f64) -> bool {
        self.min[j] <= v && v <= self.max[j]
    }
}

pub fn target_ranges(target: &[Vec<f64>]) -> Result<TargetRanges> {
    let first = target
        .first()
        .ok_or_else(|| Error::EmptyInput("target has no rows".into()))?;
    let mut min = first.clone();
    let mut max = first.clone();
    for row in &target[1..] {
        if row.len() != min.len() {
            return Err(Error::DimensionMismatch {
                what: "target row width",
                expected: min.len(),
                got: row.len(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(TargetRanges { min, max })
}

/// How match scores enter the gravitation formula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityMode {
    /// `m_i = sum_j h_ij MIC_j`, weighted against the raw MIC total.
    #[default]
    Unnormalized,
    /// `s_i = m_i / S` in [0,1], giving `w_i = s_i / (2 - s_i)^2`.
    Normalized,
}

/// Match scores and the resulting instance weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceWeights {
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
}

/// MIC-weighted count of features where a source row falls inside the
/// target range.
pub fn similarity(source: &[Vec<f64>], ranges: &TargetRanges, mic: &MicProfile) -> Result<Vec<f64>> {
    if ranges.len() != mic.len() {
        return Err(Error::DimensionMismatch {
            what: "MIC profile length",
            expected: ranges.len(),
            got: mic.len(),
        });
    }
    source
        .iter()
        .map(|row| {
            if row.len() != ranges.len() {
                return Err(Error::DimensionMismatch {
                    what: "source row width",
                    expected: ranges.len(),
                    got: row.len(),
                });
            }
            Ok(row
                .iter()
                .enumerate()
                .filter(|&(j, &v)| ranges.contains(j, v))
                .map(|(j, _)| mic.mic[j])
                .sum())
        })
        .collect()
}

/// Data-gravitation weights `s / (total - s + 1)^2`.
pub fn gravitation_weights(scores: &[f64], total: f64) -> Vec<f64> {
    scores
        .iter()
        .map(|&s| {
            let d = total - s + 1.0;
            s / (d * d)
        })
        .collect()
}

pub fn instance_weights(
    source: &[Vec<f64>],
    ranges: &TargetRanges,
    mic: &MicProfile,
    mode: SimilarityMode,
) -> Result<InstanceWeights> {
    let matches = similarity(source, ranges, mic)?;
    if mic.mic_sum <= 0.0 {
        log::warn!("MIC total is zero; every instance weight is zero and training falls back to Laplace counts");
    }
    let (scores, weights) = match mode {
        SimilarityMode::Unnormalized => {
            let w = gravitation_weights(&matches, mic.mic_sum);
            (matches, w)
        }
        SimilarityMode::Normalized => {
            let s: Vec<f64> = matches
                .iter()
                .map(|m| if mic.mic_sum > 0.0 { m / mic.mic_sum } else { 0.0 })
                .collect();
            let w = gravitation_weights(&s, 1.0);
            (s, w)
        }
    };
    Ok(InstanceWeights { scores, weights })
}

/// A trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwtnbModel {
    /// `priors[c]` for class 0 (clean) and 1 (defective).
    pub priors: [f64; 2],
    /// `conditionals[j][c][v]` = P(feature j in bin v | class c).
    pub conditionals: Vec<[Vec<f64>; 2]>,
    pub mic: MicProfile,
    pub sigma: f64,
    pub discretizer: DiscretizationModel,
}

/// Predicted label and class posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub posterior: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    model: FwtnbModel,
}

/// Weighted, Laplace-smoothed naive Bayes training.
pub fn fit(
    data: &DiscretizedDataset,
    weights: &[f64],
    mic: &MicProfile,
    sigma: f64,
    discretizer: &DiscretizationModel,
) -> Result<FwtnbModel> {
    let n = data.rows.len();
    if weights.len() != n || data.labels.len() != n {
        return Err(Error::DimensionMismatch {
            what: "instance weight count",
            expected: n,
            got: weights.len(),
        });
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "instance weight {w} is not a finite non-negative number"
        )));
    }
    let k = discretizer.n_features();
    if mic.len() != k {
        return Err(Error::DimensionMismatch {
            what: "MIC profile length",
            expected: k,
            got: mic.len(),
        });
    }
    let bins = discretizer.bin_counts();

    let mut class_weight = [0.0f64; 2];
    let mut counts: Vec<[Vec<f64>; 2]> = bins.iter().map(|&b| [vec![0.0; b], vec![0.0; b]]).collect();
    for ((row, &label), &w) in data.rows.iter().zip(&data.labels).zip(weights) {
        if row.len() != k {
            return Err(Error::DimensionMismatch {
                what: "discretized row width",
                expected: k,
                got: row.len(),
            });
        }
        let c = usize::from(label);
        class_weight[c] += w;
        for (j, &v) in row.iter().enumerate() {
            if v >= bins[j] {
                return Err(Error::InvalidParameter(format!(
                    "bin {v} out of range for feature {j} with {} bins",
                    bins[j]
                )));
            }
            counts[j][c][v] += w;
        }
    }

    let total: f64 = class_weight.iter().sum();
    let priors = [
        (class_weight[0] + 1.0) / (total + 2.0),
        (class_weight[1] + 1.0) / (total + 2.0),
    ];
    let conditionals = counts
        .into_iter()
        .zip(&bins)
        .map(|(per_class, &nj)| {
            let [c0, c1] = per_class;
            let smooth = |cnt: Vec<f64>, cw: f64| -> Vec<f64> {
                cnt.into_iter().map(|x| (x + 1.0) / (cw + nj as f64)).collect()
            };
            [smooth(c0, class_weight[0]), smooth(c1, class_weight[1])]
        })
        .collect();

    Ok(FwtnbModel {
        priors,
        conditionals,
        mic: mic.clone(),
        sigma,
        discretizer: discretizer.clone(),
    })
}

impl FwtnbModel {
    pub fn n_features(&self) -> usize {
        self.conditionals.len()
    }

    /// Per-feature exponents `exp(MIC_j / (sigma^2 * S))`; all one when `S = 0`.
    pub fn exponents(&self) -> Vec<f64> {
        exponents(&self.mic, self.sigma)
    }

    /// Feature-weighted prediction for one discretized row.
    pub fn predict(&self, row: &[usize]) -> Result<Prediction> {
        self.predict_with(row, &self.exponents())
    }

    /// Uniform-importance prediction (every exponent one).
    pub fn tnb_predict(&self, row: &[usize]) -> Result<Prediction> {
        self.predict_with(row, &vec![1.0; self.n_features()])
    }

    /// Prediction under explicit per-feature exponents.
    pub fn predict_with(&self, row: &[usize], exponents: &[f64]) -> Result<Prediction> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                what: "discretized row width",
                expected: self.n_features(),
                got: row.len(),
            });
        }
        let mut score = [self.priors[0].ln(), self.priors[1].ln()];
        for (j, (&v, &e)) in row.iter().zip(exponents).enumerate() {
            let table = &self.conditionals[j];
            if v >= table[0].len() {
                return Err(Error::InvalidParameter(format!(
                    "bin {v} out of range for feature {j} with {} bins",
                    table[0].len()
                )));
            }
            for c in 0..2 {
                score[c] += e * table[c][v].ln();
            }
        }
        let top = score[0].max(score[1]);
        let unnorm = [(score[0] - top).exp(), (score[1] - top).exp()];
        let z = unnorm[0] + unnorm[1];
        Ok(Prediction {
            label: u8::from(score[1] > score[0]),
            posterior: [unnorm[0] / z, unnorm[1] / z],
        })
    }

    /// Discretizes a continuous row with the model's cut points, then predicts.
    pub fn predict_raw(&self, row: &[f64], feature_weighted: bool) -> Result<Prediction> {
        let bins = self.discretizer.apply_row(row)?;
        if feature_weighted {
            self.predict(&bins)
        } else {
            self.tnb_predict(&bins)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: "fwtnb-model".into(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format != "fwtnb-model" || doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model document {} v{} (expected fwtnb-model v{MODEL_FORMAT_VERSION})",
                doc.format, doc.version
            )));
        }
        Ok(doc.model)
    }
}

pub fn exponents(mic: &MicProfile, sigma: f64) -> Vec<f64> {
    if mic.mic_sum <= 0.0 {
        return vec![1.0; mic.len()];
    }
    let scale = sigma * sigma * mic.mic_sum;
    mic.mic.iter().map(|m| (m / scale).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mic(v: &[f64]) -> MicProfile {
        MicProfile::from_scores(v.to_vec())
    }

    #[test]
    fn ranges() {
        let r = target_ranges(&[vec![1.0, 7.0], vec![5.0, 7.0], vec![3.0, 7.0]]).unwrap();
        assert_eq!(r.min, vec![1.0, 7.0]);
        assert_eq!(r.max, vec![5.0, 7.0]);
        let one = target_ranges(&[vec![2.0, 3.0]]).unwrap();
        assert_eq!(one.min, one.max);
        assert!(target_ranges(&[]).is_err());
    }

    #[test]
    fn similarity_cases() {
        let r = TargetRanges {
            min: vec![0.0, 0.0, 0.0],
            max: vec![1.0, 1.0, 1.0],
        };
        let m = mic(&[0.2, 0.5, 0.1]);
        let s = similarity(
            &[vec![0.5, 1.0, 0.0], vec![2.0, -1.0, 9.0], vec![0.5, 5.0, 0.5]],
            &r,
            &m,
        )
        .unwrap();
        assert!((s[0] - 0.8).abs() < 1e-12);
        assert_eq!(s[1], 0.0);
        assert!((s[2] - 0.3).abs() < 1e-12);
        let u = similarity(&[vec![0.5, 5.0, 0.5]], &r, &MicProfile::uniform(3)).unwrap();
        assert_eq!(u[0], 2.0);
        assert!(similarity(&[vec![0.5]], &r, &m).is_err());
    }

    #[test]
    fn gravitation_values() {
        let w = gravitation_weights(&[5.0, 0.0, 3.0], 5.0);
        assert_eq!(w[0], 5.0);
        assert_eq!(w[1], 0.0);
        assert!((w[2] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_mode() {
        let r = TargetRanges::unbounded(2);
        let iw = instance_weights(&[vec![0.0, 0.0]], &r, &mic(&[0.5, 1.5]), SimilarityMode::Normalized).unwrap();
        assert_eq!(iw.scores, vec![1.0]);
        assert_eq!(iw.weights, vec![1.0]);
    }

    fn toy() -> (DiscretizedDataset, DiscretizationModel) {
        let disc = DiscretizationModel {
            cuts: vec![vec![0.5], vec![0.5, 1.5]],
        };
        let data = DiscretizedDataset {
            rows: vec![
                vec![0, 0],
                vec![0, 1],
                vec![1, 2],
                vec![1, 2],
                vec![0, 0],
                vec![0, 0],
                vec![1, 1],
                vec![0, 0],
                vec![0, 1],
                vec![1, 2],
            ],
            labels: vec![0, 0, 1, 1, 0, 0, 1, 0, 0, 1],
        };
        (data, disc)
    }

    #[test]
    fn uniform_weight_prior() {
        let (data, disc) = toy();
        let m = fit(&data, &[1.0; 10], &MicProfile::uniform(2), 1.0, &disc).unwrap();
        assert!((m.priors[1] - 5.0 / 12.0).abs() < 1e-12);
        assert!((m.priors[0] + m.priors[1] - 1.0).abs() < 1e-12);
        for per_class in &m.conditionals {
            for c in per_class {
                assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_class_gets_laplace_floor() {
        let (data, disc) = toy();
        let w: Vec<f64> = data.labels.iter().map(|&l| if l == 1 { 0.0 } else { 1.0 }).collect();
        let m = fit(&data, &w, &MicProfile::uniform(2), 1.0, &disc).unwrap();
        assert_eq!(m.conditionals[1][1], vec![1.0 / 3.0; 3]);
        assert_eq!(m.conditionals[0][1], vec![0.5; 2]);
    }

    #[test]
    fn prior_dominance_and_ties() {
        let disc = DiscretizationModel { cuts: vec![vec![]] };
        let mut m = FwtnbModel {
            priors: [0.1, 0.9],
            conditionals: vec![[vec![1.0], vec![1.0]]],
            mic: MicProfile::uniform(1),
            sigma: 1.0,
            discretizer: disc,
        };
        assert_eq!(m.predict(&[0]).unwrap().label, 1);
        m.priors = [0.5, 0.5];
        let p = m.predict(&[0]).unwrap();
        assert_eq!(p.label, 0);
        assert!((p.posterior[0] - 0.5).abs() < 1e-12);
        assert!(m.predict(&[1]).is_err());
    }

    #[test]
    fn exponent_forms() {
        let e = exponents(&MicProfile::uniform(4), 1.0);
        assert!(e.iter().all(|&x| (x - (0.25f64).exp()).abs() < 1e-12));
        let e = exponents(&mic(&[0.3, 0.7]), 1e6);
        assert!(e.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert_eq!(exponents(&mic(&[0.0, 0.0]), 1.0), vec![1.0, 1.0]);
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let (data, disc) = toy();
        let m = fit(&data, &[1.0; 10], &mic(&[0.4, 0.9]), 1.0, &disc).unwrap();
        let text = m.to_json().unwrap();
        assert_eq!(FwtnbModel::from_json(&text).unwrap(), m);
        let bumped = text.replace("\"version\": 1", "\"version\": 99");
        assert!(FwtnbModel::from_json(&bumped).is_err());
    }

    #[test]
    fn fit_errors() {
        let (data, disc) = toy();
        assert!(fit(&data, &[1.0; 3], &MicProfile::uniform(2), 1.0, &disc).is_err());
        assert!(fit(&data, &[1.0; 10], &MicProfile::uniform(2), 0.0, &disc).is_err());
        assert!(fit(&data, &[-1.0; 10], &MicProfile::uniform(2), 1.0, &disc).is_err());
    }
}
