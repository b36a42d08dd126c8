//! Plain-text summaries of results and models.

use std::fmt::Write as _;

use super::runner::{MeanStd, PairResult, METRICS};
use crate::fwtnb::FwtnbModel;

/// Mean±std of each metric per pair, with an across-pair average row.
pub fn results_table(results: &[PairResult]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<32}", "pair");
    for m in METRICS {
        let _ = write!(s, " {m:>13}");
    }
    let _ = writeln!(s);
    for pr in results {
        let _ = write!(s, "{:<32}", pr.label());
        for m in METRICS {
            let _ = write!(s, " {:>13}", pr.summary(m).to_string());
        }
        let _ = writeln!(s);
    }
    if !results.is_empty() {
        let _ = write!(s, "{:<32}", "average");
        for m in METRICS {
            let means: Vec<f64> = results.iter().map(|r| r.summary(m).mean).collect();
            let _ = write!(s, " {:>13}", MeanStd::of(&means).to_string());
        }
        let _ = writeln!(s);
    }
    s
}

pub fn model_summary(model: &FwtnbModel) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "priors: clean {:.4}, defective {:.4}",
        model.priors[0], model.priors[1]
    );
    let _ = writeln!(s, "sigma: {}  MIC total: {:.4}", model.sigma, model.mic.mic_sum);
    let _ = writeln!(s, "{:>7} {:>8} {:>9} {:>5}", "feature", "MIC", "exponent", "bins");
    for (j, e) in model.exponents().iter().enumerate() {
        let _ = writeln!(
            s,
            "{j:>7} {:>8.4} {e:>9.4} {:>5}",
            model.mic.mic[j],
            model.discretizer.bin_count(j)
        );
    }
    s
}
