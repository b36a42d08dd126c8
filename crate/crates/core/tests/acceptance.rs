//! Acceptance criteria, one line each. Blocking criteria fail the run;
//! the directional check only warns.
//!
//! Real datasets are read from `CPDP_DATA_DIR` when set. Without it the
//! data-dependent checks report NOT RUN, unless `CPDP_REQUIRE_DATA=1`.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cpdp_core::dataset::{load_prepared, DatasetStats, DefectDataset};
use cpdp_core::discretize::{self, fit_mdlp};
use cpdp_core::eval::{cliffs_delta, metrics, wilcoxon_ranksum, ConfusionMatrix, Effect};
use cpdp_core::fwtnb::{self, SimilarityMode, TargetRanges};
use cpdp_core::harness::runner::{directory_stats, run_pair, write_results};
use cpdp_core::harness::{build_pairs, run_experiment, ExperimentConfig, Method, PairSpec};
use cpdp_core::mic::{mic_profile, mic_score, MicProfile, MineParams};
use cpdp_core::sampling::{synthetic_count, tomo, tomo_plan, Branch, TomoParams};

enum Outcome {
    Pass(String),
    Fail(String),
    Warn(String),
    NotRun(String),
}

use Outcome::*;

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("CPDP_DATA_DIR").map(PathBuf::from)
}

fn data_required() -> bool {
    std::env::var("CPDP_REQUIRE_DATA").is_ok_and(|v| v == "1")
}

fn missing_data(what: &str) -> Outcome {
    let msg = format!("{what}: set CPDP_DATA_DIR to the PROMISE CSV directory");
    if data_required() {
        Fail(msg)
    } else {
        NotRun(msg)
    }
}

fn table1_stats() -> Vec<DatasetStats> {
    common::TABLE1
        .iter()
        .map(|&(name, n, d)| DatasetStats {
            name: name.into(),
            n_metrics: 20,
            n_instances: n,
            n_defective: d,
            defective_rate: d as f64 / n as f64,
        })
        .collect()
}

fn check_table1(stats: &[DatasetStats], elapsed: Duration) -> std::result::Result<(), String> {
    for &(name, n, d) in &common::TABLE1 {
        let s = stats
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| format!("{name} missing"))?;
        let expected_rate = format!("{:.4}", d as f64 / n as f64);
        if (s.n_instances, s.n_defective) != (n, d) || format!("{:.4}", s.defective_rate) != expected_rate {
            return Err(format!(
                "{name}: got ({}, {}, {:.4}), expected ({n}, {d}, {expected_rate})",
                s.n_instances, s.n_defective, s.defective_rate
            ));
        }
    }
    if elapsed >= Duration::from_secs(5) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(())
}

fn c1_table1() -> Outcome {
    // The statistics path on generated files of the same shapes.
    let dir = tempfile::tempdir().unwrap();
    common::write_table1_fixture(dir.path(), 1);
    let start = Instant::now();
    let fixture = directory_stats(dir.path(), "bug").map_err(|e| e.to_string());
    let fixture = fixture.and_then(|s| check_table1(&s, start.elapsed()));
    if let Err(e) = fixture {
        return Fail(format!("fixture: {e}"));
    }
    let Some(real) = data_dir() else {
        return missing_data("fixture counts and timing ok; real datasets absent");
    };
    let start = Instant::now();
    match directory_stats(&real, "bug") {
        Ok(stats) => match check_table1(&stats, start.elapsed()) {
            Ok(()) => Pass(format!("11 datasets match in {:?}", start.elapsed())),
            Err(e) => Fail(e),
        },
        Err(e) => Fail(e.to_string()),
    }
}

fn c2_pairs() -> Outcome {
    let pairs = match build_pairs(&table1_stats()) {
        Ok(p) => p,
        Err(e) => return Fail(e.to_string()),
    };
    let sources = [
        "camel-1.0",
        "ivy-1.4",
        "tomcat",
        "prop-6",
        "poi-2.0",
        "xalan-2.4",
        "xerces-1.2",
    ];
    let targets = ["jedit-4.0", "log4j-1.0", "ant-1.7", "xerces-1.2", "velocity-1.6"];
    let expected: BTreeSet<(String, String)> = targets
        .iter()
        .flat_map(|t| sources.iter().map(move |s| (s.to_string(), t.to_string())))
        .filter(|(s, t)| s != t)
        .collect();
    let got: BTreeSet<(String, String)> = pairs.iter().cloned().collect();
    if pairs.len() == 34 && got == expected {
        Pass("34 pairs, xerces-1.2=>xerces-1.2 excluded".into())
    } else {
        Fail(format!("{} pairs, set equal: {}", pairs.len(), got == expected))
    }
}

fn random_source(rng: &mut ChaCha8Rng, np: usize, nn: usize, k: usize) -> DefectDataset {
    let rows: Vec<Vec<f64>> = (0..np + nn)
        .map(|i| {
            let off = if i < np { 1.5 } else { 0.0 };
            (0..k).map(|_| off + rng.random_range(0.0..3.0)).collect()
        })
        .collect();
    let labels = (0..np + nn).map(|i| u8::from(i < np)).collect();
    DefectDataset::from_rows("s", rows, labels).unwrap()
}

fn random_target(rng: &mut ChaCha8Rng, k: usize) -> Vec<Vec<f64>> {
    (0..30)
        .map(|i| {
            (0..k)
                .map(|_| f64::from(u8::from(i % 4 == 0)) * 2.0 + rng.random_range(0.0..1.0))
                .collect()
        })
        .collect()
}

fn c3_tomo_counts() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let np = rng.random_range(2..40);
        let nn = rng.random_range(1..200);
        let ratio = if case % 4 == 0 {
            1.0
        } else {
            rng.random_range(0.05..3.0)
        };
        let src = random_source(&mut rng, np, nn, 3);
        let target = random_target(&mut rng, 3);
        let params = TomoParams {
            ratio,
            seed: case,
            ..TomoParams::default()
        };
        let batch = match tomo(&src, &target, &params) {
            Ok(b) => b,
            Err(e) => return Fail(format!("case {case}: {e}")),
        };
        let wanted = ((nn as f64 * ratio).floor() as i64 - np as i64).max(0) as usize;
        if batch.len() != wanted || synthetic_count(np, nn, ratio) != wanted {
            return Fail(format!(
                "case {case}: n_P={np} n_N={nn} ratio={ratio}: {} != {wanted}",
                batch.len()
            ));
        }
        if ratio == 1.0 && nn >= np && np + batch.len() != nn {
            return Fail(format!("case {case}: augmented minority {} != {nn}", np + batch.len()));
        }
    }
    let t = start.elapsed();
    if t < Duration::from_secs(30) {
        Pass(format!("1000 cases in {t:.2?}"))
    } else {
        Fail(format!("1000 cases took {t:?}"))
    }
}

fn c4_collinearity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for (np, n0, branch) in [
        (5, 3, Branch::Partial),
        (20, 80, Branch::Neighbors),
        (3, 27, Branch::Passes),
    ] {
        if tomo_plan(np, n0).0 != branch {
            return Fail(format!("n_P={np} n0={n0} planned as {:?}", tomo_plan(np, n0).0));
        }
        let src = random_source(&mut rng, np, np + n0, 4);
        let target = random_target(&mut rng, 4);
        for interpolate in [false, true] {
            let params = TomoParams {
                ratio: 1.0,
                interpolate,
                seed: 9,
                ..TomoParams::default()
            };
            let batch = tomo(&src, &target, &params).unwrap();
            if batch.len() != n0 {
                return Fail(format!("{branch:?}: {} rows, expected {n0}", batch.len()));
            }
            let sign = if interpolate { 1.0 } else { -1.0 };
            for (row, o) in batch.rows.iter().zip(&batch.provenance) {
                let (b, n) = (&src.rows[o.base], &src.rows[o.neighbor]);
                for j in 0..row.len() {
                    worst = worst.max((row[j] - (b[j] + sign * o.r * (n[j] - b[j]))).abs());
                }
            }
        }
    }
    if worst <= 1e-9 {
        Pass(format!("all three branches, max error {worst:e}"))
    } else {
        Fail(format!("max reconstruction error {worst:e}"))
    }
}

fn direct_metrics(tp: f64, fn_: f64, fp: f64, tn: f64) -> [f64; 4] {
    let pd = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let pf = if fp + tn > 0.0 { fp / (fp + tn) } else { 0.0 };
    let g = if pd + 1.0 - pf > 0.0 {
        2.0 * pd * (1.0 - pf) / (pd + 1.0 - pf)
    } else {
        0.0
    };
    let mcc = if tp == 0.0 && fp == 0.0 {
        0.0
    } else {
        let d = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        if d > 0.0 {
            (tp * tn - fp * fn_) / d
        } else {
            0.0
        }
    };
    [pd, pf, g, mcc]
}

fn c5_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut zero_rule = 0;
    for i in 0..10_000 {
        let mut c = [0u64; 4];
        for v in c.iter_mut() {
            *v = rng.random_range(0..50);
        }
        if i % 10 == 0 {
            c[0] = 0;
            c[2] = 0;
            c[1] = c[1].max(1);
        }
        let [tp, fn_, fp, tn] = c;
        let r = metrics(&ConfusionMatrix::new(tp, fn_, fp, tn));
        let d = direct_metrics(tp as f64, fn_ as f64, fp as f64, tn as f64);
        let got = [r.pd, r.pf, r.g_measure, r.mcc];
        if got.iter().zip(&d).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Fail(format!("{c:?}: {got:?} vs {d:?}"));
        }
        if tp == 0 && fp == 0 {
            if r.mcc != 0.0 {
                return Fail(format!("{c:?}: MCC {} with no positive predictions", r.mcc));
            }
            zero_rule += 1;
        }
    }
    Pass(format!("10000 matrices, {zero_rule} with tp=fp=0"))
}

/// p by enumerating every way to draw `m` ranks from 1..=total.
fn enumerated_p(a_sum: usize, m: usize, total: usize) -> f64 {
    let mut sums = Vec::new();
    let mut stack = vec![(0usize, 0usize, 1usize)];
    while let Some((chosen, sum, next)) = stack.pop() {
        if chosen == m {
            sums.push(sum);
            continue;
        }
        for r in next..=total {
            if total - r + 1 >= m - chosen {
                stack.push((chosen + 1, sum + r, r + 1));
            }
        }
    }
    let all = sums.len() as f64;
    let lower = sums.iter().filter(|&&s| s <= a_sum).count() as f64;
    let upper = sums.iter().filter(|&&s| s >= a_sum).count() as f64;
    (2.0 * lower.min(upper) / all).min(1.0)
}

fn c6_wilcoxon() -> Outcome {
    let p = wilcoxon_ranksum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    if p != 0.1 {
        return Fail(format!("[1,2,3] vs [4,5,6] gave {p}"));
    }
    let mut checked = 0;
    for m in 1..=6usize {
        for n in 1..=6usize {
            let total = m + n;
            for mask in 0u32..(1 << total) {
                if mask.count_ones() as usize != m {
                    continue;
                }
                let a: Vec<f64> = (0..total)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| i as f64 + 1.0)
                    .collect();
                let b: Vec<f64> = (0..total)
                    .filter(|i| mask >> i & 1 == 0)
                    .map(|i| i as f64 + 1.0)
                    .collect();
                let sum = a.iter().sum::<f64>() as usize;
                let expected = enumerated_p(sum, m, total);
                let got = wilcoxon_ranksum(&a, &b).unwrap();
                if (got - expected).abs() > 1e-12 {
                    return Fail(format!("{a:?} vs {b:?}: {got} != {expected}"));
                }
                checked += 1;
            }
        }
    }
    Pass(format!("{checked} sample pairs equal full enumeration"))
}

fn c7_cliff() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let na = rng.random_range(1..40);
        let nb = rng.random_range(1..40);
        let a: Vec<f64> = (0..na).map(|_| f64::from(rng.random_range(0..20u8))).collect();
        let b: Vec<f64> = (0..nb).map(|_| f64::from(rng.random_range(0..20u8))).collect();
        let mut dom = 0i64;
        for x in &a {
            for y in &b {
                dom += i64::from(x > y) - i64::from(x < y);
            }
        }
        let expected = dom as f64 / (na * nb) as f64;
        let (d, _) = cliffs_delta(&a, &b).unwrap();
        if d != expected {
            return Fail(format!("{d} != {expected}"));
        }
    }
    let boundaries = [
        (0.146_999, Effect::Negligible),
        (0.147, Effect::Small),
        (0.329_999, Effect::Small),
        (0.33, Effect::Medium),
        (0.473_999, Effect::Medium),
        (0.474, Effect::Large),
        (-0.474, Effect::Large),
        (-0.147, Effect::Small),
    ];
    for (d, e) in boundaries {
        if Effect::from_delta(d) != e {
            return Fail(format!("delta {d} labelled {}", Effect::from_delta(d)));
        }
    }
    Pass("1000 brute-force pairs exact, Table 3 boundaries correct".into())
}

fn c8_mic() -> Outcome {
    let p = MineParams::default();
    let x: Vec<f64> = (1..=100).map(f64::from).collect();
    let lin = mic_score(&x, &x, &p).unwrap();
    let mut g = common::Lcg(42);
    let u: Vec<f64> = (0..1000).map(|_| g.next()).collect();
    let v: Vec<f64> = (0..1000).map(|_| g.next()).collect();
    let noise = mic_score(&u, &v, &p).unwrap();
    if lin < 0.99 || noise > 0.3 {
        return Fail(format!("linear {lin}, noise {noise}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let n = rng.random_range(4..120);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = a
            .iter()
            .map(|v| v * rng.random_range(-1.0..1.0) + rng.random_range(0.0..2.0))
            .collect();
        let s1 = mic_score(&a, &b, &p).unwrap();
        let s2 = mic_score(&b, &a, &p).unwrap();
        if !(0.0..=1.0).contains(&s1) || (s1 - s2).abs() > 1e-12 {
            return Fail(format!("n={n}: {s1} vs {s2}"));
        }
    }
    Pass(format!(
        "linear {lin:.4}, noise {noise:.4}, 100 symmetric pairs in [0,1]"
    ))
}

fn synthetic_nb_data(k: usize, n: usize, seed: u64) -> DefectDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 4 == 0)).collect();
    let rows = labels
        .iter()
        .map(|&l| {
            (0..k)
                .map(|j| f64::from(l) * (1.0 + j as f64 * 0.3) + rng.random_range(0.0..2.5))
                .collect()
        })
        .collect();
    DefectDataset::from_rows("nb", rows, labels).unwrap()
}

/// Naive Bayes by direct counting with one weight `w` for every
/// instance and one exponent `e` for every feature.
fn laplace_oracle(bins: &[Vec<usize>], labels: &[u8], n_bins: &[usize], w: f64, e: f64, row: &[usize]) -> u8 {
    let mut score = [0.0f64; 2];
    let total = w * labels.len() as f64;
    for (c, s) in score.iter_mut().enumerate() {
        let nc = w * labels.iter().filter(|&&l| usize::from(l) == c).count() as f64;
        let mut p = (nc + 1.0) / (total + 2.0);
        for (j, &v) in row.iter().enumerate() {
            let cnt = w * bins
                .iter()
                .zip(labels)
                .filter(|(r, &l)| usize::from(l) == c && r[j] == v)
                .count() as f64;
            p *= ((cnt + 1.0) / (nc + n_bins[j] as f64)).powf(e);
        }
        *s = p;
    }
    u8::from(score[1] > score[0])
}

fn c9_tnb_reduction() -> Outcome {
    let ds = synthetic_nb_data(6, 200, 9);
    let mic = mic_profile(&ds, &MineParams::default()).unwrap();
    let disc = discretize::fit_all(&ds).unwrap();
    let binned = discretize::apply(&disc, &ds).unwrap();
    let weights: Vec<f64> = (0..200).map(|i| 0.5 + (i % 3) as f64).collect();
    let model = fwtnb::fit(&binned, &weights, &mic, 1e6, &disc).unwrap();
    for (i, row) in binned.rows.iter().enumerate() {
        if model.predict(row).unwrap().label != model.tnb_predict(row).unwrap().label {
            return Fail(format!("sigma=1e6 differs from TNB at row {i}"));
        }
    }

    let mut checked = 0;
    for k in 1..=5 {
        let ds = synthetic_nb_data(k, 120, 90 + k as u64);
        let ones = MicProfile::uniform(k);
        let ranges = TargetRanges::unbounded(k);
        let disc = discretize::fit_all(&ds).unwrap();
        let binned = discretize::apply(&disc, &ds).unwrap();
        let nb = disc.bin_counts();
        let e = (1.0 / k as f64).exp();
        for (mode, w) in [
            (SimilarityMode::Unnormalized, k as f64),
            (SimilarityMode::Normalized, 1.0),
        ] {
            let iw = fwtnb::instance_weights(&ds.rows, &ranges, &ones, mode).unwrap();
            if iw.weights.iter().any(|x| (x - w).abs() > 1e-12) {
                return Fail(format!("k={k} {mode:?}: weights not uniform {w}"));
            }
            let model = fwtnb::fit(&binned, &iw.weights, &ones, 1.0, &disc).unwrap();
            for row in &binned.rows {
                let want = laplace_oracle(&binned.rows, &binned.labels, &nb, w, e, row);
                if model.predict(row).unwrap().label != want {
                    return Fail(format!("k={k} {mode:?}: oracle disagrees on {row:?}"));
                }
                checked += 1;
            }
        }
    }
    Pass(format!(
        "200 rows match TNB at sigma=1e6; {checked} oracle predictions match"
    ))
}

fn c10_mdlp() -> Outcome {
    let cuts = fit_mdlp(&[1.0, 2.0, 3.0, 10.0, 11.0, 12.0], &[0, 0, 0, 1, 1, 1]).unwrap();
    let pure = fit_mdlp(&[1.0, 5.0, 2.0, 9.0], &[1, 1, 1, 1]).unwrap();
    if cuts == vec![6.5] && pure.is_empty() {
        Pass("single cut at 6.5, none for a pure class".into())
    } else {
        Fail(format!("cuts {cuts:?}, pure {pure:?}"))
    }
}

fn c11_directional() -> Outcome {
    let Some(dir) = data_dir() else {
        return NotRun("needs tomcat.csv and jedit-4.0.csv under CPDP_DATA_DIR".into());
    };
    let load = |n: &str| load_prepared(dir.join(format!("{n}.csv")), "bug");
    let (src, tgt) = match (load("tomcat"), load("jedit-4.0")) {
        (Ok(s), Ok(t)) => (s, t),
        (Err(e), _) | (_, Err(e)) => return Warn(format!("cannot load datasets: {e}")),
    };
    let mut cfg = ExperimentConfig::new(&dir);
    let mut g = Vec::new();
    let mut slowest = Duration::ZERO;
    for m in ["tomofwtnb", "smote100+tnb"] {
        cfg.method = m.parse::<Method>().unwrap();
        let start = Instant::now();
        match run_pair(&src, &tgt, &cfg) {
            Ok(r) => g.push(r.summary("g_measure").mean),
            Err(e) => return Warn(format!("{m}: {e}")),
        }
        slowest = slowest.max(start.elapsed());
    }
    let msg = format!(
        "tomofwtnb G {:.3} vs smote100+tnb G {:.3}, slowest {slowest:.1?}",
        g[0], g[1]
    );
    if g[0] > g[1] && slowest < Duration::from_secs(120) {
        Pass(msg)
    } else {
        Warn(msg)
    }
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    common::write_table1_fixture(dir.path(), 12);
    let mut cfg = ExperimentConfig::new(dir.path());
    cfg.pairs = PairSpec::Explicit(vec![
        ("tomcat".into(), "jedit-4.0".into()),
        ("camel-1.0".into(), "velocity-1.6".into()),
    ]);
    cfg.repetitions = 5;
    cfg.seed = 2024;
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let mut buf = Vec::new();
        match run_experiment(&cfg).and_then(|r| write_results(&r, &mut buf)) {
            Ok(()) => outputs.push(buf),
            Err(e) => return Fail(e.to_string()),
        }
    }
    if outputs[0] == outputs[1] {
        Pass(format!("two runs byte-identical ({} bytes)", outputs[0].len()))
    } else {
        Fail("result files differ".into())
    }
}

type Criterion = (&'static str, fn() -> Outcome, bool);

fn main() {
    // Respect libtest's listing probe so `cargo test -- --list` stays quiet.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [Criterion; 12] = [
        ("table 1 statistics", c1_table1, true),
        ("pair construction", c2_pairs, true),
        ("TOMO count and balance", c3_tomo_counts, true),
        ("TOMO collinearity", c4_collinearity, true),
        ("metric oracle", c5_metrics, true),
        ("Wilcoxon exactness", c6_wilcoxon, true),
        ("Cliff's delta oracle", c7_cliff, true),
        ("MIC sanity", c8_mic, true),
        ("TNB reduction", c9_tnb_reduction, true),
        ("MDLP unit case", c10_mdlp, true),
        ("directional G-Measure", c11_directional, false),
        ("determinism", c12_determinism, true),
    ];
    let mut failed = 0;
    for (i, (name, check, blocking)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) if *blocking => {
                failed += 1;
                ("FAIL", d)
            }
            Fail(d) | Warn(d) => ("WARN", d),
            NotRun(d) => ("NOT RUN", d),
        };
        println!("criterion {:>2} {tag:<7} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
