#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const METRICS: [&str; 20] = [
    "wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm", "lcom3", "loc", "dam", "moa", "mfa", "cam", "ic",
    "cbm", "amc", "max_cc", "avg_cc",
];

/// The eleven dataset shapes: name, instances, defective.
pub const TABLE1: [(&str, usize, usize); 11] = [
    ("ant-1.7", 745, 166),
    ("camel-1.0", 339, 13),
    ("ivy-1.4", 241, 16),
    ("jedit-4.0", 306, 75),
    ("log4j-1.0", 135, 34),
    ("poi-2.0", 314, 37),
    ("prop-6", 660, 66),
    ("tomcat", 858, 77),
    ("velocity-1.6", 229, 78),
    ("xalan-2.4", 723, 110),
    ("xerces-1.2", 440, 71),
];

/// PROMISE-style CSV text: identifier columns, 20 count-like metrics whose
/// scale grows for defective rows, and a bug-count column. `shift` moves
/// the whole distribution to mimic a different project.
pub fn promise_csv(name: &str, n: usize, defective: usize, shift: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<bool> = (0..n).map(|i| i < defective).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut s = String::from("name,version,name.1,");
    s.push_str(&METRICS.join(","));
    s.push_str(",bug\n");
    for (i, &bad) in order.iter().enumerate() {
        let _ = write!(s, "{name},1.0,org.example.C{i},");
        let size: f64 = rng.random_range(0.0..2.0) + if bad { 1.2 } else { 0.0 } + shift;
        for (j, _) in METRICS.iter().enumerate() {
            let noise: f64 = rng.random_range(-0.8..0.8);
            let weight = if j % 4 == 3 { 0.1 } else { 1.0 };
            let v = (size * weight + noise).exp() * (1.0 + j as f64 % 3.0);
            let _ = write!(s, "{:.0},", v.max(0.0));
        }
        let bugs = if bad { rng.random_range(1..4) } else { 0 };
        let _ = writeln!(s, "{bugs}");
    }
    s
}

/// Writes one CSV per Table 1 shape into `dir`.
pub fn write_table1_fixture(dir: &Path, seed: u64) {
    for (i, (name, n, d)) in TABLE1.iter().enumerate() {
        let shift = (i as f64 - 5.0) * 0.08;
        std::fs::write(
            dir.join(format!("{name}.csv")),
            promise_csv(name, *n, *d, shift, seed + i as u64),
        )
        .unwrap();
    }
}

/// Deterministic uniform stream in [0, 1).
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}
