use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use joulint_core::detect::{detect_all, RuleConfig, ScanReport};
use joulint_core::source::parse;
use joulint_core::Taxonomy;

/// Every statically detectable rule with its fixture directory and the
/// labels its smelly variant is expected to earn. The flag-search fixture
/// legitimately carries two labels: the missing exit and the hand-rolled
/// existence test are the same loop.
pub const RULE_FIXTURES: [(&str, &str, &[&str]); 12] = [
    ("C1.S1", "c1s1", &["C1.S1"]),
    ("C1.S2", "c1s2", &["C1.S2"]),
    ("C1.S4", "c1s4", &["C1.S4"]),
    ("C3.S2", "c3s2", &["C3.S2"]),
    ("C3.S5", "c3s5", &["C3.S5", "C10.S1"]),
    ("C3.S7", "c3s7", &["C3.S7"]),
    ("C4.S2", "c4s2", &["C4.S2"]),
    ("C5.S1", "c5s1", &["C5.S1"]),
    ("C6.S3", "c6s3", &["C6.S3"]),
    ("C6.S7", "c6s7", &["C6.S7"]),
    ("C10.S1", "c10s1", &["C10.S1"]),
    ("C10.S4", "c10s4", &["C10.S4"]),
];

pub fn fixture_root() -> PathBuf {
    let here = Path::new(env!("CARGO_MANIFEST_DIR"));
    let local = here.join("tests/fixtures/diff");
    if local.exists() {
        local
    } else {
        here.parent()
            .expect("crate dir has a parent")
            .join("core/tests/fixtures/diff")
    }
}

pub fn scan_file(path: &Path) -> ScanReport {
    let source = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    let model = parse(&source).unwrap_or_else(|e| panic!("parse {}: {e}", path.display()));
    detect_all(path, &model, &Taxonomy::canonical(), &RuleConfig::default())
        .unwrap_or_else(|e| panic!("scan {}: {e}", path.display()))
}

pub fn run_python(path: &Path) -> (f64, Vec<u8>) {
    let start = Instant::now();
    let out = Command::new("python3")
        .arg(path)
        .output()
        .expect("python3 is on PATH");
    let secs = start.elapsed().as_secs_f64();
    assert!(
        out.status.success(),
        "{} exited nonzero: {}",
        path.display(),
        String::from_utf8_lossy(&out.stderr)
    );
    (secs, out.stdout)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    xs[xs.len() / 2]
}

pub struct DiffOutcome {
    pub rule: &'static str,
    pub smelly_labels: BTreeSet<String>,
    pub refactored_labels: BTreeSet<String>,
    pub outputs_match: bool,
    pub smelly_median: f64,
    pub refactored_median: f64,
}

/// Scan both variants, then run each five times and compare stdout bytes
/// and median wall time.
pub fn differential(rule: &'static str, dir: &str) -> DiffOutcome {
    let base = fixture_root().join(dir);
    let smelly = base.join("smelly.py");
    let refactored = base.join("refactored.py");

    let smelly_labels = scan_file(&smelly).labels;
    let refactored_labels = scan_file(&refactored).labels;

    let mut smelly_times = Vec::new();
    let mut refactored_times = Vec::new();
    let mut outputs_match = true;
    for _ in 0..5 {
        let (ts, outs) = run_python(&smelly);
        let (tr, outr) = run_python(&refactored);
        smelly_times.push(ts);
        refactored_times.push(tr);
        if outs != outr {
            outputs_match = false;
        }
    }

    DiffOutcome {
        rule,
        smelly_labels,
        refactored_labels,
        outputs_match,
        smelly_median: median(smelly_times),
        refactored_median: median(refactored_times),
    }
}
