//! Code-pair corpora: loading, functional-equivalence checks, selection by
//! energy impact, and annotation-agreement scoring.
//!
//! The on-disk format is UTF-8 JSON, one record per line. Records that fail
//! to parse are skipped and reported with their line number rather than
//! aborting the whole load — real corpora have rough edges.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::profile::PairMetrics;
use crate::runner::{CaseRunner, RunnerError};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub input: String,
    pub expected_output: String,
}

/// Root-cause ids attached to a pair. Serialized as a bare array.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet {
    pub root_cause_ids: BTreeSet<String>,
}

impl LabelSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> Self {
        LabelSet {
            root_cause_ids: ids.into_iter().map(Into::into).collect(),
        }
    }

    /// A label set attached to a pair must be non-empty and every id must
    /// exist in the catalog.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), CorpusError> {
        if self.root_cause_ids.is_empty() {
            return Err(CorpusError::Invalid("empty label set".to_string()));
        }
        for id in &self.root_cause_ids {
            if taxonomy.root_cause(id).is_none() {
                return Err(CorpusError::Invalid(format!("unknown root cause `{id}`")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodePair {
    pub pair_id: String,
    pub problem_text: String,
    /// The inefficient variant.
    pub src_v0: String,
    /// The efficient variant.
    pub src_v1: String,
    pub test_cases: Vec<TestCase>,
    #[serde(rename = "metrics", default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<PairMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelSet>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus: {0}")]
    Io(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid record: {0}")]
    Invalid(String),
    /// The runner itself is broken (missing interpreter, I/O failure) —
    /// nothing was decided about the pair.
    #[error("runner environment: {0}")]
    Environment(String),
}

#[derive(Debug)]
pub struct LoadedCorpus {
    pub pairs: Vec<CodePair>,
    /// (1-based line number, what was wrong with it)
    pub skipped: Vec<(usize, String)>,
}

pub fn load_corpus(path: &Path) -> Result<LoadedCorpus, CorpusError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CorpusError::Io(format!("{}: {e}", path.display())))?;
    let mut pairs: Vec<CodePair> = Vec::new();
    let mut skipped = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CodePair>(line) {
            Ok(pair) => {
                if !seen_ids.insert(pair.pair_id.clone()) {
                    skipped.push((lineno, format!("duplicate pair_id `{}`", pair.pair_id)));
                } else {
                    pairs.push(pair);
                }
            }
            Err(e) => skipped.push((lineno, e.to_string())),
        }
    }
    Ok(LoadedCorpus { pairs, skipped })
}

pub fn save_corpus(path: &Path, pairs: &[CodePair]) -> Result<(), CorpusError> {
    let mut out = String::new();
    for pair in pairs {
        out.push_str(
            &serde_json::to_string(pair).map_err(|e| CorpusError::Io(e.to_string()))?,
        );
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CorpusError::Io(format!("{}: {e}", path.display())))
}

/// Trailing whitespace per line and trailing blank lines are not meaningful
/// output differences; interior blank lines are.
pub fn normalize_output(text: &str) -> String {
    let mut lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.trim_end_matches([' ', '\t', '\r']))
        .collect();
    while lines.last() == Some(&"") {
        lines.pop();
    }
    lines.join("\n")
}

/// Do both variants produce the same output on every test case?
///
/// `false` is a verdict (mismatch, crash, or timeout in either variant);
/// an error means the runner could not do its job at all.
pub fn check_equivalence(
    pair: &CodePair,
    runner: &dyn CaseRunner,
    timeout: Duration,
) -> Result<bool, CorpusError> {
    if pair.test_cases.is_empty() {
        return Err(CorpusError::Argument(format!(
            "pair `{}` has no test cases",
            pair.pair_id
        )));
    }
    for case in &pair.test_cases {
        for src in [&pair.src_v0, &pair.src_v1] {
            let outcome = runner.run(src, &case.input, timeout).map_err(|e| match e {
                RunnerError::Unavailable(_) | RunnerError::Io(_) => {
                    CorpusError::Environment(e.to_string())
                }
            })?;
            if !outcome.exit_ok {
                return Ok(false);
            }
            if normalize_output(&outcome.stdout) != normalize_output(&case.expected_output) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The `k` pairs with the largest absolute energy difference, ties broken by
/// pair id so the selection is reproducible.
pub fn select_top_by_energy(pairs: &[CodePair], k: usize) -> Result<Vec<CodePair>, CorpusError> {
    if k == 0 {
        return Err(CorpusError::Argument("k must be positive".to_string()));
    }
    for pair in pairs {
        if pair.measured.is_none() {
            return Err(CorpusError::Argument(format!(
                "pair `{}` has no measured metrics",
                pair.pair_id
            )));
        }
    }
    let mut sorted: Vec<CodePair> = pairs.to_vec();
    sorted.sort_by(|a, b| {
        let da = a.measured.as_ref().unwrap().energy_diff.abs();
        let db = b.measured.as_ref().unwrap().energy_diff.abs();
        db.partial_cmp(&da)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.pair_id.cmp(&b.pair_id))
    });
    sorted.truncate(k);
    Ok(sorted)
}

/// Cohen's κ for two single-label annotations of the same items.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64, CorpusError> {
    if a.len() != b.len() {
        return Err(CorpusError::Argument(format!(
            "label lists differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(CorpusError::Argument("no items to compare".to_string()));
    }
    let n = a.len() as f64;
    let agreements = a.iter().zip(b).filter(|(x, y)| x == y).count();
    if agreements == a.len() {
        // Identical labelings are perfect agreement by definition, even when
        // a degenerate marginal would make the chance-correction 0/0.
        return Ok(1.0);
    }
    let mut count_a: BTreeMap<&T, usize> = BTreeMap::new();
    let mut count_b: BTreeMap<&T, usize> = BTreeMap::new();
    for x in a {
        *count_a.entry(x).or_insert(0) += 1;
    }
    for y in b {
        *count_b.entry(y).or_insert(0) += 1;
    }
    let p_o = agreements as f64 / n;
    let p_e: f64 = count_a
        .iter()
        .map(|(label, ca)| {
            let cb = count_b.get(label).copied().unwrap_or(0);
            (*ca as f64 / n) * (cb as f64 / n)
        })
        .sum();
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseAgreement {
    /// Predicted and present in gold.
    pub matched: usize,
    /// Predicted but absent from gold.
    pub spurious: usize,
    /// In gold but not predicted.
    pub missed: usize,
}

impl CauseAgreement {
    pub fn precision(&self) -> f64 {
        let denom = self.matched + self.spurious;
        if denom == 0 {
            1.0
        } else {
            self.matched as f64 / denom as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let denom = self.matched + self.missed;
        if denom == 0 {
            1.0
        } else {
            self.matched as f64 / denom as f64
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementReport {
    pub samples: usize,
    pub exact_matches: usize,
    /// Fraction of samples whose predicted set equals the gold set exactly.
    pub accuracy: f64,
    pub per_cause: BTreeMap<String, CauseAgreement>,
}

pub fn agreement_report(
    gold: &[LabelSet],
    predicted: &[LabelSet],
) -> Result<AgreementReport, CorpusError> {
    if gold.len() != predicted.len() {
        return Err(CorpusError::Argument(format!(
            "label lists differ in length: {} vs {}",
            gold.len(),
            predicted.len()
        )));
    }
    let samples = gold.len();
    let mut exact_matches = 0;
    let mut per_cause: BTreeMap<String, CauseAgreement> = BTreeMap::new();
    for (g, p) in gold.iter().zip(predicted) {
        if g.root_cause_ids == p.root_cause_ids {
            exact_matches += 1;
        }
        for id in g.root_cause_ids.union(&p.root_cause_ids) {
            let entry = per_cause.entry(id.clone()).or_default();
            match (g.root_cause_ids.contains(id), p.root_cause_ids.contains(id)) {
                (true, true) => entry.matched += 1,
                (false, true) => entry.spurious += 1,
                (true, false) => entry.missed += 1,
                (false, false) => unreachable!("id came from the union"),
            }
        }
    }
    let accuracy = if samples == 0 {
        1.0
    } else {
        exact_matches as f64 / samples as f64
    };
    Ok(AgreementReport {
        samples,
        exact_matches,
        accuracy,
        per_cause,
    })
}
