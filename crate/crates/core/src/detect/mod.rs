//! Static detection of energy smells in Python source.
//!
//! Twelve root causes have reliable syntactic signatures; this module finds
//! them. Everything else in the catalog needs dynamic evidence or human
//! judgment and is deliberately out of scope here — asking for such a rule
//! yields [`DetectError::UnsupportedRule`], which is a different failure from
//! naming an id that does not exist at all.
//!
//! Rules run independently. A statement can (and often does) carry several
//! labels at once; no rule suppresses another's finding.

mod rules;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::source::{SourceModel, Span, DEFAULT_PURE_BUILTINS};
use crate::taxonomy::Taxonomy;

/// Root causes with a static signature. Everything else needs measurement.
pub const IMPLEMENTED_RULES: [&str; 12] = [
    "C1.S1", "C1.S2", "C1.S4", "C3.S2", "C3.S5", "C3.S7", "C4.S2", "C5.S1", "C6.S3", "C6.S7",
    "C10.S1", "C10.S4",
];

/// How sure the rule is. Structure-only matches that cannot see types or
/// workload stay at `Likely`; the rest are `Certain`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Likely,
    Certain,
}

impl std::fmt::Display for Confidence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Confidence::Likely => write!(f, "likely"),
            Confidence::Certain => write!(f, "certain"),
        }
    }
}

impl std::str::FromStr for Confidence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "likely" => Ok(Confidence::Likely),
            "certain" => Ok(Confidence::Certain),
            other => Err(format!("unknown confidence `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub root_cause_id: String,
    pub span: Span,
    pub message: String,
    /// What to do about it, taken from the catalog entry.
    pub refactor_hint: String,
    /// Median joules historically saved by fixing this category.
    pub severity: f64,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub file: PathBuf,
    pub findings: Vec<Finding>,
    /// Distinct root-cause ids present, i.e. the file's label set.
    pub labels: BTreeSet<String>,
    /// Finding counts per category id.
    pub stats: BTreeMap<String, usize>,
}

impl ScanReport {
    /// Order findings by severity (highest first) then position, and derive
    /// the label set and per-category counts from what remains.
    pub fn from_findings(file: PathBuf, mut findings: Vec<Finding>) -> ScanReport {
        findings.sort_by(|a, b| {
            b.severity
                .partial_cmp(&a.severity)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.span.cmp(&b.span))
                .then_with(|| a.root_cause_id.cmp(&b.root_cause_id))
                .then_with(|| a.message.cmp(&b.message))
        });
        let labels: BTreeSet<String> = findings.iter().map(|f| f.root_cause_id.clone()).collect();
        let mut stats: BTreeMap<String, usize> = BTreeMap::new();
        for finding in &findings {
            if let Some(category) = Taxonomy::parent_category(&finding.root_cause_id) {
                *stats.entry(category.to_string()).or_insert(0) += 1;
            }
        }
        ScanReport {
            file,
            findings,
            labels,
            stats,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Root-cause ids to run. Defaults to every implemented rule.
    pub enabled: Vec<String>,
    /// Findings below this confidence are dropped.
    pub min_confidence: Confidence,
    /// Calls to these names count as pure when judging expressions.
    pub pure_builtins_allowlist: Vec<String>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            enabled: IMPLEMENTED_RULES.iter().map(|s| s.to_string()).collect(),
            min_confidence: Confidence::Likely,
            pure_builtins_allowlist: DEFAULT_PURE_BUILTINS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetectError {
    /// The id does not name any root cause in the catalog.
    #[error("unknown rule `{0}`: no such root cause")]
    UnknownRule(String),
    /// The id is a real root cause, but it has no static signature.
    #[error("rule `{0}` is not statically detectable; it needs measurement or review")]
    UnsupportedRule(String),
}

fn confidence_of(rule_id: &str) -> Confidence {
    match rule_id {
        "C5.S1" | "C10.S1" => Confidence::Likely,
        _ => Confidence::Certain,
    }
}

fn refactor_hint_of(rule_id: &str) -> Option<&'static str> {
    let hint = match rule_id {
        "C1.S1" => "delete the unused import, binding, or unreachable branch",
        "C1.S2" => "drop the assignment that is overwritten before any read",
        "C1.S4" => "compute the repeated expression once and reuse the result",
        "C3.S2" => "hoist the loop-invariant expression out of the loop",
        "C3.S5" => "break out of the loop once the answer is known",
        "C3.S7" => "restructure so the collection is not reshaped mid-scan",
        "C4.S2" => "evaluate the constant condition once, outside the code",
        "C5.S1" => "use a set or dict for membership tests instead of a list",
        "C6.S3" => "feed the consumer a generator instead of a full list",
        "C6.S7" => "default to None and build the fresh value inside the function",
        "C10.S1" => "replace the manual accumulation loop with the built-in",
        "C10.S4" => "collect the pieces and join once instead of concatenating",
        _ => return None,
    };
    Some(hint)
}

fn run_rule(
    rule_id: &str,
    model: &SourceModel,
    allow: &BTreeSet<String>,
) -> Option<Vec<rules::Raw>> {
    let raws = match rule_id {
        "C1.S1" => rules::dead_code(model),
        "C1.S2" => rules::redundant_assignment(model),
        "C1.S4" => rules::repeated_computation(model, allow),
        "C3.S2" => rules::loop_invariant(model, allow),
        "C3.S5" => rules::missing_early_exit(model),
        "C3.S7" => rules::mutation_during_iteration(model),
        "C4.S2" => rules::redundant_conditional(model),
        "C5.S1" => rules::sequential_membership(model),
        "C6.S3" => rules::unnecessary_materialization(model),
        "C6.S7" => rules::mutable_default(model),
        "C10.S1" => rules::manual_builtin(model),
        "C10.S4" => rules::string_concat_loop(model),
        _ => return None,
    };
    Some(raws)
}

fn to_findings(
    rule_id: &str,
    raws: Vec<rules::Raw>,
    taxonomy: &Taxonomy,
) -> Result<Vec<Finding>, DetectError> {
    let cause = taxonomy
        .root_cause(rule_id)
        .ok_or_else(|| DetectError::UnknownRule(rule_id.to_string()))?;
    let category = Taxonomy::parent_category(rule_id)
        .ok_or_else(|| DetectError::UnknownRule(rule_id.to_string()))?;
    let severity = taxonomy
        .severity_weight(category)
        .map_err(|_| DetectError::UnknownRule(rule_id.to_string()))?;
    let confidence = confidence_of(rule_id);
    Ok(raws
        .into_iter()
        .map(|r| Finding {
            root_cause_id: rule_id.to_string(),
            span: r.span,
            message: r.message,
            refactor_hint: refactor_hint_of(rule_id)
                .map(str::to_string)
                .unwrap_or_else(|| cause.description.clone()),
            severity,
            confidence,
        })
        .collect())
}

/// Run one rule against a model. The id must name a catalog root cause that
/// has a static signature.
pub fn detect_rule(rule_id: &str, model: &SourceModel) -> Result<Vec<Finding>, DetectError> {
    let taxonomy = Taxonomy::canonical();
    if taxonomy.root_cause(rule_id).is_none() {
        return Err(DetectError::UnknownRule(rule_id.to_string()));
    }
    let allow: BTreeSet<String> = DEFAULT_PURE_BUILTINS.iter().map(|s| s.to_string()).collect();
    let raws = run_rule(rule_id, model, &allow)
        .ok_or_else(|| DetectError::UnsupportedRule(rule_id.to_string()))?;
    to_findings(rule_id, raws, &taxonomy)
}

/// Run every enabled rule and assemble the per-file report. Findings are
/// ordered by severity (highest first), then by position.
pub fn detect_all(
    file: &Path,
    model: &SourceModel,
    taxonomy: &Taxonomy,
    config: &RuleConfig,
) -> Result<ScanReport, DetectError> {
    let allow: BTreeSet<String> = config
        .pure_builtins_allowlist
        .iter()
        .cloned()
        .collect();
    let mut findings = Vec::new();
    for rule_id in &config.enabled {
        if taxonomy.root_cause(rule_id).is_none() {
            return Err(DetectError::UnknownRule(rule_id.clone()));
        }
        let raws = run_rule(rule_id, model, &allow)
            .ok_or_else(|| DetectError::UnsupportedRule(rule_id.clone()))?;
        findings.extend(to_findings(rule_id, raws, taxonomy)?);
    }
    findings.retain(|f| f.confidence >= config.min_confidence);
    Ok(ScanReport::from_findings(file.to_path_buf(), findings))
}

#[cfg(test)]
mod tests;
