//! Impact-ranked reporting over scan results plus co-occurrence analytics
//! over label sets, emitted as plain text, JSON, or SARIF.
//!
//! Ranking orders files by the joules their findings are worth, not by how
//! many findings they have — one heavy data-structure smell outweighs a
//! pile of cheap control-flow ones.


use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::detect::{Confidence, ScanReport};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("invalid label set: {0}")]
    Labels(String),
    #[error("unknown report format {0:?}; expected text, json, or sarif")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCount {
    pub first: String,
    pub second: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoOccurrence {
    pub samples: usize,
    /// Fraction of samples touching two or more distinct categories.
    pub multi_label_fraction: f64,
    /// Unordered category pairs with nonzero count, most frequent first.
    pub pairs: Vec<PairCount>,
}

impl CoOccurrence {
    /// Count for an unordered category pair; the diagonal is always zero.
    pub fn count(&self, a: &str, b: &str) -> usize {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.pairs
            .iter()
            .find(|p| p.first == lo && p.second == hi)
            .map_or(0, |p| p.count)
    }
}

/// How often categories appear together in the same label set. A sample
/// counts toward a pair when its labels touch both categories.
pub fn co_occurrence(
    labelsets: &[LabelSet],
    taxonomy: &Taxonomy,
) -> Result<CoOccurrence, ReportError> {
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut multi = 0usize;
    for set in labelsets {
        set.validate(taxonomy)
            .map_err(|e| ReportError::Labels(e.to_string()))?;
        let categories: BTreeSet<&str> = set
            .root_cause_ids
            .iter()
            .filter_map(|id| Taxonomy::parent_category(id))
            .collect();
        if categories.len() >= 2 {
            multi += 1;
        }
        let cats: Vec<&str> = categories.into_iter().collect();
        for i in 0..cats.len() {
            for j in i + 1..cats.len() {
                *counts
                    .entry((cats[i].to_string(), cats[j].to_string()))
                    .or_insert(0) += 1;
            }
        }
    }
    let mut pairs: Vec<PairCount> = counts
        .into_iter()
        .map(|((first, second), count)| PairCount {
            first,
            second,
            count,
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.first.cmp(&b.first))
            .then_with(|| a.second.cmp(&b.second))
    });
    let samples = labelsets.len();
    let multi_label_fraction = if samples == 0 {
        0.0
    } else {
        multi as f64 / samples as f64
    };
    Ok(CoOccurrence {
        samples,
        multi_label_fraction,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub file: PathBuf,
    pub total_severity: f64,
    pub findings: usize,
    /// Severity sum per category id.
    pub by_category: BTreeMap<String, f64>,
}

fn total_severity(report: &ScanReport) -> f64 {
    report.findings.iter().map(|f| f.severity).sum::<f64>() + 0.0
}

/// Order files by the total joules their findings are worth, heaviest
/// first; equal totals fall back to path order.
pub fn rank_by_impact(reports: &[ScanReport]) -> Vec<RankedItem> {
    let mut items: Vec<RankedItem> = reports
        .iter()
        .map(|report| {
            let mut by_category: BTreeMap<String, f64> = BTreeMap::new();
            for finding in &report.findings {
                if let Some(cat) = Taxonomy::parent_category(&finding.root_cause_id) {
                    *by_category.entry(cat.to_string()).or_insert(0.0) += finding.severity;
                }
            }
            RankedItem {
                file: report.file.clone(),
                total_severity: total_severity(report),
                findings: report.findings.len(),
                by_category,
            }
        })
        .collect();
    items.sort_by(|a, b| {
        b.total_severity
            .partial_cmp(&a.total_severity)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.file.cmp(&b.file))
    });
    items
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub ranking: Vec<RankedItem>,
    /// Per-file scan results, in ranking order.
    pub reports: Vec<ScanReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub co_occurrence: Option<CoOccurrence>,
}

pub fn build_report(mut reports: Vec<ScanReport>, co_occurrence: Option<CoOccurrence>) -> Report {
    let ranking = rank_by_impact(&reports);
    reports.sort_by(|a, b| {
        total_severity(b)
            .partial_cmp(&total_severity(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.file.cmp(&b.file))
    });
    Report {
        ranking,
        reports,
        co_occurrence,
    }
}

/// Drop findings below the threshold and rebuild each file's summary from
/// what remains. Zero keeps everything.
pub fn filter_by_threshold(reports: Vec<ScanReport>, min_joules: f64) -> Vec<ScanReport> {
    reports
        .into_iter()
        .map(|report| {
            let findings = report
                .findings
                .into_iter()
                .filter(|f| f.severity >= min_joules)
                .collect();
            ScanReport::from_findings(report.file, findings)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Sarif,
}

impl std::str::FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "sarif" => Ok(ReportFormat::Sarif),
            other => Err(ReportError::Format(other.to_string())),
        }
    }
}

pub fn emit(
    report: &Report,
    format: ReportFormat,
    taxonomy: &Taxonomy,
) -> Result<String, ReportError> {
    match format {
        ReportFormat::Text => Ok(emit_text(report, taxonomy)),
        ReportFormat::Json => {
            let mut doc = serde_json::to_string_pretty(report).expect("report serializes");
            doc.push('\n');
            Ok(doc)
        }
        ReportFormat::Sarif => Ok(emit_sarif(report, taxonomy)),
    }
}

fn emit_text(report: &Report, taxonomy: &Taxonomy) -> String {
    let mut out = String::new();
    let files = report.ranking.len();
    let findings: usize = report.ranking.iter().map(|i| i.findings).sum();
    let joules: f64 = report.ranking.iter().map(|i| i.total_severity).sum::<f64>() + 0.0;
    writeln!(out, "{files} file(s), {findings} finding(s), {joules:.0} J estimated impact").unwrap();
    for (item, scan) in report.ranking.iter().zip(&report.reports) {
        writeln!(out).unwrap();
        writeln!(out, "{}  {:.0} J", item.file.display(), item.total_severity).unwrap();
        for f in &scan.findings {
            let name = taxonomy
                .root_cause(&f.root_cause_id)
                .map(|c| c.name.as_str())
                .unwrap_or("unknown");
            writeln!(
                out,
                "  {}:{}  {}  {} — {}",
                f.span.start_line, f.span.start_col, f.root_cause_id, name, f.message
            )
            .unwrap();
            writeln!(out, "      fix: {}", f.refactor_hint).unwrap();
        }
    }
    if let Some(co) = &report.co_occurrence {
        writeln!(out).unwrap();
        writeln!(
            out,
            "co-occurring category pairs ({} sample(s), {:.2} multi-label):",
            co.samples, co.multi_label_fraction
        )
        .unwrap();
        for p in &co.pairs {
            writeln!(out, "  {}+{}  {}", p.first, p.second, p.count).unwrap();
        }
    }
    out
}

fn emit_sarif(report: &Report, taxonomy: &Taxonomy) -> String {
    let mut rule_ids: BTreeSet<&str> = BTreeSet::new();
    for scan in &report.reports {
        for f in &scan.findings {
            rule_ids.insert(&f.root_cause_id);
        }
    }
    let rules: Vec<serde_json::Value> = rule_ids
        .iter()
        .map(|id| match taxonomy.root_cause(id) {
            Some(cause) => serde_json::json!({
                "id": id,
                "name": cause.name,
                "shortDescription": {"text": cause.name},
                "fullDescription": {"text": cause.description},
            }),
            None => serde_json::json!({"id": id}),
        })
        .collect();
    let results: Vec<serde_json::Value> = report
        .reports
        .iter()
        .flat_map(|scan| {
            scan.findings.iter().map(|f| {
                serde_json::json!({
                    "ruleId": f.root_cause_id,
                    "level": match f.confidence {
                        Confidence::Certain => "warning",
                        Confidence::Likely => "note",
                    },
                    "message": {"text": f.message},
                    "locations": [{
                        "physicalLocation": {
                            "artifactLocation": {"uri": scan.file.display().to_string()},
                            "region": {
                                "startLine": f.span.start_line,
                                "startColumn": f.span.start_col,
                                "endLine": f.span.end_line,
                                "endColumn": f.span.end_col,
                            }
                        }
                    }],
                    "properties": {
                        "severityJoules": f.severity,
                        "fix": f.refactor_hint,
                    }
                })
            })
        })
        .collect();
    let doc = serde_json::json!({
        "$schema": "https://raw.githubusercontent.com/oasis-tcs/sarif-spec/master/Schemata/sarif-schema-2.1.0.json",
        "version": "2.1.0",
        "runs": [{
            "tool": {"driver": {
                "name": "joulint",
                "rules": rules,
            }},
            "results": results,
        }]
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("sarif serializes");
    text.push('\n');
    text
}
