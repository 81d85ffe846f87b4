//! Three-step triage of a code pair onto the taxonomy: free-text root-cause
//! analysis, category matching, then subcategory labeling. The first step
//! deliberately sees no taxonomy vocabulary so the reasoning is not primed
//! toward any catalog entry.

mod backend;

pub use backend::{
    BackendError, Completion, CompletionParams, HttpBackend, ReasoningBackend, ReplayBackend,
    BACKEND_KEY_VAR, BACKEND_MODEL_VAR, BACKEND_URL_VAR,
};

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{CodePair, LabelSet};
use crate::profile::PairMetrics;
use crate::taxonomy::Taxonomy;

pub const STEP1_TEMPLATE: &str = include_str!("prompts/step1_root_cause.txt");
pub const STEP2_TEMPLATE: &str = include_str!("prompts/step2_category.txt");
pub const STEP3_TEMPLATE: &str = include_str!("prompts/step3_subcategory.txt");

fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in values {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    out
}

fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    format!("{:x}", hasher.finalize())
}

/// One backend exchange: which step it served, what the model saw (as a
/// hash), and what came back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u8,
    pub prompt_sha256: String,
    pub output: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageTrace {
    pub pair_id: String,
    pub step1_root_causes: Vec<String>,
    pub step2_categories: Vec<String>,
    pub step3_labels: LabelSet,
    pub reasoning: Vec<StepRecord>,
    pub backend_id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TriageError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("unparseable backend output: {detail}")]
    Format { detail: String, raw: String },
    #[error("root-cause analysis named the catalog entry {id}")]
    Primed { id: String, raw: String },
    #[error("no valid ids in backend output")]
    NoValidIds { raw: String },
    #[error("no inefficiency found")]
    NoInefficiencyFound,
    #[error("{0}")]
    Precondition(String),
}

/// A pair that could not be triaged: which step broke, why, and the records
/// of every step that did complete.
#[derive(Debug, Clone, PartialEq)]
pub struct TriageFailure {
    pub pair_id: String,
    pub step: u8,
    pub error: TriageError,
    pub completed: Vec<StepRecord>,
}

impl std::fmt::Display for TriageFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "pair {} failed at step {}: {}",
            self.pair_id, self.step, self.error
        )
    }
}

#[derive(Debug)]
pub struct Step1Outcome {
    pub statements: Vec<String>,
    pub record: StepRecord,
}

#[derive(Debug)]
pub struct Step2Outcome {
    pub category_ids: Vec<String>,
    pub warnings: Vec<String>,
    pub record: StepRecord,
}

#[derive(Debug)]
pub struct Step3Outcome {
    pub labels: LabelSet,
    pub warnings: Vec<String>,
    pub record: StepRecord,
}

/// Content between `==={name}===` and the next `===END===`, or None.
fn block<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    let open = format!("==={name}===");
    let start = text.find(&open)? + open.len();
    let rest = &text[start..];
    rest.find("===END===").map(|end| &rest[..end])
}

fn parse_statements(body: &str) -> Vec<String> {
    body.lines()
        .map(|line| line.trim().strip_prefix("- ").unwrap_or(line.trim()).trim())
        .filter(|line| !line.is_empty() && *line != "-")
        .map(str::to_string)
        .collect()
}

fn parse_ids(body: &str) -> Vec<String> {
    body.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| t.chars().any(|c| c.is_ascii_alphanumeric()))
        .map(|t| {
            t.trim_matches(|c: char| !c.is_ascii_alphanumeric() && c != '.')
                .trim_end_matches('.')
                .to_uppercase()
        })
        .collect()
}

fn missing_block(name: &str, raw: &str) -> TriageError {
    TriageError::Format {
        detail: format!("missing ==={name}=== block"),
        raw: raw.to_string(),
    }
}

fn id_shaped() -> &'static regex::Regex {
    static PATTERN: OnceLock<regex::Regex> = OnceLock::new();
    PATTERN.get_or_init(|| regex::Regex::new(r"\bC[0-9]{1,2}(\.S[0-9]{1,2})?\b").unwrap())
}

fn catalog() -> &'static Taxonomy {
    static CATALOG: OnceLock<Taxonomy> = OnceLock::new();
    CATALOG.get_or_init(Taxonomy::canonical)
}

/// Free-text root-cause analysis. The prompt carries the problem, both
/// sources, and the measurements, but no catalog vocabulary; an output that
/// names a catalog entry anyway is rejected rather than laundered.
pub fn step1_root_cause(
    pair: &CodePair,
    metrics: &PairMetrics,
    backend: &dyn ReasoningBackend,
    params: &CompletionParams,
) -> Result<Step1Outcome, TriageError> {
    if pair.src_v0.trim().is_empty() || pair.src_v1.trim().is_empty() {
        return Err(TriageError::Precondition(format!(
            "pair {} is missing a source version",
            pair.pair_id
        )));
    }
    let e_v0 = format!("{:.1}", metrics.e_v0);
    let e_v1 = format!("{:.1}", metrics.e_v1);
    let t_v0 = format!("{:.3}", metrics.t_v0);
    let t_v1 = format!("{:.3}", metrics.t_v1);
    let m_v0 = format!("{:.0}", metrics.m_v0);
    let m_v1 = format!("{:.0}", metrics.m_v1);
    let prompt = render(
        STEP1_TEMPLATE,
        &[
            ("problem", pair.problem_text.as_str()),
            ("src_v0", pair.src_v0.as_str()),
            ("src_v1", pair.src_v1.as_str()),
            ("e_v0", e_v0.as_str()),
            ("t_v0", t_v0.as_str()),
            ("m_v0", m_v0.as_str()),
            ("e_v1", e_v1.as_str()),
            ("t_v1", t_v1.as_str()),
            ("m_v1", m_v1.as_str()),
        ],
    );
    let completion = backend.complete(&prompt, params)?;
    for hit in id_shaped().find_iter(&completion.text) {
        if catalog().contains_id(hit.as_str()) {
            return Err(TriageError::Primed {
                id: hit.as_str().to_string(),
                raw: completion.text,
            });
        }
    }
    let body =
        block(&completion.text, "ROOT CAUSES").ok_or_else(|| missing_block("ROOT CAUSES", &completion.text))?;
    let statements = parse_statements(body);
    Ok(Step1Outcome {
        statements,
        record: StepRecord {
            step: 1,
            prompt_sha256: sha256_hex(&prompt),
            output: completion.text,
            reasoning: completion.reasoning_trace,
        },
    })
}

/// Match the free-text statements against the twelve category definitions.
/// Unknown ids in the reply are dropped with a warning; an answer with no
/// valid id at all is an error.
pub fn step2_category_triage(
    root_causes: &[String],
    taxonomy: &Taxonomy,
    backend: &dyn ReasoningBackend,
    params: &CompletionParams,
) -> Result<Step2Outcome, TriageError> {
    if root_causes.is_empty() {
        return Err(TriageError::Precondition(
            "no root-cause statements to match".to_string(),
        ));
    }
    let listed = root_causes
        .iter()
        .map(|s| format!("- {s}"))
        .collect::<Vec<_>>()
        .join("\n");
    let categories = taxonomy
        .categories
        .iter()
        .map(|c| format!("{}: {} — {}", c.id, c.name, c.description))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = render(
        STEP2_TEMPLATE,
        &[
            ("root_causes", listed.as_str()),
            ("categories", categories.as_str()),
        ],
    );
    let completion = backend.complete(&prompt, params)?;
    let body =
        block(&completion.text, "CATEGORIES").ok_or_else(|| missing_block("CATEGORIES", &completion.text))?;
    let mut category_ids = Vec::new();
    let mut warnings = Vec::new();
    for token in parse_ids(body) {
        if taxonomy.category(&token).is_none() {
            warnings.push(format!("step 2 dropped unknown category id {token}"));
        } else if !category_ids.contains(&token) {
            category_ids.push(token);
        }
    }
    if category_ids.is_empty() {
        return Err(TriageError::NoValidIds {
            raw: completion.text,
        });
    }
    Ok(Step2Outcome {
        category_ids,
        warnings,
        record: StepRecord {
            step: 2,
            prompt_sha256: sha256_hex(&prompt),
            output: completion.text,
            reasoning: completion.reasoning_trace,
        },
    })
}

/// Refine candidate categories into subcategory labels. The prompt shows
/// definitions only for the candidates, so the model cannot wander into
/// categories step 2 ruled out; stray labels in the reply are dropped with
/// a warning.
pub fn step3_subcategory(
    pair: &CodePair,
    candidates: &[String],
    taxonomy: &Taxonomy,
    backend: &dyn ReasoningBackend,
    params: &CompletionParams,
) -> Result<Step3Outcome, TriageError> {
    if candidates.is_empty() {
        return Err(TriageError::Precondition(
            "no candidate categories".to_string(),
        ));
    }
    let subcategories = candidates
        .iter()
        .flat_map(|cid| taxonomy.causes_of(cid))
        .map(|c| {
            let mut line = format!("{}: {} — {}", c.id, c.name, c.description);
            if let Some(hint) = &c.example_hint {
                line.push_str(&format!(" (example: {hint})"));
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = render(
        STEP3_TEMPLATE,
        &[
            ("problem", pair.problem_text.as_str()),
            ("src_v0", pair.src_v0.as_str()),
            ("src_v1", pair.src_v1.as_str()),
            ("subcategories", subcategories.as_str()),
        ],
    );
    let completion = backend.complete(&prompt, params)?;
    let body = block(&completion.text, "LABELS").ok_or_else(|| missing_block("LABELS", &completion.text))?;
    let mut ids = BTreeSet::new();
    let mut warnings = Vec::new();
    for token in parse_ids(body) {
        if taxonomy.root_cause(&token).is_none() {
            warnings.push(format!("step 3 dropped unknown label {token}"));
            continue;
        }
        let parent = Taxonomy::parent_category(&token).unwrap_or_default();
        if !candidates.iter().any(|c| c == parent) {
            warnings.push(format!("step 3 dropped label {token} outside candidate categories"));
            continue;
        }
        ids.insert(token);
    }
    if ids.is_empty() {
        return Err(TriageError::NoValidIds {
            raw: completion.text,
        });
    }
    Ok(Step3Outcome {
        labels: LabelSet::new(ids),
        warnings,
        record: StepRecord {
            step: 3,
            prompt_sha256: sha256_hex(&prompt),
            output: completion.text,
            reasoning: completion.reasoning_trace,
        },
    })
}

/// Run the three steps in order for one pair. A pair whose step-1 analysis
/// comes back empty is flagged rather than pushed through the later steps.
pub fn triage_pair(
    pair: &CodePair,
    metrics: &PairMetrics,
    taxonomy: &Taxonomy,
    backend: &dyn ReasoningBackend,
) -> Result<TriageTrace, TriageFailure> {
    let params = CompletionParams::default();
    let s1 = step1_root_cause(pair, metrics, backend, &params).map_err(|error| TriageFailure {
        pair_id: pair.pair_id.clone(),
        step: 1,
        error,
        completed: Vec::new(),
    })?;
    if s1.statements.is_empty() {
        return Err(TriageFailure {
            pair_id: pair.pair_id.clone(),
            step: 1,
            error: TriageError::NoInefficiencyFound,
            completed: vec![s1.record],
        });
    }
    let s2 = step2_category_triage(&s1.statements, taxonomy, backend, &params).map_err(|error| {
        TriageFailure {
            pair_id: pair.pair_id.clone(),
            step: 2,
            error,
            completed: vec![s1.record.clone()],
        }
    })?;
    let s3 = step3_subcategory(pair, &s2.category_ids, taxonomy, backend, &params).map_err(
        |error| TriageFailure {
            pair_id: pair.pair_id.clone(),
            step: 3,
            error,
            completed: vec![s1.record.clone(), s2.record.clone()],
        },
    )?;
    let mut warnings = s2.warnings;
    warnings.extend(s3.warnings);
    Ok(TriageTrace {
        pair_id: pair.pair_id.clone(),
        step1_root_causes: s1.statements,
        step2_categories: s2.category_ids,
        step3_labels: s3.labels,
        reasoning: vec![s1.record, s2.record, s3.record],
        backend_id: backend.id(),
        warnings,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum TraceStoreError {
    #[error("trace store {path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error("trace encoding failed: {0}")]
    Encode(String),
}

/// Append-only JSONL file of triage traces; one line per pair, written in a
/// single call so concurrent workers never interleave.
pub struct TraceStore {
    path: PathBuf,
}

impl TraceStore {
    pub fn open(path: impl Into<PathBuf>) -> Self {
        TraceStore { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// All parseable traces; a store that does not exist yet is empty.
    pub fn traces(&self) -> Result<Vec<TriageTrace>, TraceStoreError> {
        let text = match std::fs::read_to_string(&self.path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => {
                return Err(TraceStoreError::Io {
                    path: self.path.clone(),
                    detail: e.to_string(),
                })
            }
        };
        Ok(text
            .lines()
            .filter(|line| !line.trim().is_empty())
            .filter_map(|line| serde_json::from_str(line).ok())
            .collect())
    }

    pub fn completed_ids(&self) -> Result<BTreeSet<String>, TraceStoreError> {
        Ok(self.traces()?.into_iter().map(|t| t.pair_id).collect())
    }

    pub fn append(&self, trace: &TriageTrace) -> Result<(), TraceStoreError> {
        let mut line =
            serde_json::to_string(trace).map_err(|e| TraceStoreError::Encode(e.to_string()))?;
        line.push('\n');
        let io_err = |e: std::io::Error| TraceStoreError::Io {
            path: self.path.clone(),
            detail: e.to_string(),
        };
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(io_err)?;
        file.write_all(line.as_bytes()).map_err(io_err)
    }
}

#[derive(Debug)]
pub struct BatchSummary {
    pub traced: usize,
    pub skipped: usize,
    pub failures: Vec<TriageFailure>,
}

struct BatchState {
    traced: usize,
    failures: Vec<TriageFailure>,
    store_error: Option<TraceStoreError>,
}

/// Triage every pair not already in the store, with up to `parallelism`
/// pairs in flight. Failures are collected per pair and never block the
/// rest of the batch; a store write error stops the run.
pub fn triage_batch(
    items: &[(CodePair, PairMetrics)],
    taxonomy: &Taxonomy,
    backend: &dyn ReasoningBackend,
    store: &TraceStore,
    parallelism: usize,
) -> Result<BatchSummary, TraceStoreError> {
    let done = store.completed_ids()?;
    let pending: Vec<&(CodePair, PairMetrics)> = items
        .iter()
        .filter(|(pair, _)| !done.contains(&pair.pair_id))
        .collect();
    let skipped = items.len() - pending.len();
    let next = AtomicUsize::new(0);
    let state = Mutex::new(BatchState {
        traced: 0,
        failures: Vec::new(),
        store_error: None,
    });
    let workers = parallelism.max(1).min(pending.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((pair, metrics)) = pending.get(i) else {
                    break;
                };
                let outcome = triage_pair(pair, metrics, taxonomy, backend);
                let mut state = state.lock().unwrap();
                if state.store_error.is_some() {
                    break;
                }
                match outcome {
                    Ok(trace) => match store.append(&trace) {
                        Ok(()) => state.traced += 1,
                        Err(e) => {
                            state.store_error = Some(e);
                            break;
                        }
                    },
                    Err(failure) => state.failures.push(failure),
                }
            });
        }
    });
    let state = state.into_inner().unwrap();
    if let Some(e) = state.store_error {
        return Err(e);
    }
    let mut failures = state.failures;
    failures.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    Ok(BatchSummary {
        traced: state.traced,
        skipped,
        failures,
    })
}
