//! The energy-smell catalog: 12 categories, 65 root causes, impact metadata.
//!
//! The catalog is data, not code. A canonical document ships embedded in the
//! binary; external documents with the same schema can be loaded and validated,
//! and may add root causes when they set `"extended": true`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const CATALOG_JSON: &str = include_str!("catalog.json");

/// Expected root-cause count per category in a non-extended document,
/// indexed C1..C12.
const PER_CATEGORY_COUNTS: [usize; 12] = [8, 3, 7, 8, 4, 7, 5, 4, 4, 6, 5, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbstractionLevel {
    Implementation,
    Design,
    Architecture,
    Hardware,
}

impl AbstractionLevel {
    /// Median per-fix savings for categories the catalog carries no explicit
    /// figure for, in joules.
    pub fn fallback_median_savings_j(self) -> f64 {
        match self {
            AbstractionLevel::Implementation => 1146.0,
            AbstractionLevel::Design => 1537.0,
            AbstractionLevel::Architecture => 415.0,
            AbstractionLevel::Hardware => 561.0,
        }
    }

    fn expected_for(category_id: &str) -> Option<AbstractionLevel> {
        match category_id {
            "C1" | "C2" | "C3" | "C4" | "C6" | "C10" => Some(AbstractionLevel::Implementation),
            "C5" | "C7" | "C8" => Some(AbstractionLevel::Design),
            "C9" | "C11" => Some(AbstractionLevel::Architecture),
            "C12" => Some(AbstractionLevel::Hardware),
            _ => None,
        }
    }
}

/// Per-category impact figures. All fields are optional because the source
/// data quantifies only some categories; a present struct must carry at least
/// one figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ImpactStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_savings_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prevalence_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_power_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    pub name: String,
    pub description: String,
    pub abstraction_level: AbstractionLevel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub impact: Option<ImpactStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCause {
    pub id: String,
    pub category_id: String,
    pub name: String,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example_hint: Option<String>,
    pub statically_detectable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub version: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub extended: bool,
    pub categories: Vec<Category>,
    pub root_causes: Vec<RootCause>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// A successful [`Taxonomy::find`] result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entry<'a> {
    Category(&'a Category),
    RootCause(&'a RootCause),
}

impl<'a> Entry<'a> {
    pub fn name(&self) -> &'a str {
        match self {
            Entry::Category(c) => &c.name,
            Entry::RootCause(r) => &r.name,
        }
    }
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("taxonomy document is not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("category id {0} is not of the form C1..C12")]
    BadCategoryId(String),
    #[error("root cause id {0} is not of the form C<n>.S<m>")]
    BadRootCauseId(String),
    #[error("expected 12 categories, found {0}")]
    CategoryCount(usize),
    #[error("expected 65 root causes, found {0}")]
    RootCauseCount(usize),
    #[error("category {category} holds {expected} root causes, found {found}")]
    PerCategoryCount {
        category: String,
        expected: usize,
        found: usize,
    },
    #[error("root cause {id} references unknown category {category}")]
    UnknownCategory { id: String, category: String },
    #[error("root cause {id} is filed under {category}, which does not match its id prefix")]
    PrefixMismatch { id: String, category: String },
    #[error("category {id} has abstraction level {found:?}, expected {expected:?}")]
    WrongLevel {
        id: String,
        found: AbstractionLevel,
        expected: AbstractionLevel,
    },
    #[error("impact stats for {id}: {reason}")]
    BadImpact { id: String, reason: String },
    #[error("no entry with id {0}")]
    NotFound(String),
}

impl Taxonomy {
    /// The embedded canonical catalog.
    pub fn canonical() -> Taxonomy {
        Taxonomy::from_json(CATALOG_JSON).expect("embedded catalog validates")
    }

    /// Parse and validate a taxonomy document.
    pub fn from_json(data: &str) -> Result<Taxonomy, TaxonomyError> {
        let taxonomy: Taxonomy = serde_json::from_str(data)?;
        taxonomy.validate()?;
        Ok(taxonomy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("taxonomy serializes")
    }

    fn validate(&self) -> Result<(), TaxonomyError> {
        if self.categories.len() != 12 {
            return Err(TaxonomyError::CategoryCount(self.categories.len()));
        }

        let mut ids = BTreeSet::new();
        for category in &self.categories {
            let number = parse_category_number(&category.id)
                .ok_or_else(|| TaxonomyError::BadCategoryId(category.id.clone()))?;
            if !(1..=12).contains(&number) {
                return Err(TaxonomyError::BadCategoryId(category.id.clone()));
            }
            if !ids.insert(category.id.clone()) {
                return Err(TaxonomyError::DuplicateId(category.id.clone()));
            }
            let expected = AbstractionLevel::expected_for(&category.id)
                .ok_or_else(|| TaxonomyError::BadCategoryId(category.id.clone()))?;
            if category.abstraction_level != expected {
                return Err(TaxonomyError::WrongLevel {
                    id: category.id.clone(),
                    found: category.abstraction_level,
                    expected,
                });
            }
            if let Some(impact) = &category.impact {
                validate_impact(&category.id, impact)?;
            }
        }

        for cause in &self.root_causes {
            if !ids.insert(cause.id.clone()) {
                return Err(TaxonomyError::DuplicateId(cause.id.clone()));
            }
            let (prefix, sub) = match cause.id.split_once(".S") {
                Some(parts) => parts,
                None => return Err(TaxonomyError::BadRootCauseId(cause.id.clone())),
            };
            if parse_category_number(prefix).is_none() || sub.parse::<u32>().is_err() {
                return Err(TaxonomyError::BadRootCauseId(cause.id.clone()));
            }
            if self.category(&cause.category_id).is_none() {
                return Err(TaxonomyError::UnknownCategory {
                    id: cause.id.clone(),
                    category: cause.category_id.clone(),
                });
            }
            if prefix != cause.category_id {
                return Err(TaxonomyError::PrefixMismatch {
                    id: cause.id.clone(),
                    category: cause.category_id.clone(),
                });
            }
        }

        if !self.extended {
            if self.root_causes.len() != 65 {
                return Err(TaxonomyError::RootCauseCount(self.root_causes.len()));
            }
            for (index, expected) in PER_CATEGORY_COUNTS.iter().enumerate() {
                let category = format!("C{}", index + 1);
                let found = self
                    .root_causes
                    .iter()
                    .filter(|cause| cause.category_id == category)
                    .count();
                if found != *expected {
                    return Err(TaxonomyError::PerCategoryCount {
                        category,
                        expected: *expected,
                        found,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn category(&self, id: &str) -> Option<&Category> {
        self.categories.iter().find(|category| category.id == id)
    }

    pub fn root_cause(&self, id: &str) -> Option<&RootCause> {
        self.root_causes.iter().find(|cause| cause.id == id)
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.category(id).is_some() || self.root_cause(id).is_some()
    }

    /// Exact-id lookup across categories and root causes.
    pub fn find(&self, id: &str) -> Result<Entry<'_>, TaxonomyError> {
        if let Some(category) = self.category(id) {
            return Ok(Entry::Category(category));
        }
        if let Some(cause) = self.root_cause(id) {
            return Ok(Entry::RootCause(cause));
        }
        Err(TaxonomyError::NotFound(id.to_string()))
    }

    /// Root causes in a category, in document order.
    pub fn causes_of(&self, category_id: &str) -> Vec<&RootCause> {
        self.root_causes
            .iter()
            .filter(|cause| cause.category_id == category_id)
            .collect()
    }

    /// Per-fix median savings for a category, in joules.
    ///
    /// Uses the category's own impact figure when the document carries one,
    /// otherwise the abstraction-level fallback.
    pub fn severity_weight(&self, category_id: &str) -> Result<f64, TaxonomyError> {
        let category = self
            .category(category_id)
            .ok_or_else(|| TaxonomyError::NotFound(category_id.to_string()))?;
        Ok(category
            .impact
            .as_ref()
            .and_then(|impact| impact.median_savings_j)
            .unwrap_or_else(|| category.abstraction_level.fallback_median_savings_j()))
    }

    /// Category id a root-cause id belongs to ("C3.S7" -> "C3").
    pub fn parent_category(root_cause_id: &str) -> Option<&str> {
        root_cause_id.split_once(".S").map(|(prefix, _)| prefix)
    }
}

fn parse_category_number(id: &str) -> Option<u32> {
    id.strip_prefix('C')?.parse().ok()
}

fn validate_impact(id: &str, impact: &ImpactStats) -> Result<(), TaxonomyError> {
    let bad = |reason: &str| TaxonomyError::BadImpact {
        id: id.to_string(),
        reason: reason.to_string(),
    };
    if impact.median_savings_j.is_none()
        && impact.prevalence_fraction.is_none()
        && impact.mean_power_ratio.is_none()
    {
        return Err(bad("present but empty"));
    }
    if let Some(savings) = impact.median_savings_j {
        if !(savings >= 0.0) {
            return Err(bad("median savings must be >= 0"));
        }
    }
    if let Some(fraction) = impact.prevalence_fraction {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(bad("prevalence fraction must be within [0, 1]"));
        }
    }
    if let Some(ratio) = impact.mean_power_ratio {
        if !(ratio > 0.0) {
            return Err(bad("mean power ratio must be > 0"));
        }
    }
    Ok(())
}
