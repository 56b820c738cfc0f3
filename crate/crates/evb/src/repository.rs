//! File-backed experience base: persistence in canonical `.evb` form plus the
//! retrieval operations (keyword search, context matching, reference
//! integrity).
//!
//! Layout: one element per file under `<root>/<kind>/<id>.evb`; datasets as
//! `<root>/dataset/<id>.csv`. Indices are rebuilt by scanning on open. Writes
//! are write-new-then-rename, one writer at a time; readers share freely.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::dsl::{parse, serialize, Document, Element, ElementKind, ParseError};
use crate::measurement::{ingest_csv, to_csv, MeasurementDataset};
use crate::model::{CharacterizationVector, LessonBody, Significance, TechnologyRef, Violation};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {} parse error(s)", errors.len())]
    Parse {
        path: PathBuf,
        errors: Vec<ParseError>,
    },
    #[error("duplicate id `{0}` (pass overwrite to replace)")]
    DuplicateId(String),
    #[error("element `{id}` failed validation: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    ValidationFailed {
        id: String,
        violations: Vec<Violation>,
    },
    #[error("id `{0}` is not usable as a file name")]
    BadId(String),
    #[error("context `{0}` does not resolve to a characterization vector")]
    UnresolvedContext(String),
    #[error("subject `{0}` does not resolve to an element of the required kind")]
    UnresolvedSubject(String),
    #[error("result `{0}` does not resolve to a quality model")]
    UnresolvedResult(String),
    #[error("a technology_applied statement requires a result")]
    MissingResult,
    #[error("only technology_applied statements carry a result")]
    UnexpectedResult,
    #[error("lesson `{0}` is an observation; problem_solved requires a problem/solution pair")]
    NotProblemSolution(String),
    #[error("no element with id `{0}`")]
    NotFound(String),
    #[error("no dataset with id `{0}`")]
    DatasetNotFound(String),
    #[error("dataset `{id}` is malformed: {message}")]
    BadDataset { id: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub struct Store {
    root: PathBuf,
    elements: BTreeMap<String, Element>,
    /// lowercase topic keyword -> lesson ids
    keyword_index: HashMap<String, Vec<String>>,
}

/// How well a candidate's context matches a query vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchScore {
    pub id: String,
    pub score: f64,
    pub matched: usize,
    pub query_factors: usize,
}

impl Store {
    /// Open a store rooted at `root`, rebuilding indices by scanning. A
    /// missing root is an empty store.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let mut store = Store {
            root,
            elements: BTreeMap::new(),
            keyword_index: HashMap::new(),
        };
        let mut paths = Vec::new();
        for kind in ElementKind::ALL {
            let dir = store.root.join(kind.keyword());
            if !dir.is_dir() {
                continue;
            }
            let entries = std::fs::read_dir(&dir).map_err(io_err(&dir))?;
            for entry in entries {
                let path = entry.map_err(io_err(&dir))?.path();
                if path.extension().and_then(|e| e.to_str()) == Some("evb") {
                    paths.push(path);
                }
            }
        }

        #[cfg(feature = "parallel")]
        let docs: Vec<Result<(PathBuf, Document), StoreError>> =
            paths.par_iter().map(|p| read_document(p)).collect();
        #[cfg(not(feature = "parallel"))]
        let docs: Vec<Result<(PathBuf, Document), StoreError>> =
            paths.iter().map(|p| read_document(p)).collect();

        for doc in docs {
            let (path, doc) = doc?;
            for el in doc.elements {
                if store.elements.contains_key(el.id()) {
                    return Err(StoreError::Parse {
                        path,
                        errors: vec![],
                    });
                }
                store.index_element(&el);
                store.elements.insert(el.id().to_string(), el);
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.elements.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Option<&Element> {
        self.elements.get(id)
    }

    /// A topic keyword is searchable as a whole ("Push technology") and by
    /// each of its whitespace-separated tokens ("push"), never by substring.
    fn index_element(&mut self, el: &Element) {
        if let Element::Lesson(ll) = el {
            for kw in &ll.topic {
                let lower = kw.to_lowercase();
                let mut terms: Vec<&str> = lower.split_whitespace().collect();
                terms.push(lower.trim());
                for term in terms {
                    let ids = self.keyword_index.entry(term.to_string()).or_default();
                    if !ids.contains(&ll.id) {
                        ids.push(ll.id.clone());
                    }
                }
            }
        }
    }

    fn unindex_element(&mut self, id: &str) {
        for ids in self.keyword_index.values_mut() {
            ids.retain(|i| i != id);
        }
    }

    /// Durably write one element in canonical form. Overwriting an existing
    /// id requires the explicit flag; the store is unchanged on any error.
    pub fn put(&mut self, element: Element, overwrite: bool) -> Result<String, StoreError> {
        let id = element.id().to_string();
        if id.is_empty() || id.contains(['/', '\\']) || id.contains("..") {
            return Err(StoreError::BadId(id));
        }
        let violations = element.validate();
        if !violations.is_empty() {
            return Err(StoreError::ValidationFailed { id, violations });
        }
        if !overwrite && self.elements.contains_key(&id) {
            return Err(StoreError::DuplicateId(id));
        }

        let dir = self.root.join(element.kind().keyword());
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("{id}.evb"));
        let text = serialize(&Document {
            elements: vec![element.clone()],
        });
        write_atomic(&path, text.as_bytes())?;

        if self.elements.contains_key(&id) {
            self.unindex_element(&id);
        }
        self.index_element(&element);
        self.elements.insert(id.clone(), element);
        Ok(id)
    }

    /// Case-insensitive whole-keyword search over lesson topics. Results are
    /// ranked by matched-keyword count, then significance, then id.
    pub fn find_by_keywords(&self, keywords: &[String]) -> Vec<(String, usize)> {
        let query: HashSet<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for kw in &query {
            if let Some(ids) = self.keyword_index.get(kw) {
                for id in ids {
                    *counts.entry(id.as_str()).or_default() += 1;
                }
            }
        }
        let mut hits: Vec<(String, usize)> = counts
            .into_iter()
            .map(|(id, n)| (id.to_string(), n))
            .collect();
        hits.sort_by(|(id_a, n_a), (id_b, n_b)| {
            n_b.cmp(n_a)
                .then_with(|| {
                    let sa = self.significance_of(id_a);
                    let sb = self.significance_of(id_b);
                    sb.cmp(&sa)
                })
                .then_with(|| id_a.cmp(id_b))
        });
        hits
    }

    fn significance_of(&self, id: &str) -> Option<Significance> {
        self.get(id).and_then(|el| el.significance())
    }

    fn resolve_context_vector(&self, candidate: &str) -> Result<&CharacterizationVector, StoreError> {
        let el = self
            .get(candidate)
            .ok_or_else(|| StoreError::UnresolvedContext(candidate.to_string()))?;
        let cv_id = match el {
            Element::Context(cv) => return Ok(cv),
            _ => el
                .context_id()
                .ok_or_else(|| StoreError::UnresolvedContext(candidate.to_string()))?,
        };
        match self.get(cv_id) {
            Some(Element::Context(cv)) => Ok(cv),
            _ => Err(StoreError::UnresolvedContext(candidate.to_string())),
        }
    }

    /// Score candidates against a query vector: shared (category, name, value)
    /// triples over query triples. Ranked by score, then significance, then id.
    pub fn match_context(
        &self,
        query: &CharacterizationVector,
        candidates: &[String],
    ) -> Result<Vec<MatchScore>, StoreError> {
        let query_triples: HashSet<(&str, &str, &str)> = query
            .factors
            .iter()
            .map(|f| (f.category.as_str(), f.name.as_str(), f.value.as_str()))
            .collect();
        let query_factors = query_triples.len();

        let score_one = |id: &String| -> Result<MatchScore, StoreError> {
            let cv = self.resolve_context_vector(id)?;
            let matched = cv
                .factors
                .iter()
                .filter(|f| {
                    query_triples.contains(&(f.category.as_str(), f.name.as_str(), f.value.as_str()))
                })
                .count();
            let score = if query_factors == 0 {
                0.0
            } else {
                matched as f64 / query_factors as f64
            };
            Ok(MatchScore {
                id: id.clone(),
                score,
                matched,
                query_factors,
            })
        };

        #[cfg(feature = "parallel")]
        let scored: Result<Vec<MatchScore>, StoreError> =
            candidates.par_iter().map(score_one).collect();
        #[cfg(not(feature = "parallel"))]
        let scored: Result<Vec<MatchScore>, StoreError> =
            candidates.iter().map(score_one).collect();
        let mut scored = scored?;

        scored.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| {
                    let sa = self.significance_of(&a.id);
                    let sb = self.significance_of(&b.id);
                    sb.cmp(&sa)
                })
                .then_with(|| a.id.cmp(&b.id))
        });
        Ok(scored)
    }

    /// Every reference that resolves to no stored element, as
    /// (source id, missing id) pairs in deterministic order.
    pub fn check_references(&self) -> Vec<(String, String)> {
        let mut dangling = Vec::new();
        for el in self.elements.values() {
            let mut targets: Vec<&str> = el.references().iter().map(String::as_str).collect();
            if let Some(ctx) = el.context_id() {
                targets.push(ctx);
            }
            for t in targets {
                if !self.elements.contains_key(t) {
                    dangling.push((el.id().to_string(), t.to_string()));
                }
            }
        }
        dangling.sort();
        dangling.dedup();
        dangling
    }

    pub fn put_dataset(&self, ds: &MeasurementDataset, overwrite: bool) -> Result<(), StoreError> {
        if ds.id.is_empty() || ds.id.contains(['/', '\\']) || ds.id.contains("..") {
            return Err(StoreError::BadId(ds.id.clone()));
        }
        let dir = self.root.join("dataset");
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("{}.csv", ds.id));
        if !overwrite && path.exists() {
            return Err(StoreError::DuplicateId(ds.id.clone()));
        }
        write_atomic(&path, to_csv(ds).as_bytes())
    }

    pub fn get_dataset(&self, id: &str) -> Result<MeasurementDataset, StoreError> {
        let path = self.root.join("dataset").join(format!("{id}.csv"));
        if !path.is_file() {
            return Err(StoreError::DatasetNotFound(id.to_string()));
        }
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let (ds, errors) = ingest_csv(id, &text).map_err(|e| StoreError::BadDataset {
            id: id.to_string(),
            message: e.to_string(),
        })?;
        if let Some(first) = errors.first() {
            return Err(StoreError::BadDataset {
                id: id.to_string(),
                message: first.to_string(),
            });
        }
        Ok(ds)
    }
}

fn read_document(path: &Path) -> Result<(PathBuf, Document), StoreError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let doc = parse(&text).map_err(|errors| StoreError::Parse {
        path: path.to_path_buf(),
        errors,
    })?;
    Ok((path.to_path_buf(), doc))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

/// The three fact patterns an evidence statement can instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvidenceKind {
    TechnologyApplied,
    ProcessFollowed,
    ProblemSolved,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvidenceSubject {
    Technology(TechnologyRef),
    Element(String),
}

/// A validated statement linking existing elements; rendering is the
/// reporting layer's job.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceStatement {
    pub kind: EvidenceKind,
    pub subject: EvidenceSubject,
    pub context: String,
    pub result: Option<String>,
    pub significance: Significance,
}

pub fn make_evidence_statement(
    store: &Store,
    kind: EvidenceKind,
    subject: EvidenceSubject,
    context: &str,
    result: Option<&str>,
    significance: Significance,
) -> Result<EvidenceStatement, StoreError> {
    match store.get(context) {
        Some(Element::Context(_)) => {}
        _ => return Err(StoreError::UnresolvedContext(context.to_string())),
    }

    match kind {
        EvidenceKind::TechnologyApplied => {
            if !matches!(subject, EvidenceSubject::Technology(_)) {
                return Err(StoreError::UnresolvedSubject(
                    "technology_applied requires a technology subject".into(),
                ));
            }
            let result_id = result.ok_or(StoreError::MissingResult)?;
            match store.get(result_id) {
                Some(Element::QualityModel(_)) => {}
                _ => return Err(StoreError::UnresolvedResult(result_id.to_string())),
            }
        }
        EvidenceKind::ProcessFollowed => {
            if result.is_some() {
                return Err(StoreError::UnexpectedResult);
            }
            let EvidenceSubject::Element(id) = &subject else {
                return Err(StoreError::UnresolvedSubject("process_followed requires a process-model id".into()));
            };
            match store.get(id) {
                Some(Element::ProcessModel(_)) => {}
                _ => return Err(StoreError::UnresolvedSubject(id.clone())),
            }
        }
        EvidenceKind::ProblemSolved => {
            if result.is_some() {
                return Err(StoreError::UnexpectedResult);
            }
            let EvidenceSubject::Element(id) = &subject else {
                return Err(StoreError::UnresolvedSubject("problem_solved requires a lesson id".into()));
            };
            match store.get(id) {
                Some(Element::Lesson(ll)) => match ll.body {
                    LessonBody::ProblemSolution { .. } => {}
                    LessonBody::Observation { .. } => {
                        return Err(StoreError::NotProblemSolution(id.clone()));
                    }
                },
                _ => return Err(StoreError::UnresolvedSubject(id.clone())),
            }
        }
    }

    Ok(EvidenceStatement {
        kind,
        subject,
        context: context.to_string(),
        result: result.map(String::from),
        significance,
    })
}
