//! Domain types for experience elements and the validation rules over them.
//!
//! Everything here is an immutable value; operations are pure and safe to
//! call from multiple threads.

use std::cmp::Ordering;
use std::fmt;

use chrono::NaiveDate;
use thiserror::Error;

/// One customization factor / characteristic pair of a characterization vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    pub category: String,
    pub name: String,
    pub value: String,
}

impl Factor {
    pub fn new(
        category: impl Into<String>,
        name: impl Into<String>,
        value: impl Into<String>,
    ) -> Self {
        Factor {
            category: category.into(),
            name: name.into(),
            value: value.into(),
        }
    }
}

/// The environment in which an experience element is valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterizationVector {
    pub id: String,
    pub factors: Vec<Factor>,
}

/// How an experience element was validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignificanceKind {
    FormalExperiment,
    CaseStudy,
    Survey,
}

impl SignificanceKind {
    /// Kind-dominant strength: formal experiment > case study > survey.
    fn strength(self) -> u8 {
        match self {
            SignificanceKind::FormalExperiment => 2,
            SignificanceKind::CaseStudy => 1,
            SignificanceKind::Survey => 0,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            SignificanceKind::FormalExperiment => "formal_experiment",
            SignificanceKind::CaseStudy => "case_study",
            SignificanceKind::Survey => "survey",
        }
    }

    /// Human-readable form used in reports ("case study", not "case_study").
    pub fn display(self, count: u32) -> String {
        let noun = match (self, count) {
            (SignificanceKind::FormalExperiment, 1) => "formal experiment",
            (SignificanceKind::FormalExperiment, _) => "formal experiments",
            (SignificanceKind::CaseStudy, 1) => "case study",
            (SignificanceKind::CaseStudy, _) => "case studies",
            (SignificanceKind::Survey, 1) => "survey",
            (SignificanceKind::Survey, _) => "surveys",
        };
        format!("{count} {noun}")
    }
}

/// Validation strength of an element: how it was validated and how many
/// independent times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Significance {
    pub kind: SignificanceKind,
    pub count: u32,
}

impl Significance {
    pub fn new(kind: SignificanceKind, count: u32) -> Self {
        debug_assert!(count >= 1);
        Significance { kind, count }
    }

    pub fn case_study(count: u32) -> Self {
        Significance::new(SignificanceKind::CaseStudy, count)
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.display(self.count))
    }
}

/// Total order over significance values: kind dominates, count breaks ties.
impl Ord for Significance {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind
            .strength()
            .cmp(&other.kind.strength())
            .then(self.count.cmp(&other.count))
    }
}

impl PartialOrd for Significance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Rank two significance values under the kind-dominant total order.
pub fn significance_rank(a: &Significance, b: &Significance) -> Ordering {
    a.cmp(b)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignificanceError {
    #[error("cannot merge significance of kind {0} with kind {1}")]
    KindMismatch(&'static str, &'static str),
}

/// Accumulate two validations of the same kind. Cross-kind aggregation is
/// rejected rather than coerced.
pub fn merge_significance(
    a: &Significance,
    b: &Significance,
) -> Result<Significance, SignificanceError> {
    if a.kind != b.kind {
        return Err(SignificanceError::KindMismatch(
            a.kind.keyword(),
            b.kind.keyword(),
        ));
    }
    Ok(Significance::new(a.kind, a.count + b.count))
}

/// A technology an experience element can make a statement about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TechnologyRef {
    pub name: String,
    pub version: Option<String>,
}

impl TechnologyRef {
    pub fn new(name: impl Into<String>) -> Self {
        TechnologyRef {
            name: name.into(),
            version: None,
        }
    }
}

/// The five facets of a GQM goal. `context` references a
/// characterization-vector id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GqmGoal {
    pub object: String,
    pub purpose: String,
    pub quality_focus: String,
    /// True when the quality focus was filled in from the model sub-kind
    /// rather than given explicitly.
    pub quality_focus_derived: bool,
    pub viewpoint: String,
    pub context: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricScale {
    Category,
    Hours,
    Count,
    Ratio,
    Text,
}

impl MetricScale {
    pub fn keyword(self) -> &'static str {
        match self {
            MetricScale::Category => "category",
            MetricScale::Hours => "hours",
            MetricScale::Count => "count",
            MetricScale::Ratio => "ratio",
            MetricScale::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricDef {
    pub name: String,
    pub scale: MetricScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorKind {
    Distribution,
    CumulativeDistribution,
    Sum,
    Mean,
    Count,
}

impl IndicatorKind {
    pub fn keyword(self) -> &'static str {
        match self {
            IndicatorKind::Distribution => "distribution",
            IndicatorKind::CumulativeDistribution => "cumulative_distribution",
            IndicatorKind::Sum => "sum",
            IndicatorKind::Mean => "mean",
            IndicatorKind::Count => "count",
        }
    }

    pub fn is_distribution(self) -> bool {
        matches!(
            self,
            IndicatorKind::Distribution | IndicatorKind::CumulativeDistribution
        )
    }
}

/// One function from input variables (group keys) to output variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorDef {
    pub name: String,
    pub kind: IndicatorKind,
    pub value_metric: String,
    pub group_by: Option<String>,
    pub order: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelType {
    ProjectOriented,
    ProcessOriented,
    ProductOriented,
}

impl ModelType {
    pub fn keyword(self) -> &'static str {
        match self {
            ModelType::ProjectOriented => "project_oriented",
            ModelType::ProcessOriented => "process_oriented",
            ModelType::ProductOriented => "product_oriented",
        }
    }

    pub fn display(self) -> &'static str {
        match self {
            ModelType::ProjectOriented => "project-oriented",
            ModelType::ProcessOriented => "process-oriented",
            ModelType::ProductOriented => "product-oriented",
        }
    }
}

/// A labeled observation text (O1, O2, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub label: String,
    pub text: String,
}

/// A labeled text citing earlier labels, e.g. "I3 (O2)" or "C1 (I3)".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitedText {
    pub label: String,
    pub cites: Vec<String>,
    pub text: String,
}

/// Packaged measurement result: GQM goal facets, exactly one indicator, and
/// the observation / interpretation / consequence chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualityModel {
    pub id: String,
    pub name: String,
    pub model_type: ModelType,
    pub sub_kind: Option<String>,
    pub significance: Significance,
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
    pub goal: GqmGoal,
    pub question: String,
    pub metrics: Vec<MetricDef>,
    pub indicators: Vec<IndicatorDef>,
    pub observations: Vec<Observation>,
    pub interpretations: Vec<CitedText>,
    pub consequences: Vec<CitedText>,
    pub references: Vec<String>,
    pub additional_docs: Vec<String>,
}

impl QualityModel {
    /// The single indicator of a valid model.
    pub fn indicator(&self) -> &IndicatorDef {
        &self.indicators[0]
    }
}

/// Body of a lesson learned: a plain observation or a problem/solution pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LessonBody {
    Observation {
        observation: String,
    },
    ProblemSolution {
        problem: String,
        cause: String,
        solution_reactive: Option<String>,
        solution_preventive: Option<String>,
        log: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LessonLearned {
    pub id: String,
    pub topic: Vec<String>,
    pub situation: String,
    pub significance: Significance,
    pub context: String,
    pub references: Vec<String>,
    pub additional_docs: Vec<String>,
    pub body: LessonBody,
}

/// Referenceable stand-in for a full process model; carries only the ordered
/// phase identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessModelStub {
    pub id: String,
    pub name: String,
    pub phases: Vec<String>,
}

/// Progress of a measurement program through the six GQM steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementProgram {
    pub id: String,
    pub plan: String,
    pub step: u8,
    pub history: Vec<(u8, chrono::DateTime<chrono::Utc>)>,
}

impl MeasurementProgram {
    pub fn new(id: impl Into<String>, plan: impl Into<String>) -> Self {
        MeasurementProgram {
            id: id.into(),
            plan: plan.into(),
            step: 1,
            history: vec![(1, chrono::Utc::now())],
        }
    }
}

pub const FINAL_STEP: u8 = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("measurement program {0} is already packaged (step 6)")]
    AlreadyPackaged(String),
}

/// Move a measurement program to its next step. The six steps are strictly
/// sequential; there is no skipping path.
pub fn advance_program(p: &MeasurementProgram) -> Result<MeasurementProgram, ProgramError> {
    if p.step >= FINAL_STEP {
        return Err(ProgramError::AlreadyPackaged(p.id.clone()));
    }
    let mut next = p.clone();
    next.step += 1;
    next.history.push((next.step, chrono::Utc::now()));
    Ok(next)
}

/// A broken invariant, named by field and rule. Violations are data, not
/// faults.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn blank(s: &str) -> bool {
    s.trim().is_empty()
}

pub fn validate_vector(cv: &CharacterizationVector) -> Vec<Violation> {
    let mut v = Vec::new();
    if blank(&cv.id) {
        v.push(Violation::new("id", "must be non-empty"));
    }
    if cv.factors.is_empty() {
        v.push(Violation::new("factors", "must contain at least one factor"));
    }
    let mut seen = std::collections::HashSet::new();
    for f in &cv.factors {
        if blank(&f.category) || blank(&f.name) || blank(&f.value) {
            v.push(Violation::new(
                "factors",
                format!("factor '{}'/'{}' has a blank field", f.category, f.name),
            ));
        }
        if !seen.insert((f.category.clone(), f.name.clone())) {
            v.push(Violation::new(
                "factors",
                format!("duplicate factor '{}'/'{}'", f.category, f.name),
            ));
        }
    }
    v
}

pub fn validate_process_model(pm: &ProcessModelStub) -> Vec<Violation> {
    let mut v = Vec::new();
    if blank(&pm.id) {
        v.push(Violation::new("id", "must be non-empty"));
    }
    if blank(&pm.name) {
        v.push(Violation::new("name", "must be non-empty"));
    }
    let mut seen = std::collections::HashSet::new();
    for p in &pm.phases {
        if !seen.insert(p.as_str()) {
            v.push(Violation::new("phases", format!("duplicate phase '{p}'")));
        }
    }
    v
}

pub fn validate_quality_model(qm: &QualityModel) -> Vec<Violation> {
    let mut v = Vec::new();
    if blank(&qm.id) {
        v.push(Violation::new("id", "must be non-empty"));
    }
    if blank(&qm.name) {
        v.push(Violation::new("name", "must be non-empty"));
    }
    if qm.indicators.len() != 1 {
        v.push(Violation::new(
            "indicator",
            format!("indicator count {} ≠ 1", qm.indicators.len()),
        ));
    }
    if qm.period_start > qm.period_end {
        v.push(Violation::new(
            "period",
            format!("start {} after end {}", qm.period_start, qm.period_end),
        ));
    }
    for (facet, value) in [
        ("goal.object", &qm.goal.object),
        ("goal.purpose", &qm.goal.purpose),
        ("goal.quality_focus", &qm.goal.quality_focus),
        ("goal.viewpoint", &qm.goal.viewpoint),
        ("goal.context", &qm.goal.context),
    ] {
        if blank(value) {
            v.push(Violation::new(facet, "must be non-empty"));
        }
    }
    if blank(&qm.question) {
        v.push(Violation::new("question", "must be non-empty"));
    }

    let mut metric_names = std::collections::HashSet::new();
    for m in &qm.metrics {
        if !metric_names.insert(m.name.as_str()) {
            v.push(Violation::new(
                "metrics",
                format!("duplicate metric '{}'", m.name),
            ));
        }
    }
    for ind in &qm.indicators {
        if !metric_names.contains(ind.value_metric.as_str()) {
            v.push(Violation::new(
                "indicator",
                format!(
                    "value metric '{}' is not a declared metric",
                    ind.value_metric
                ),
            ));
        }
        match &ind.group_by {
            Some(g) if !metric_names.contains(g.as_str()) => {
                v.push(Violation::new(
                    "indicator",
                    format!("group-by metric '{g}' is not a declared metric"),
                ));
            }
            None if ind.kind.is_distribution() => {
                v.push(Violation::new(
                    "indicator",
                    format!("{} indicator requires a group-by metric", ind.kind.keyword()),
                ));
            }
            _ => {}
        }
    }

    // Label uniqueness and citation integrity across the O -> I -> C chain.
    let mut labels = std::collections::HashSet::new();
    let mut obs_labels = std::collections::HashSet::new();
    for o in &qm.observations {
        if !labels.insert(o.label.as_str()) {
            v.push(Violation::new(
                "observations",
                format!("duplicate label '{}'", o.label),
            ));
        }
        obs_labels.insert(o.label.as_str());
    }
    let mut interp_labels = std::collections::HashSet::new();
    for i in &qm.interpretations {
        if !labels.insert(i.label.as_str()) {
            v.push(Violation::new(
                "interpretations",
                format!("duplicate label '{}'", i.label),
            ));
        }
        interp_labels.insert(i.label.as_str());
        if i.cites.is_empty() {
            v.push(Violation::new(
                "interpretations",
                format!("'{}' must cite at least one observation", i.label),
            ));
        }
        for c in &i.cites {
            if !obs_labels.contains(c.as_str()) {
                v.push(Violation::new(
                    "interpretations",
                    format!("'{}' cites unknown observation '{}'", i.label, c),
                ));
            }
        }
    }
    for c in &qm.consequences {
        if !labels.insert(c.label.as_str()) {
            v.push(Violation::new(
                "consequences",
                format!("duplicate label '{}'", c.label),
            ));
        }
        if c.cites.is_empty() {
            v.push(Violation::new(
                "consequences",
                format!("'{}' must cite at least one interpretation", c.label),
            ));
        }
        for cited in &c.cites {
            if !interp_labels.contains(cited.as_str()) {
                v.push(Violation::new(
                    "consequences",
                    format!("'{}' cites unknown interpretation '{}'", c.label, cited),
                ));
            }
        }
    }
    v
}

pub fn validate_lesson(ll: &LessonLearned) -> Vec<Violation> {
    let mut v = Vec::new();
    if blank(&ll.id) {
        v.push(Violation::new("id", "must be non-empty"));
    }
    if ll.topic.is_empty() {
        v.push(Violation::new("topic", "must contain at least one keyword"));
    }
    for k in &ll.topic {
        if blank(k) {
            v.push(Violation::new("topic", "keywords must be non-blank"));
        }
    }
    if blank(&ll.situation) {
        v.push(Violation::new("situation", "must be non-empty"));
    }
    if blank(&ll.context) {
        v.push(Violation::new("context", "must be non-empty"));
    }
    match &ll.body {
        LessonBody::Observation { observation } => {
            if blank(observation) {
                v.push(Violation::new("observation", "must be non-empty"));
            }
        }
        LessonBody::ProblemSolution {
            problem,
            cause,
            solution_reactive,
            solution_preventive,
            ..
        } => {
            if blank(problem) {
                v.push(Violation::new("problem", "must be non-empty"));
            }
            if blank(cause) {
                v.push(Violation::new("cause", "must be non-empty"));
            }
            if solution_reactive.is_none() && solution_preventive.is_none() {
                v.push(Violation::new(
                    "solution",
                    "at least one of solution_reactive / solution_preventive required",
                ));
            }
        }
    }
    v
}
