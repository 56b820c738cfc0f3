//! The `.evb` evidence format: parser and canonical serializer.
//!
//! One textual document holds any number of experience elements
//! (characterization vectors, quality models, lessons learned, process-model
//! stubs). The serializer emits a canonical form: fixed field order per
//! element kind, two-space indentation, one blank line between elements, LF
//! line endings.

mod lexer;
mod parser;
mod serializer;

use std::fmt;

use crate::model::{
    validate_lesson, validate_process_model, validate_quality_model, validate_vector,
    CharacterizationVector, LessonLearned, ProcessModelStub, QualityModel, Significance,
    Violation,
};

pub use serializer::serialize;

/// Position of a token in the source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Option<String>,
}

impl ParseError {
    pub(crate) fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
            expected: None,
        }
    }

    pub(crate) fn with_expected(
        span: SourceSpan,
        message: impl Into<String>,
        expected: impl Into<String>,
    ) -> Self {
        ParseError {
            span,
            message: message.into(),
            expected: Some(expected.into()),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.column, self.message)?;
        if let Some(exp) = &self.expected {
            write!(f, " (expected {exp})")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Context,
    QualityModel,
    Lesson,
    ProcessModel,
}

impl ElementKind {
    /// Keyword in the DSL and directory name in a store.
    pub fn keyword(self) -> &'static str {
        match self {
            ElementKind::Context => "context",
            ElementKind::QualityModel => "quality_model",
            ElementKind::Lesson => "lesson",
            ElementKind::ProcessModel => "process_model",
        }
    }

    pub const ALL: [ElementKind; 4] = [
        ElementKind::Context,
        ElementKind::QualityModel,
        ElementKind::Lesson,
        ElementKind::ProcessModel,
    ];
}

/// Any experience element a document can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Context(CharacterizationVector),
    QualityModel(QualityModel),
    Lesson(LessonLearned),
    ProcessModel(ProcessModelStub),
}

impl Element {
    pub fn id(&self) -> &str {
        match self {
            Element::Context(cv) => &cv.id,
            Element::QualityModel(qm) => &qm.id,
            Element::Lesson(ll) => &ll.id,
            Element::ProcessModel(pm) => &pm.id,
        }
    }

    pub fn kind(&self) -> ElementKind {
        match self {
            Element::Context(_) => ElementKind::Context,
            Element::QualityModel(_) => ElementKind::QualityModel,
            Element::Lesson(_) => ElementKind::Lesson,
            Element::ProcessModel(_) => ElementKind::ProcessModel,
        }
    }

    pub fn significance(&self) -> Option<Significance> {
        match self {
            Element::QualityModel(qm) => Some(qm.significance),
            Element::Lesson(ll) => Some(ll.significance),
            _ => None,
        }
    }

    /// The characterization-vector id this element is scoped by, if any.
    pub fn context_id(&self) -> Option<&str> {
        match self {
            Element::QualityModel(qm) => Some(&qm.goal.context),
            Element::Lesson(ll) => Some(&ll.context),
            _ => None,
        }
    }

    /// Outgoing `@id` references (excluding the context reference).
    pub fn references(&self) -> &[String] {
        match self {
            Element::QualityModel(qm) => &qm.references,
            Element::Lesson(ll) => &ll.references,
            _ => &[],
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        match self {
            Element::Context(cv) => validate_vector(cv),
            Element::QualityModel(qm) => validate_quality_model(qm),
            Element::Lesson(ll) => validate_lesson(ll),
            Element::ProcessModel(pm) => validate_process_model(pm),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub elements: Vec<Element>,
}

/// Parse a document. Element-level invariant violations are reported as parse
/// errors carrying the element's source span.
pub fn parse(text: &str) -> Result<Document, Vec<ParseError>> {
    parser::parse_document(text)
}
