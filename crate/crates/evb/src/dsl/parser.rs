//! Recursive-descent parser for the `.evb` format.

use std::collections::HashSet;

use chrono::NaiveDate;

use super::lexer::{tokenize, Tok, Token};
use super::{Document, Element, ParseError, SourceSpan};
use crate::model::{
    CharacterizationVector, CitedText, Factor, GqmGoal, IndicatorDef, IndicatorKind, LessonBody,
    LessonLearned, MetricDef, MetricScale, ModelType, Observation, ProcessModelStub, QualityModel,
    Significance, SignificanceKind,
};

pub fn parse_document(text: &str) -> Result<Document, Vec<ParseError>> {
    let tokens = match tokenize(text) {
        Ok(t) => t,
        Err(e) => return Err(vec![e]),
    };
    let mut p = Parser { tokens, pos: 0 };
    let mut elements = Vec::new();
    let mut errors = Vec::new();

    while !p.at_end() {
        let start = p.span();
        match p.parse_element() {
            Ok(el) => elements.push((start, el)),
            Err(e) => {
                errors.push(e);
                p.recover_to_next_element();
            }
        }
    }

    let mut ids = HashSet::new();
    for (span, el) in &elements {
        if !ids.insert(el.id().to_string()) {
            errors.push(ParseError::new(*span, format!("duplicate id `{}`", el.id())));
        }
        for v in el.validate() {
            errors.push(ParseError::new(*span, format!("{}: {v}", el.id())));
        }
    }

    if errors.is_empty() {
        Ok(Document {
            elements: elements.into_iter().map(|(_, el)| el).collect(),
        })
    } else {
        Err(errors)
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn span(&self) -> SourceSpan {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| t.span)
            .unwrap_or(SourceSpan { line: 1, column: 1, length: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self, expected: &str) -> Result<Token, ParseError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| ParseError::with_expected(self.span(), "unexpected end of input", expected))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let desc = want.describe();
        let tok = self.next(&desc)?;
        if tok.tok == want {
            Ok(())
        } else {
            Err(ParseError::with_expected(
                tok.span,
                format!("unexpected {}", tok.tok.describe()),
                desc,
            ))
        }
    }

    fn expect_ident(&mut self, expected: &str) -> Result<(String, SourceSpan), ParseError> {
        let tok = self.next(expected)?;
        match tok.tok {
            Tok::Ident(s) => Ok((s, tok.span)),
            other => Err(ParseError::with_expected(
                tok.span,
                format!("unexpected {}", other.describe()),
                expected,
            )),
        }
    }

    fn expect_str(&mut self, what: &str) -> Result<String, ParseError> {
        let tok = self.next(what)?;
        match tok.tok {
            Tok::Str(s) => Ok(s),
            other => Err(ParseError::with_expected(
                tok.span,
                format!("unexpected {}", other.describe()),
                what,
            )),
        }
    }

    fn expect_ref(&mut self) -> Result<String, ParseError> {
        let tok = self.next("a reference (`@id`)")?;
        match tok.tok {
            Tok::AtRef(s) => Ok(s),
            other => Err(ParseError::with_expected(
                tok.span,
                format!("unexpected {}", other.describe()),
                "a reference (`@id`)",
            )),
        }
    }

    fn expect_date(&mut self) -> Result<NaiveDate, ParseError> {
        let tok = self.next("a date (YYYY-MM-DD)")?;
        match tok.tok {
            Tok::Date(d) => Ok(d),
            other => Err(ParseError::with_expected(
                tok.span,
                format!("unexpected {}", other.describe()),
                "a date (YYYY-MM-DD)",
            )),
        }
    }

    /// Skip forward to the next plausible element start, for error recovery.
    fn recover_to_next_element(&mut self) {
        let mut depth = 0usize;
        while let Some(tok) = self.peek() {
            match tok {
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth = depth.saturating_sub(1),
                Tok::Ident(kw)
                    if depth == 0
                        && matches!(kw.as_str(), "context" | "quality_model" | "lesson" | "process_model") =>
                {
                    return;
                }
                _ => {}
            }
            self.pos += 1;
        }
    }

    fn parse_element(&mut self) -> Result<Element, ParseError> {
        let (kw, span) = self.expect_ident("an element keyword")?;
        match kw.as_str() {
            "context" => self.parse_context().map(Element::Context),
            "quality_model" => self.parse_quality_model().map(Element::QualityModel),
            "lesson" => self.parse_lesson().map(Element::Lesson),
            "process_model" => self.parse_process_model().map(Element::ProcessModel),
            other => Err(ParseError::with_expected(
                span,
                format!("unknown keyword `{other}`"),
                "`context`, `quality_model`, `lesson`, or `process_model`",
            )),
        }
    }

    fn parse_context(&mut self) -> Result<CharacterizationVector, ParseError> {
        let id = self.expect_str("an element id string")?;
        self.expect(Tok::LBrace)?;
        let mut factors = Vec::new();
        while self.peek() != Some(&Tok::RBrace) {
            let category = self.expect_str("a factor category string")?;
            self.expect(Tok::Slash)?;
            let name = self.expect_str("a factor name string")?;
            self.expect(Tok::Colon)?;
            let value = self.expect_str("a factor value string")?;
            factors.push(Factor { category, name, value });
        }
        self.expect(Tok::RBrace)?;
        Ok(CharacterizationVector { id, factors })
    }

    fn parse_significance(&mut self) -> Result<Significance, ParseError> {
        let (kw, span) = self.expect_ident("a significance kind")?;
        let kind = match kw.as_str() {
            "formal_experiment" => SignificanceKind::FormalExperiment,
            "case_study" => SignificanceKind::CaseStudy,
            "survey" => SignificanceKind::Survey,
            other => {
                return Err(ParseError::with_expected(
                    span,
                    format!("malformed significance: unknown kind `{other}`"),
                    "`formal_experiment`, `case_study`, or `survey`",
                ));
            }
        };
        self.expect(Tok::LParen)?;
        let tok = self.next("a validation count")?;
        let count = match tok.tok {
            Tok::Int(n) if n >= 1 => n,
            Tok::Int(n) => {
                return Err(ParseError::new(
                    tok.span,
                    format!("malformed significance: count {n} must be at least 1"),
                ));
            }
            other => {
                return Err(ParseError::with_expected(
                    tok.span,
                    format!("unexpected {}", other.describe()),
                    "a validation count",
                ));
            }
        };
        self.expect(Tok::RParen)?;
        Ok(Significance::new(kind, count))
    }

    /// Bracketed list of bare identifiers or quoted strings.
    fn parse_word_list(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(Tok::LBracket)?;
        let mut out = Vec::new();
        loop {
            if self.peek() == Some(&Tok::RBracket) {
                self.pos += 1;
                break;
            }
            let tok = self.next("a keyword or `]`")?;
            match tok.tok {
                Tok::Ident(s) | Tok::Str(s) => out.push(s),
                other => {
                    return Err(ParseError::with_expected(
                        tok.span,
                        format!("unexpected {}", other.describe()),
                        "a keyword or `]`",
                    ));
                }
            }
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            }
        }
        Ok(out)
    }

    fn parse_ref_list(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(Tok::LBracket)?;
        let mut out = Vec::new();
        loop {
            if self.peek() == Some(&Tok::RBracket) {
                self.pos += 1;
                break;
            }
            out.push(self.expect_ref()?);
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            }
        }
        Ok(out)
    }

    fn parse_str_list(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(Tok::LBracket)?;
        let mut out = Vec::new();
        loop {
            if self.peek() == Some(&Tok::RBracket) {
                self.pos += 1;
                break;
            }
            out.push(self.expect_str("a string or `]`")?);
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            }
        }
        Ok(out)
    }

    fn parse_process_model(&mut self) -> Result<ProcessModelStub, ParseError> {
        let id = self.expect_str("an element id string")?;
        self.expect(Tok::LBrace)?;
        let start = self.span();
        let mut name = None;
        let mut phases = None;
        while self.peek() != Some(&Tok::RBrace) {
            let (kw, span) = self.expect_ident("a field keyword")?;
            self.expect(Tok::Colon)?;
            match kw.as_str() {
                "name" => set_once(&mut name, self.expect_str("a name string")?, &kw, span)?,
                "phases" => set_once(&mut phases, self.parse_word_list()?, &kw, span)?,
                other => {
                    return Err(ParseError::with_expected(
                        span,
                        format!("unknown keyword `{other}` in process_model"),
                        "`name` or `phases`",
                    ));
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(ProcessModelStub {
            id,
            name: required(name, "name", start)?,
            phases: required(phases, "phases", start)?,
        })
    }

    fn parse_goal(&mut self) -> Result<(GqmGoal, bool), ParseError> {
        self.expect(Tok::LBrace)?;
        let start = self.span();
        let mut object = None;
        let mut purpose = None;
        let mut quality_focus = None;
        let mut viewpoint = None;
        let mut context = None;
        while self.peek() != Some(&Tok::RBrace) {
            let (kw, span) = self.expect_ident("a goal facet keyword")?;
            self.expect(Tok::Colon)?;
            match kw.as_str() {
                "object" => set_once(&mut object, self.expect_str("a string")?, &kw, span)?,
                "purpose" => set_once(&mut purpose, self.expect_str("a string")?, &kw, span)?,
                "quality_focus" => {
                    set_once(&mut quality_focus, self.expect_str("a string")?, &kw, span)?
                }
                "viewpoint" => set_once(&mut viewpoint, self.expect_str("a string")?, &kw, span)?,
                "context" => set_once(&mut context, self.expect_ref()?, &kw, span)?,
                other => {
                    return Err(ParseError::with_expected(
                        span,
                        format!("unknown keyword `{other}` in goal"),
                        "`object`, `purpose`, `quality_focus`, `viewpoint`, or `context`",
                    ));
                }
            }
        }
        self.expect(Tok::RBrace)?;
        let explicit = quality_focus.is_some();
        Ok((
            GqmGoal {
                object: required(object, "object", start)?,
                purpose: required(purpose, "purpose", start)?,
                quality_focus: quality_focus.unwrap_or_default(),
                quality_focus_derived: !explicit,
                viewpoint: required(viewpoint, "viewpoint", start)?,
                context: required(context, "context", start)?,
            },
            explicit,
        ))
    }

    fn parse_question(
        &mut self,
    ) -> Result<(String, Vec<MetricDef>, Vec<IndicatorDef>), ParseError> {
        let text = self.expect_str("the question text")?;
        self.expect(Tok::LBrace)?;
        let mut metrics = Vec::new();
        let mut indicators = Vec::new();
        while self.peek() != Some(&Tok::RBrace) {
            let (kw, span) = self.expect_ident("`metric` or `indicator`")?;
            match kw.as_str() {
                "metric" => {
                    let (name, _) = self.expect_ident("a metric name")?;
                    self.expect(Tok::Colon)?;
                    let (scale_kw, sspan) = self.expect_ident("a scale")?;
                    let scale = match scale_kw.as_str() {
                        "category" => MetricScale::Category,
                        "hours" => MetricScale::Hours,
                        "count" => MetricScale::Count,
                        "ratio" => MetricScale::Ratio,
                        "text" => MetricScale::Text,
                        other => {
                            return Err(ParseError::with_expected(
                                sspan,
                                format!("unknown scale `{other}`"),
                                "`category`, `hours`, `count`, `ratio`, or `text`",
                            ));
                        }
                    };
                    metrics.push(MetricDef { name, scale });
                }
                "indicator" => indicators.push(self.parse_indicator()?),
                other => {
                    return Err(ParseError::with_expected(
                        span,
                        format!("unknown keyword `{other}` in question"),
                        "`metric` or `indicator`",
                    ));
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok((text, metrics, indicators))
    }

    fn parse_indicator(&mut self) -> Result<IndicatorDef, ParseError> {
        let (name, _) = self.expect_ident("an indicator name")?;
        self.expect(Tok::Equals)?;
        let (kind_kw, kspan) = self.expect_ident("an indicator kind")?;
        let kind = match kind_kw.as_str() {
            "distribution" => IndicatorKind::Distribution,
            "cumulative_distribution" => IndicatorKind::CumulativeDistribution,
            "sum" => IndicatorKind::Sum,
            "mean" => IndicatorKind::Mean,
            "count" => IndicatorKind::Count,
            other => {
                return Err(ParseError::with_expected(
                    kspan,
                    format!("unknown indicator kind `{other}`"),
                    "`distribution`, `cumulative_distribution`, `sum`, `mean`, or `count`",
                ));
            }
        };
        self.expect(Tok::LParen)?;
        let (value_metric, _) = self.expect_ident("a metric name")?;
        let mut group_by = None;
        let mut order = None;
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            let (kw, span) = self.expect_ident("`by` or `order`")?;
            self.expect(Tok::Colon)?;
            match kw.as_str() {
                "by" => set_once(&mut group_by, self.expect_ident("a metric name")?.0, &kw, span)?,
                "order" => set_once(&mut order, self.parse_word_list()?, &kw, span)?,
                other => {
                    return Err(ParseError::with_expected(
                        span,
                        format!("unknown indicator argument `{other}`"),
                        "`by` or `order`",
                    ));
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(IndicatorDef { name, kind, value_metric, group_by, order })
    }

    fn parse_labeled(&mut self) -> Result<Observation, ParseError> {
        let (label, _) = self.expect_ident("a label")?;
        self.expect(Tok::Colon)?;
        let text = self.expect_str("the labeled text")?;
        Ok(Observation { label, text })
    }

    fn parse_cited(&mut self) -> Result<CitedText, ParseError> {
        let (label, _) = self.expect_ident("a label")?;
        let (from_kw, fspan) = self.expect_ident("`from`")?;
        if from_kw != "from" {
            return Err(ParseError::with_expected(
                fspan,
                format!("unexpected identifier `{from_kw}`"),
                "`from`",
            ));
        }
        let mut cites = vec![self.expect_ident("a cited label")?.0];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            cites.push(self.expect_ident("a cited label")?.0);
        }
        self.expect(Tok::Colon)?;
        let text = self.expect_str("the labeled text")?;
        Ok(CitedText { label, cites, text })
    }

    fn parse_quality_model(&mut self) -> Result<QualityModel, ParseError> {
        let id = self.expect_str("an element id string")?;
        self.expect(Tok::LBrace)?;
        let start = self.span();

        let mut name = None;
        let mut model_type = None;
        let mut sub_kind = None;
        let mut significance = None;
        let mut period = None;
        let mut goal = None;
        let mut question = None;
        let mut observations = Vec::new();
        let mut interpretations = Vec::new();
        let mut consequences = Vec::new();
        let mut references = Vec::new();
        let mut additional_docs = Vec::new();

        while self.peek() != Some(&Tok::RBrace) {
            let (kw, span) = self.expect_ident("a quality-model field keyword")?;
            match kw.as_str() {
                "name" => {
                    self.expect(Tok::Colon)?;
                    set_once(&mut name, self.expect_str("a name string")?, &kw, span)?;
                }
                "type" => {
                    self.expect(Tok::Colon)?;
                    let (ty_kw, tspan) = self.expect_ident("a model type")?;
                    let ty = match ty_kw.as_str() {
                        "project_oriented" => ModelType::ProjectOriented,
                        "process_oriented" => ModelType::ProcessOriented,
                        "product_oriented" => ModelType::ProductOriented,
                        other => {
                            return Err(ParseError::with_expected(
                                tspan,
                                format!("unknown model type `{other}`"),
                                "`project_oriented`, `process_oriented`, or `product_oriented`",
                            ));
                        }
                    };
                    set_once(&mut model_type, ty, &kw, span)?;
                    if self.peek() == Some(&Tok::Slash) {
                        self.pos += 1;
                        sub_kind = Some(self.expect_str("a sub-kind string")?);
                    }
                }
                "significance" => {
                    self.expect(Tok::Colon)?;
                    set_once(&mut significance, self.parse_significance()?, &kw, span)?;
                }
                "period" => {
                    self.expect(Tok::Colon)?;
                    let a = self.expect_date()?;
                    self.expect(Tok::DotDot)?;
                    let b = self.expect_date()?;
                    set_once(&mut period, (a, b), &kw, span)?;
                }
                "goal" => {
                    let g = self.parse_goal()?;
                    set_once(&mut goal, g, &kw, span)?;
                }
                "question" => {
                    let q = self.parse_question()?;
                    set_once(&mut question, q, &kw, span)?;
                }
                "observation" => observations.push(self.parse_labeled()?),
                "interpretation" => interpretations.push(self.parse_cited()?),
                "consequence" => consequences.push(self.parse_cited()?),
                "references" => {
                    self.expect(Tok::Colon)?;
                    references = self.parse_ref_list()?;
                }
                "docs" => {
                    self.expect(Tok::Colon)?;
                    additional_docs = self.parse_str_list()?;
                }
                other => {
                    return Err(ParseError::new(
                        span,
                        format!("unknown keyword `{other}` in quality_model"),
                    ));
                }
            }
        }
        self.expect(Tok::RBrace)?;

        let (mut goal, _explicit_focus) = required(goal, "goal", start)?;
        if goal.quality_focus_derived {
            // Auto-fill the missing facet from the sub-kind ("effort model" -> "effort").
            if let Some(sk) = &sub_kind {
                goal.quality_focus = sk.strip_suffix(" model").unwrap_or(sk).to_string();
            }
        }
        let (question, metrics, indicators) = required(question, "question", start)?;
        let (period_start, period_end) = required(period, "period", start)?;

        Ok(QualityModel {
            id,
            name: required(name, "name", start)?,
            model_type: required(model_type, "type", start)?,
            sub_kind,
            significance: required(significance, "significance", start)?,
            period_start,
            period_end,
            goal,
            question,
            metrics,
            indicators,
            observations,
            interpretations,
            consequences,
            references,
            additional_docs,
        })
    }

    fn parse_lesson(&mut self) -> Result<LessonLearned, ParseError> {
        let id = self.expect_str("an element id string")?;
        self.expect(Tok::LBrace)?;
        let start = self.span();

        let mut topic = None;
        let mut situation = None;
        let mut significance = None;
        let mut context = None;
        let mut observation = None;
        let mut problem = None;
        let mut cause = None;
        let mut solution_reactive = None;
        let mut solution_preventive = None;
        let mut log = None;
        let mut references = Vec::new();
        let mut additional_docs = Vec::new();

        while self.peek() != Some(&Tok::RBrace) {
            let (kw, span) = self.expect_ident("a lesson field keyword")?;
            self.expect(Tok::Colon)?;
            match kw.as_str() {
                "topic" => set_once(&mut topic, self.parse_word_list()?, &kw, span)?,
                "situation" => set_once(&mut situation, self.expect_str("a string")?, &kw, span)?,
                "significance" => set_once(&mut significance, self.parse_significance()?, &kw, span)?,
                "context" => set_once(&mut context, self.expect_ref()?, &kw, span)?,
                "observation" => set_once(&mut observation, self.expect_str("a string")?, &kw, span)?,
                "problem" => set_once(&mut problem, self.expect_str("a string")?, &kw, span)?,
                "cause" => set_once(&mut cause, self.expect_str("a string")?, &kw, span)?,
                "solution_reactive" => {
                    set_once(&mut solution_reactive, self.expect_str("a string")?, &kw, span)?
                }
                "solution_preventive" => {
                    set_once(&mut solution_preventive, self.expect_str("a string")?, &kw, span)?
                }
                "log" => set_once(&mut log, self.expect_str("a string")?, &kw, span)?,
                "references" => references = self.parse_ref_list()?,
                "docs" => additional_docs = self.parse_str_list()?,
                other => {
                    return Err(ParseError::new(span, format!("unknown keyword `{other}` in lesson")));
                }
            }
        }
        self.expect(Tok::RBrace)?;

        let body = match (observation, problem) {
            (Some(_), Some(_)) => {
                return Err(ParseError::new(
                    start,
                    "a lesson is either an observation or a problem/solution pair, not both",
                ));
            }
            (Some(observation), None) => LessonBody::Observation { observation },
            (None, Some(problem)) => LessonBody::ProblemSolution {
                problem,
                cause: required(cause, "cause", start)?,
                solution_reactive,
                solution_preventive,
                log,
            },
            (None, None) => {
                return Err(ParseError::new(
                    start,
                    "missing required field: `observation` or `problem`",
                ));
            }
        };

        Ok(LessonLearned {
            id,
            topic: required(topic, "topic", start)?,
            situation: required(situation, "situation", start)?,
            significance: required(significance, "significance", start)?,
            context: required(context, "context", start)?,
            references,
            additional_docs,
            body,
        })
    }
}

fn set_once<T>(slot: &mut Option<T>, value: T, field: &str, span: SourceSpan) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(ParseError::new(span, format!("duplicate field `{field}`")));
    }
    *slot = Some(value);
    Ok(())
}

fn required<T>(slot: Option<T>, field: &str, span: SourceSpan) -> Result<T, ParseError> {
    slot.ok_or_else(|| ParseError::new(span, format!("missing required field `{field}`")))
}
