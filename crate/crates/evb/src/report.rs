//! Markdown rendering of elements, indicator results, and evidence
//! statements. Output is deterministic: equal inputs give byte-identical
//! reports.

use crate::measurement::{format2, IndicatorResult};
use crate::model::{CitedText, LessonBody, LessonLearned, QualityModel};
use crate::repository::{EvidenceKind, EvidenceStatement, EvidenceSubject};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub title: String,
    pub body: String,
}

/// Escape a value for use inside a Markdown table cell.
fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', "<br>")
}

fn table(rows: &[(&str, String)]) -> String {
    let mut out = String::from("| Field | Value |\n| --- | --- |\n");
    for (field, value) in rows {
        out.push_str(&format!("| {} | {} |\n", field, cell(value)));
    }
    out
}

fn cited_lines(items: &[CitedText]) -> String {
    items
        .iter()
        .map(|c| format!("{} ({}): {}", c.label, c.cites.join(", "), c.text))
        .collect::<Vec<_>>()
        .join("\n")
}

fn indicator_subtable(res: &IndicatorResult) -> String {
    let mut t = String::from(
        "<table><tr><th>Phase</th><th>Effort (h)</th><th>Cumulated Effort (%)</th></tr>",
    );
    for row in &res.rows {
        t.push_str(&format!(
            "<tr><td>{}</td><td>{}</td><td>{}</td></tr>",
            row.key,
            format2(row.value),
            format2(row.cumulative_percent)
        ));
    }
    t.push_str("</table>");
    t
}

/// Render a quality model as a two-column table mirroring the packaging
/// template, with the indicator result embedded when available.
pub fn render_quality_model(qm: &QualityModel, res: Option<&IndicatorResult>) -> Report {
    let model_type = match &qm.sub_kind {
        Some(sk) => format!("Quality model/{}/{}", qm.model_type.display(), sk),
        None => format!("Quality model/{}", qm.model_type.display()),
    };
    let indicator = match res {
        Some(res) => format!("{}<br>{}", qm.question, indicator_subtable(res)),
        None => qm.question.clone(),
    };
    let observations = qm
        .observations
        .iter()
        .map(|o| format!("{}: {}", o.label, o.text))
        .collect::<Vec<_>>()
        .join("\n");

    let mut rows: Vec<(&str, String)> = vec![
        ("Model Id.", qm.id.clone()),
        ("Model Name", qm.name.clone()),
        ("Model Type", model_type),
        ("Significance", qm.significance.to_string()),
        (
            "Measurement Period",
            format!("{} – {}", qm.period_start, qm.period_end),
        ),
        ("Object", qm.goal.object.clone()),
        ("Purpose", qm.goal.purpose.clone()),
        ("Quality Focus", qm.goal.quality_focus.clone()),
        ("Viewpoint", qm.goal.viewpoint.clone()),
        ("Characterization Vector / Context", qm.goal.context.clone()),
        ("Indicator", indicator),
        ("Observations", observations),
        ("Interpretations", cited_lines(&qm.interpretations)),
        ("Consequences", cited_lines(&qm.consequences)),
    ];
    if !qm.references.is_empty() {
        rows.push(("References", qm.references.join(", ")));
    }
    if !qm.additional_docs.is_empty() {
        rows.push(("Additional Documentation", qm.additional_docs.join("; ")));
    }

    Report {
        title: qm.name.clone(),
        body: format!("# {}\n\n{}", qm.name, table(&rows)),
    }
}

/// Render a lesson learned as a two-column table; problem/solution pairs show
/// their own rows, absent optional rows are omitted.
pub fn render_lesson(ll: &LessonLearned) -> Report {
    let mut rows: Vec<(&str, String)> = vec![
        ("Lesson Id.", ll.id.clone()),
        ("Topic", ll.topic.join(", ")),
        ("Situation", ll.situation.clone()),
        ("Significance", ll.significance.to_string()),
        ("Characterization Vector / Context", ll.context.clone()),
    ];
    match &ll.body {
        LessonBody::Observation { observation } => {
            rows.push(("Observation", observation.clone()));
        }
        LessonBody::ProblemSolution {
            problem,
            cause,
            solution_reactive,
            solution_preventive,
            log,
        } => {
            rows.push(("Problem", problem.clone()));
            rows.push(("Cause", cause.clone()));
            if let Some(s) = solution_reactive {
                rows.push(("Solution (reactive)", s.clone()));
            }
            if let Some(s) = solution_preventive {
                rows.push(("Solution (preventive)", s.clone()));
            }
            if let Some(s) = log {
                rows.push(("Log", s.clone()));
            }
        }
    }
    if !ll.references.is_empty() {
        rows.push(("References", ll.references.join(", ")));
    }
    if !ll.additional_docs.is_empty() {
        rows.push(("Additional Documentation", ll.additional_docs.join("; ")));
    }

    Report {
        title: ll.id.clone(),
        body: format!("# {}\n\n{}", ll.id, table(&rows)),
    }
}

fn subject_text(s: &EvidenceSubject) -> String {
    match s {
        EvidenceSubject::Technology(t) => match &t.version {
            Some(v) => format!("{} {}", t.name, v),
            None => t.name.clone(),
        },
        EvidenceSubject::Element(id) => id.clone(),
    }
}

/// One sentence instantiating the evidence fact pattern for the statement's
/// kind.
pub fn render_evidence_statement(es: &EvidenceStatement) -> String {
    let sig = es.significance.to_string();
    let subject = subject_text(&es.subject);
    match es.kind {
        EvidenceKind::TechnologyApplied => format!(
            "There is evidence with significance {sig} that technology {subject} was applied within context {ctx} with the result {result}.",
            ctx = es.context,
            result = es.result.as_deref().unwrap_or("?"),
        ),
        EvidenceKind::ProcessFollowed => format!(
            "There is evidence with significance {sig} that process model {subject} was followed within context {ctx}.",
            ctx = es.context,
        ),
        EvidenceKind::ProblemSolved => format!(
            "There is evidence with significance {sig} that the problem described in lesson {subject} arose and was solved within the context {ctx}.",
            ctx = es.context,
        ),
    }
}

/// The four retrospective questions, in order.
pub fn retrospective_questions() -> [&'static str; 4] {
    [
        "What did we do well, which we might forget if we don't discuss it?",
        "What did we learn?",
        "What should we do differently next time?",
        "What still puzzles us?",
    ]
}
