//! Raw effort-data ingestion and GQM indicator evaluation.
//!
//! An indicator traces input variables (group keys, e.g. phase identifiers)
//! to output variables (e.g. effort per phase). Group sums are made
//! order-insensitive by sorting each group's values before summation, so a
//! result with an explicit group order is bit-identical under any permutation
//! of the input rows.

use chrono::NaiveDate;
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::model::{validate_quality_model, IndicatorDef, QualityModel, Violation};

pub const CSV_HEADER: &str = "date,phase,role,effort_hours";

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRow {
    pub date: NaiveDate,
    pub phase: String,
    pub role: String,
    pub effort_hours: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDataset {
    pub id: String,
    pub rows: Vec<MeasurementRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("header mismatch: expected `{CSV_HEADER}`, found `{0}`")]
    HeaderMismatch(String),
}

/// Parse a data-collection sheet. Invalid rows are reported with their line
/// number; ingestion continues past them.
pub fn ingest_csv(
    id: impl Into<String>,
    text: &str,
) -> Result<(MeasurementDataset, Vec<RowError>), IngestError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").trim_end_matches('\r');
    if header != CSV_HEADER {
        return Err(IngestError::HeaderMismatch(header.to_string()));
    }

    let numbered: Vec<(usize, &str)> = lines
        .enumerate()
        .map(|(i, l)| (i + 2, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();

    #[cfg(feature = "parallel")]
    let parsed: Vec<(usize, Result<MeasurementRow, String>)> = numbered
        .par_iter()
        .map(|(n, l)| (*n, parse_row(l)))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let parsed: Vec<(usize, Result<MeasurementRow, String>)> =
        numbered.iter().map(|(n, l)| (*n, parse_row(l))).collect();

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (line, res) in parsed {
        match res {
            Ok(row) => rows.push(row),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    Ok((MeasurementDataset { id: id.into(), rows }, errors))
}

fn parse_row(line: &str) -> Result<MeasurementRow, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let date = NaiveDate::parse_from_str(fields[0].trim(), "%Y-%m-%d")
        .map_err(|_| format!("bad date `{}` (use YYYY-MM-DD)", fields[0].trim()))?;
    let phase = fields[1].trim();
    if phase.is_empty() {
        return Err("phase must be non-empty".into());
    }
    let effort_hours: f64 = fields[3]
        .trim()
        .parse()
        .map_err(|_| format!("bad effort value `{}`", fields[3].trim()))?;
    if !effort_hours.is_finite() || effort_hours < 0.0 {
        return Err(format!("effort hours {effort_hours} must be non-negative"));
    }
    Ok(MeasurementRow {
        date,
        phase: phase.to_string(),
        role: fields[2].trim().to_string(),
        effort_hours,
    })
}

/// One group line of an indicator result.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorGroup {
    pub key: String,
    pub value: f64,
    pub percent: f64,
    pub cumulative_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorResult {
    pub name: String,
    pub rows: Vec<IndicatorGroup>,
    pub total: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum IndicatorError {
    #[error("dataset has no effort to distribute (total is 0)")]
    EmptyDataset,
    #[error("order key `{0}` does not occur in the dataset")]
    UnknownOrderKey(String),
    #[error("quality model is invalid: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Per-group value lists in first-appearance order of the keys.
fn collect_groups(ds: &MeasurementDataset) -> Vec<(String, Vec<f64>)> {
    let mut index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for row in &ds.rows {
        let i = *index.entry(row.phase.as_str()).or_insert_with(|| {
            groups.push((row.phase.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[i].1.push(row.effort_hours);
    }
    groups
}

/// Sort-then-sum makes each group sum independent of input row order.
fn group_sum(values: &mut Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut comp = 0.0; // Kahan compensation
    for &v in values.iter() {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

#[doc(hidden)]
pub fn sum_groups_sequential(mut groups: Vec<(String, Vec<f64>)>) -> Vec<(String, f64)> {
    groups
        .iter_mut()
        .map(|(k, vs)| (std::mem::take(k), group_sum(vs)))
        .collect()
}

#[cfg(feature = "parallel")]
#[doc(hidden)]
pub fn sum_groups(groups: Vec<(String, Vec<f64>)>) -> Vec<(String, f64)> {
    groups
        .into_par_iter()
        .map(|(k, mut vs)| (k, group_sum(&mut vs)))
        .collect()
}

#[cfg(not(feature = "parallel"))]
#[doc(hidden)]
pub fn sum_groups(groups: Vec<(String, Vec<f64>)>) -> Vec<(String, f64)> {
    sum_groups_sequential(groups)
}

#[doc(hidden)]
pub fn grouped_sums(ds: &MeasurementDataset) -> Vec<(String, f64)> {
    sum_groups(collect_groups(ds))
}

/// Evaluate an indicator over a dataset. In the shipped metric mapping the
/// group-by metric reads the `phase` field and the value metric reads
/// `effort_hours`.
pub fn compute_indicator(
    ind: &IndicatorDef,
    ds: &MeasurementDataset,
) -> Result<IndicatorResult, IndicatorError> {
    use crate::model::IndicatorKind::*;

    if !ind.kind.is_distribution() {
        return compute_scalar(ind, ds);
    }

    let mut sums = grouped_sums(ds);
    if let Some(order) = &ind.order {
        for key in order {
            if !sums.iter().any(|(k, _)| k == key) {
                return Err(IndicatorError::UnknownOrderKey(key.clone()));
            }
        }
        // Declared keys first, in declared order; undeclared keys keep their
        // first-appearance order after them.
        sums.sort_by_key(|(k, _)| {
            order
                .iter()
                .position(|o| o == k)
                .map_or((1, 0), |i| (0, i))
        });
    }

    let total: f64 = sums.iter().map(|(_, v)| v).sum();
    if total == 0.0 {
        return Err(IndicatorError::EmptyDataset);
    }

    let mut rows = Vec::with_capacity(sums.len());
    let mut running = 0.0;
    for (key, value) in sums {
        running += value;
        rows.push(IndicatorGroup {
            key,
            value,
            percent: value / total * 100.0,
            cumulative_percent: running / total * 100.0,
        });
    }
    debug_assert!(matches!(ind.kind, Distribution | CumulativeDistribution));
    Ok(IndicatorResult { name: ind.name.clone(), rows, total })
}

fn compute_scalar(
    ind: &IndicatorDef,
    ds: &MeasurementDataset,
) -> Result<IndicatorResult, IndicatorError> {
    use crate::model::IndicatorKind::*;
    let n = ds.rows.len();
    let mut values: Vec<f64> = ds.rows.iter().map(|r| r.effort_hours).collect();
    let sum = group_sum(&mut values);
    let value = match ind.kind {
        Sum => sum,
        Count => n as f64,
        Mean => {
            if n == 0 {
                return Err(IndicatorError::EmptyDataset);
            }
            sum / n as f64
        }
        Distribution | CumulativeDistribution => unreachable!(),
    };
    Ok(IndicatorResult {
        name: ind.name.clone(),
        rows: vec![IndicatorGroup {
            key: "all".into(),
            value,
            percent: 100.0,
            cumulative_percent: 100.0,
        }],
        total: value,
    })
}

/// Pair a model's question with the result of its single indicator.
pub fn evaluate_question(
    qm: &QualityModel,
    ds: &MeasurementDataset,
) -> Result<(String, IndicatorResult), IndicatorError> {
    let violations = validate_quality_model(qm);
    if !violations.is_empty() {
        return Err(IndicatorError::InvalidModel(violations));
    }
    let result = compute_indicator(qm.indicator(), ds)?;
    Ok((qm.question.clone(), result))
}

/// Display rounding: 2 decimal places, half away from zero. Internal results
/// stay unrounded.
pub fn format2(x: f64) -> String {
    format!("{:.2}", (x * 100.0).round() / 100.0)
}

/// Re-emit a dataset in the canonical CSV form.
pub fn to_csv(ds: &MeasurementDataset) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &ds.rows {
        out.push_str(&format!("{},{},{},{}\n", r.date, r.phase, r.role, r.effort_hours));
    }
    out
}
