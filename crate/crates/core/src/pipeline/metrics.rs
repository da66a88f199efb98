use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Method, PipelineResult, RunStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("total article count must be positive")]
    EmptyTotal,
    #[error("{detections} detections exceed the {total} articles")]
    TooManyDetections { detections: u64, total: u64 },
    #[error("baseline has zero detections, improvement is undefined")]
    UndefinedBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub detections: u64,
    pub total_articles: u64,
    pub yield_pct: f64,
    /// Yield divided by the baseline yield; absent for the baseline row.
    pub improvement_over_baseline: Option<f64>,
}

impl MetricsRow {
    /// Yield at 0.1 percentage-point resolution, e.g. `8.4%`.
    pub fn yield_display(&self) -> String {
        format!("{:.1}%", self.yield_pct)
    }

    /// Improvement at 0.1 resolution, e.g. `4.9×`, or `--` for the baseline.
    pub fn improvement_display(&self) -> String {
        match self.improvement_over_baseline {
            Some(r) => format!("{r:.1}×"),
            None => "--".into(),
        }
    }
}

fn yield_pct(detections: u64, total: u64) -> Result<f64, MetricsError> {
    if total == 0 {
        return Err(MetricsError::EmptyTotal);
    }
    if detections > total {
        return Err(MetricsError::TooManyDetections { detections, total });
    }
    Ok(100.0 * detections as f64 / total as f64)
}

/// `baseline_detections` is taken over the same `total`.
pub fn compute_metrics(
    detections: u64,
    total: u64,
    baseline_detections: Option<u64>,
) -> Result<MetricsRow, MetricsError> {
    let y = yield_pct(detections, total)?;
    let improvement = match baseline_detections {
        None => None,
        Some(b) => {
            let by = yield_pct(b, total)?;
            if b == 0 {
                return Err(MetricsError::UndefinedBaseline);
            }
            Some(y / by)
        }
    };
    Ok(MetricsRow {
        method: String::new(),
        detections,
        total_articles: total,
        yield_pct: y,
        improvement_over_baseline: improvement,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub rows: Vec<MetricsRow>,
    pub baseline: String,
    /// Articles excluded from a method's denominator because of
    /// infrastructure errors (only when they are re-queued).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub excluded: BTreeMap<String, u64>,
}

/// One row per method present in `results`, ordered centroid, gipsy,
/// agentic. Improvements are relative to the centroid row; they are left
/// out when the baseline has no detections or was not run.
pub fn build_report(
    results: &BTreeMap<Method, Vec<PipelineResult>>,
    exclude_infra_errors: bool,
) -> Result<BatchReport, MetricsError> {
    let mut counts = BTreeMap::new();
    let mut excluded = BTreeMap::new();
    for (method, rs) in results {
        let infra = rs
            .iter()
            .filter(|r| r.status == RunStatus::InfrastructureError)
            .count() as u64;
        let mut total = rs.len() as u64;
        if exclude_infra_errors && infra > 0 {
            total -= infra;
            excluded.insert(method.as_str().to_string(), infra);
        }
        let detected = rs.iter().filter(|r| r.is_detected()).count() as u64;
        counts.insert(*method, (detected, total));
    }
    let baseline = counts
        .get(&Method::Centroid)
        .and_then(|&(d, t)| (d > 0).then(|| 100.0 * d as f64 / t as f64));
    let mut rows = Vec::new();
    for method in Method::ALL {
        let Some(&(detected, total)) = counts.get(&method) else {
            continue;
        };
        if total == 0 {
            continue;
        }
        let mut row = compute_metrics(detected, total, None)?;
        row.method = method.as_str().to_string();
        if method != Method::Centroid {
            row.improvement_over_baseline = baseline.map(|b| row.yield_pct / b);
        }
        rows.push(row);
    }
    Ok(BatchReport {
        rows,
        baseline: Method::Centroid.as_str().to_string(),
        excluded,
    })
}

fn display_name(method: &str) -> &str {
    method
        .parse::<Method>()
        .map(|m| m.display_name())
        .unwrap_or(method)
}

pub fn render_report_table(report: &BatchReport) -> String {
    let header = [
        "Method".to_string(),
        "Event Detections".to_string(),
        "Yield".to_string(),
        "Increase over Centroid Baseline".to_string(),
    ];
    let mut lines = vec![header];
    for row in &report.rows {
        let improvement = match (row.method.as_str(), row.improvement_over_baseline) {
            ("centroid", _) => "--".to_string(),
            (_, None) => "n/a".to_string(),
            _ => row.improvement_display(),
        };
        lines.push([
            display_name(&row.method).to_string(),
            row.detections.to_string(),
            row.yield_display(),
            improvement,
        ]);
    }
    let widths: Vec<usize> = (0..4)
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, l) in lines.iter().enumerate() {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}", w = *w))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("-|-"));
            out.push('\n');
        }
    }
    out
}
