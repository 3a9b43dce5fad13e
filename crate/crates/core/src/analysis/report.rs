use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::stats::pearson;
use crate::data::{ScoreColumn, ScoreTable};
use crate::error::{Error, Result};
use crate::refscores::{aggregate_score, Criterion};

/// Report columns. Rate and count criteria share the hallucination and
/// omission columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportCriterion {
    FactualP,
    FactualR,
    FactualF1,
    Hallucination,
    Omission,
}

impl ReportCriterion {
    pub const ALL: [ReportCriterion; 5] = [
        ReportCriterion::FactualP,
        ReportCriterion::FactualR,
        ReportCriterion::FactualF1,
        ReportCriterion::Hallucination,
        ReportCriterion::Omission,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ReportCriterion::FactualP => "factual_p",
            ReportCriterion::FactualR => "factual_r",
            ReportCriterion::FactualF1 => "factual_f1",
            ReportCriterion::Hallucination => "hallucination",
            ReportCriterion::Omission => "omission",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            ReportCriterion::FactualP => "Factual P",
            ReportCriterion::FactualR => "Factual R",
            ReportCriterion::FactualF1 => "Factual F1",
            ReportCriterion::Hallucination => "Hallucination",
            ReportCriterion::Omission => "Omission",
        }
    }

    pub fn from_label(label: &str) -> Option<ReportCriterion> {
        Self::ALL.iter().copied().find(|c| c.label() == label)
    }

    pub fn from_reference(c: Criterion) -> ReportCriterion {
        match c {
            Criterion::FactualP => ReportCriterion::FactualP,
            Criterion::FactualR => ReportCriterion::FactualR,
            Criterion::FactualF1 => ReportCriterion::FactualF1,
            Criterion::HallucRate | Criterion::HallucCount => ReportCriterion::Hallucination,
            Criterion::OmissionRate | Criterion::OmissionCount => ReportCriterion::Omission,
        }
    }
}

/// One Pearson coefficient. `r` is `None` when undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub r: Option<f64>,
    /// Pairs correlated (summed across reports after averaging).
    pub n: usize,
    /// Reports in which the cell is defined.
    pub n_reports: usize,
}

impl Cell {
    pub const UNDEFINED: Cell = Cell {
        r: None,
        n: 0,
        n_reports: 0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric: String,
    /// Aligned with `CorrelationReport::criteria`.
    pub cells: Vec<Cell>,
    pub aggregate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub dataset_id: String,
    pub criteria: Vec<ReportCriterion>,
    pub rows: Vec<ReportRow>,
}

impl CorrelationReport {
    pub fn row(&self, metric: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn cell(&self, metric: &str, criterion: ReportCriterion) -> Option<&Cell> {
        let idx = self.criteria.iter().position(|c| *c == criterion)?;
        self.row(metric).map(|r| &r.cells[idx])
    }

    pub fn has_aggregate(&self) -> bool {
        [
            ReportCriterion::FactualF1,
            ReportCriterion::Hallucination,
            ReportCriterion::Omission,
        ]
        .iter()
        .all(|c| self.criteria.contains(c))
    }
}

/// `(pair_id, metric value, reference value)` over pairs present in both
/// columns, in metric column order.
pub fn paired_points(metric: &ScoreColumn, reference: &ScoreColumn) -> Vec<(String, f64, f64)> {
    metric
        .values
        .iter()
        .filter_map(|(id, x)| reference.get(id).map(|y| (id.clone(), *x, y)))
        .collect()
}

fn aggregate_for(criteria: &[ReportCriterion], cells: &[Cell]) -> Option<f64> {
    let r = |c: ReportCriterion| {
        criteria
            .iter()
            .position(|x| *x == c)
            .and_then(|i| cells[i].r)
    };
    Some(aggregate_score(
        r(ReportCriterion::FactualF1)?,
        r(ReportCriterion::Hallucination)?,
        r(ReportCriterion::Omission)?,
    ))
}

/// Pearson r for every (metric, criterion) pair. Undefined cells are
/// recorded, never fatal.
pub fn correlation_report(
    dataset_id: &str,
    table: &ScoreTable,
    references: &[ScoreColumn],
) -> Result<CorrelationReport> {
    let mut mapped: Vec<(ReportCriterion, &ScoreColumn)> = Vec::with_capacity(references.len());
    for col in references {
        let c = Criterion::from_column_name(&col.metric_name)
            .map(ReportCriterion::from_reference)
            .ok_or_else(|| Error::UnknownCriterion(col.metric_name.clone()))?;
        if mapped.iter().any(|(m, _)| *m == c) {
            return Err(Error::DuplicateKey(c.label().to_string()));
        }
        mapped.push((c, col));
    }
    mapped.sort_by_key(|(c, _)| *c);
    let criteria: Vec<ReportCriterion> = mapped.iter().map(|(c, _)| *c).collect();

    let rows = table
        .columns
        .iter()
        .map(|metric| {
            let cells: Vec<Cell> = mapped
                .iter()
                .map(|(_, reference)| {
                    let points = paired_points(metric, reference);
                    let xs: Vec<f64> = points.iter().map(|p| p.1).collect();
                    let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
                    let r = pearson(&xs, &ys).ok();
                    Cell {
                        r,
                        n: points.len(),
                        n_reports: usize::from(r.is_some()),
                    }
                })
                .collect();
            ReportRow {
                metric: metric.metric_name.clone(),
                aggregate: aggregate_for(&criteria, &cells),
                cells,
            }
        })
        .collect();

    Ok(CorrelationReport {
        dataset_id: dataset_id.to_string(),
        criteria,
        rows,
    })
}

/// Unweighted mean of each cell over the reports where it is defined.
/// Rows are the metrics common to every report, in first-report order.
pub fn average_reports(reports: &[CorrelationReport]) -> Result<CorrelationReport> {
    let first = reports.first().ok_or(Error::NoSharedMetrics)?;
    let metrics: Vec<&str> = first
        .rows
        .iter()
        .map(|r| r.metric.as_str())
        .filter(|m| reports.iter().all(|rep| rep.row(m).is_some()))
        .collect();
    if metrics.is_empty() {
        return Err(Error::NoSharedMetrics);
    }
    let criteria: Vec<ReportCriterion> = ReportCriterion::ALL
        .iter()
        .copied()
        .filter(|c| reports.iter().any(|rep| rep.criteria.contains(c)))
        .collect();

    let rows = metrics
        .iter()
        .map(|metric| {
            let cells: Vec<Cell> = criteria
                .iter()
                .map(|c| {
                    let defined: Vec<&Cell> = reports
                        .iter()
                        .filter_map(|rep| rep.cell(metric, *c))
                        .filter(|cell| cell.r.is_some())
                        .collect();
                    if defined.is_empty() {
                        return Cell::UNDEFINED;
                    }
                    let sum: f64 = defined.iter().filter_map(|cell| cell.r).sum();
                    Cell {
                        r: Some(sum / defined.len() as f64),
                        n: defined.iter().map(|cell| cell.n).sum(),
                        n_reports: defined.len(),
                    }
                })
                .collect();
            ReportRow {
                metric: metric.to_string(),
                aggregate: aggregate_for(&criteria, &cells),
                cells,
            }
        })
        .collect();

    Ok(CorrelationReport {
        dataset_id: "average".to_string(),
        criteria,
        rows,
    })
}

fn format_r(r: Option<f64>) -> String {
    r.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Long-format CSV: `metric,criterion,r,n,n_reports`, plus one
/// `aggregate` row per metric when the report has one.
pub fn write_report_csv(report: &CorrelationReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "criterion", "r", "n", "n_reports"])
        .expect("in-memory write");
    for row in &report.rows {
        for (c, cell) in report.criteria.iter().zip(&row.cells) {
            w.write_record([
                row.metric.as_str(),
                c.label(),
                &format_r(cell.r),
                &cell.n.to_string(),
                &cell.n_reports.to_string(),
            ])
            .expect("in-memory write");
        }
        if report.has_aggregate() {
            w.write_record([row.metric.as_str(), "aggregate", &format_r(row.aggregate), "", ""])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Inverse of [`write_report_csv`]. Aggregates are recomputed from the
/// cells.
pub fn parse_report_csv(text: &str, dataset_id: &str) -> Result<CorrelationReport> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    let expected = ["metric", "criterion", "r", "n", "n_reports"];
    if headers.iter().map(str::trim).ne(expected) {
        return Err(Error::parse(1, format!("header must be `{}`", expected.join(","))));
    }

    let mut metrics: Vec<String> = Vec::new();
    let mut entries: Vec<(String, ReportCriterion, Cell)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let metric = record[0].trim().to_string();
        let label = record[1].trim();
        if label == "aggregate" {
            continue;
        }
        let criterion = ReportCriterion::from_label(label)
            .ok_or_else(|| Error::parse(line, format!("unknown criterion `{label}`")))?;
        let r = match record[2].trim() {
            "NA" | "" => None,
            v => {
                let r: f64 = v
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad coefficient `{v}`")))?;
                if !r.is_finite() || r.abs() > 1.0 {
                    return Err(Error::parse(line, format!("coefficient out of range `{v}`")));
                }
                Some(r)
            }
        };
        let int = |s: &str, name: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad {name} `{s}`")))
        };
        let cell = Cell {
            r,
            n: int(&record[3], "n")?,
            n_reports: int(&record[4], "n_reports")?,
        };
        if entries.iter().any(|(m, c, _)| *m == metric && *c == criterion) {
            return Err(Error::DuplicateKey(format!("{metric}/{}", criterion.label())));
        }
        if !metrics.contains(&metric) {
            metrics.push(metric.clone());
        }
        entries.push((metric, criterion, cell));
    }

    let criteria: Vec<ReportCriterion> = ReportCriterion::ALL
        .iter()
        .copied()
        .filter(|c| entries.iter().any(|(_, x, _)| x == c))
        .collect();
    let rows = metrics
        .into_iter()
        .map(|metric| {
            let cells: Vec<Cell> = criteria
                .iter()
                .map(|c| {
                    entries
                        .iter()
                        .find(|(m, x, _)| *m == metric && x == c)
                        .map_or(Cell::UNDEFINED, |(_, _, cell)| *cell)
                })
                .collect();
            ReportRow {
                aggregate: aggregate_for(&criteria, &cells),
                metric,
                cells,
            }
        })
        .collect();
    Ok(CorrelationReport {
        dataset_id: dataset_id.to_string(),
        criteria,
        rows,
    })
}

/// Aligned text table, one row per metric, two decimals.
pub fn render_report_table(report: &CorrelationReport) -> String {
    let mut headers: Vec<&str> = vec!["Metric"];
    headers.extend(report.criteria.iter().map(|c| c.title()));
    if report.has_aggregate() {
        headers.push("Aggregate");
    }
    let fmt = |r: Option<f64>| r.map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"));
    let body: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            let mut line = vec![row.metric.clone()];
            line.extend(row.cells.iter().map(|c| fmt(c.r)));
            if report.has_aggregate() {
                line.push(fmt(row.aggregate));
            }
            line
        })
        .collect();

    let widths: Vec<usize> = (0..headers.len())
        .map(|i| {
            body.iter()
                .map(|l| l[i].len())
                .chain([headers[i].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let mut emit = |cells: Vec<&str>| {
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    };
    emit(headers.clone());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    emit(rule.iter().map(String::as_str).collect());
    for line in &body {
        emit(line.iter().map(String::as_str).collect());
    }
    out
}
