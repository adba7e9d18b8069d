//! Command results and their text and JSON forms.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blocks::DistributionRow;
use crate::catalog::Row;
use crate::fitdata::Metrics;

pub const ROW_COLUMNS: [&str; 6] = ["Id", "Expression", "Fitness", "Parameters", "Size", "DL"];
pub const BLOCK_COLUMNS: [&str; 3] = ["Pattern", "Count", "Avg. Fitness"];

/// Metrics on one data partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub mse: f64,
    pub r2: Option<f64>,
    pub nll: f64,
    pub dl: Option<f64>,
}

impl PartitionReport {
    pub fn new(m: Metrics, dl: Option<f64>) -> Self {
        PartitionReport {
            mse: m.mse,
            r2: m.r2,
            nll: m.nll,
            dl,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub row: Row,
    pub cost: u32,
    pub train: Option<PartitionReport>,
    pub test: Option<PartitionReport>,
    /// Why metrics are missing, if they are.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Output {
    Rows { rows: Vec<Row> },
    Report { report: Box<Report> },
    Blocks { rows: Vec<DistributionRow> },
    Count { count: usize },
    Ack { message: String },
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "--".to_string(), fmt_num)
}

fn fmt_params(p: &[f64]) -> String {
    let items: Vec<String> = p.iter().map(|v| fmt_num(*v)).collect();
    format!("[{}]", items.join(", "))
}

fn row_cells(r: &Row) -> Vec<String> {
    vec![
        r.id.to_string(),
        r.expression.clone(),
        fmt_num(r.fitness),
        fmt_params(&r.parameters),
        r.size.to_string(),
        fmt_opt(r.dl),
    ]
}

fn row_json(r: &Row) -> Value {
    json!({
        "id": r.id,
        "expression": r.expression,
        "fitness": r.fitness,
        "parameters": r.parameters,
        "size": r.size,
        "dl": r.dl,
    })
}

/// Left-aligned text table with a header rule.
pub fn render_table(columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = columns.iter().map(|c| c.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.zip(&width).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let _ = write!(s, "{c:<w$}");
        }
        s.trim_end().to_string()
    };
    let mut out = line(&mut columns.iter().copied());
    out.push('\n');
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("  "));
    for r in rows {
        out.push('\n');
        out.push_str(&line(&mut r.iter().map(String::as_str)));
    }
    out
}

impl Output {
    /// `{columns, rows}` for tabular results; other kinds serialize as tagged objects.
    pub fn to_json(&self) -> Value {
        match self {
            Output::Rows { rows } => json!({
                "columns": ROW_COLUMNS.iter().map(|c| c.to_ascii_lowercase()).collect::<Vec<_>>(),
                "rows": rows.iter().map(row_json).collect::<Vec<_>>(),
            }),
            Output::Blocks { rows } => json!({
                "columns": ["pattern", "count", "avg_fitness"],
                "rows": rows,
            }),
            other => serde_json::to_value(other).expect("outputs serialize"),
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Rows { rows } => {
                let cells: Vec<_> = rows.iter().map(row_cells).collect();
                f.write_str(&render_table(&ROW_COLUMNS, &cells))
            }
            Output::Blocks { rows } => {
                let cells: Vec<_> = rows
                    .iter()
                    .map(|r| vec![r.pattern.clone(), r.count.to_string(), format!("{:.4e}", r.avg_fitness)])
                    .collect();
                f.write_str(&render_table(&BLOCK_COLUMNS, &cells))
            }
            Output::Count { count } => write!(f, "{count}"),
            Output::Ack { message } => f.write_str(message),
            Output::Report { report } => {
                f.write_str(&render_table(&ROW_COLUMNS, &[row_cells(&report.row)]))?;
                write!(f, "\n\ncost: {}", report.cost)?;
                let parts = [("train", &report.train), ("test", &report.test)];
                let rows: Vec<Vec<String>> = parts
                    .iter()
                    .filter_map(|(name, p)| {
                        p.as_ref().map(|p| {
                            vec![
                                name.to_string(),
                                fmt_num(p.mse),
                                fmt_opt(p.r2),
                                fmt_num(p.nll),
                                fmt_opt(p.dl),
                            ]
                        })
                    })
                    .collect();
                if !rows.is_empty() {
                    write!(f, "\n\n{}", render_table(&["Data", "MSE", "R2", "NLL", "DL"], &rows))?;
                }
                if let Some(note) = &report.note {
                    write!(f, "\n\nnote: {note}")?;
                }
                Ok(())
            }
        }
    }
}
