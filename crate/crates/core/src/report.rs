//! CSV, JSON and markdown rendering of evaluation reports, plus atomic file
//! output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::fairness::{FairnessReport, FairnessRow};
use crate::utility::{UtilityReport, UtilityRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "md" | "markdown" => Ok(OutputFormat::Markdown),
            other => Err(format!("unknown format `{other}` (expected csv|json|md)")),
        }
    }
}

/// Effective configuration embedded in every report.
pub type Metadata = BTreeMap<String, String>;

/// Formats alpha as a column suffix: `0.2` -> `cwex@0.2`.
fn alpha_column(alpha: f64) -> String {
    format!("cwex@{alpha}")
}

fn cell(value: f64) -> String {
    format!("{value:.6}")
}

fn opt_cell(value: Option<f64>) -> String {
    value.map(cell).unwrap_or_default()
}

/// Joined fairness and utility rows for one query (or the mean).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedRow {
    pub query_id: String,
    pub fairness: Option<FairnessRow>,
    pub utility: Option<UtilityRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedReport<'a> {
    pub fairness: Option<&'a FairnessReport>,
    pub utility: Option<&'a UtilityReport>,
}

impl CombinedReport<'_> {
    fn alphas(&self) -> &[f64] {
        self.fairness.map(|f| f.alphas.as_slice()).unwrap_or(&[])
    }

    fn has_nfairr(&self) -> bool {
        self.fairness.is_some_and(|f| f.rows.iter().any(|r| r.nfairr.is_some()))
    }

    fn header(&self) -> Vec<String> {
        let mut cols = vec!["query_id".to_string()];
        if self.fairness.is_some() {
            cols.extend(self.alphas().iter().map(|a| alpha_column(*a)));
            cols.push("delta_exposure".into());
            if self.has_nfairr() {
                cols.push("nfairr".into());
            }
        }
        if self.utility.is_some() {
            cols.push("mrr".into());
            cols.push("ndcg".into());
        }
        cols
    }

    /// Per-query rows in query order, then the mean row labeled `all`.
    fn rows(&self) -> Vec<CombinedRow> {
        let mut by_query: BTreeMap<String, CombinedRow> = BTreeMap::new();
        let blank = |q: &str| CombinedRow {
            query_id: q.to_string(),
            fairness: None,
            utility: None,
        };
        if let Some(f) = self.fairness {
            for r in &f.rows {
                by_query
                    .entry(r.query_id.clone())
                    .or_insert_with(|| blank(&r.query_id))
                    .fairness = Some(r.clone());
            }
        }
        if let Some(u) = self.utility {
            for r in &u.rows {
                by_query
                    .entry(r.query_id.clone())
                    .or_insert_with(|| blank(&r.query_id))
                    .utility = Some(r.clone());
            }
        }
        let mut rows: Vec<CombinedRow> = by_query.into_values().collect();
        let mean_f = self.fairness.and_then(|f| f.mean.clone());
        let mean_u = self.utility.and_then(|u| u.mean.clone());
        if mean_f.is_some() || mean_u.is_some() {
            rows.push(CombinedRow {
                query_id: "all".into(),
                fairness: mean_f,
                utility: mean_u,
            });
        }
        rows
    }

    fn cells(&self, row: &CombinedRow) -> Vec<String> {
        let mut cells = vec![row.query_id.clone()];
        if self.fairness.is_some() {
            match &row.fairness {
                Some(f) => {
                    cells.extend(f.cwex.iter().map(|v| cell(*v)));
                    cells.push(cell(f.delta_exposure));
                    if self.has_nfairr() {
                        cells.push(opt_cell(f.nfairr));
                    }
                }
                None => {
                    let width = self.alphas().len() + 1 + usize::from(self.has_nfairr());
                    cells.extend(std::iter::repeat_n(String::new(), width));
                }
            }
        }
        if self.utility.is_some() {
            match &row.utility {
                Some(u) => {
                    cells.push(cell(u.reciprocal_rank));
                    cells.push(cell(u.ndcg));
                }
                None => cells.extend([String::new(), String::new()]),
            }
        }
        cells
    }

    pub fn render(&self, format: OutputFormat, metadata: &Metadata) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(metadata),
            OutputFormat::Markdown => self.to_markdown(metadata),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in self.rows() {
            out.push_str(&self.cells(&row).join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, metadata: &Metadata) -> String {
        #[derive(Serialize)]
        struct Envelope<'a> {
            metadata: &'a Metadata,
            #[serde(skip_serializing_if = "Option::is_none")]
            fairness: Option<&'a FairnessReport>,
            #[serde(skip_serializing_if = "Option::is_none")]
            utility: Option<&'a UtilityReport>,
        }
        let mut s = serde_json::to_string_pretty(&Envelope {
            metadata,
            fairness: self.fairness,
            utility: self.utility,
        })
        .expect("reports serialize");
        s.push('\n');
        s
    }

    /// Markdown table; columns follow CWEx per alpha, delta exposure, NFaiRR.
    pub fn to_markdown(&self, metadata: &Metadata) -> String {
        let header: Vec<String> = self
            .header()
            .into_iter()
            .map(|h| match h.as_str() {
                "query_id" => "Query".to_string(),
                "delta_exposure" => "ΔExp.".to_string(),
                "nfairr" => "NFaiRR".to_string(),
                "mrr" => "MRR".to_string(),
                "ndcg" => "nDCG".to_string(),
                other => other
                    .strip_prefix("cwex@")
                    .map(|a| format!("CWEx (α={a})"))
                    .unwrap_or_else(|| other.to_string()),
            })
            .collect();
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(out, "|{}", " --- |".repeat(header.len()));
        for row in self.rows() {
            let mut cells = self.cells(&row);
            if row.query_id == "all" {
                cells[0] = "**mean**".into();
            }
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        if !metadata.is_empty() {
            out.push('\n');
            for (k, v) in metadata {
                let _ = writeln!(out, "- {k}: {v}");
            }
        }
        out
    }
}

/// Writes via a sibling temp file and rename so readers never observe a
/// partially written file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}
