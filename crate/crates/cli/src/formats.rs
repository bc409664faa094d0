//! Line-delimited file formats: raw and normalized corpora, pair datasets,
//! and metric reports. One JSON object per line throughout.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{io_at, CliError};
use mpcs_core::corpus::{Corpus, CorpusEntry, PairExample, Provenance};
use mpcs_core::metrics::MetricsReport;

/// Why raw lines were dropped during ingest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub invalid_json: usize,
    pub empty_code: usize,
    pub empty_query: usize,
    pub duplicate_id: usize,
}

impl SkipCounts {
    pub fn total(&self) -> usize {
        self.invalid_json + self.empty_code + self.empty_query + self.duplicate_id
    }
}

/// A raw input line. Field names follow the common code-search corpus
/// layout: the description may arrive as `query`, `docstring`, or `doc`,
/// the source as `code`, `function`, or `original_string`, and the key as
/// `id` or `url`. Unknown fields are ignored.
#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    url: Option<String>,
    query: Option<String>,
    docstring: Option<String>,
    doc: Option<String>,
    code: Option<String>,
    function: Option<String>,
    original_string: Option<String>,
}

fn non_blank(field: Option<String>) -> Option<String> {
    field.filter(|s| !s.trim().is_empty())
}

/// Reads a raw corpus, normalizing fields and dropping unusable lines.
/// Later duplicates of an id lose to the first occurrence.
pub fn read_raw_corpus(path: &Path) -> Result<(Vec<CorpusEntry>, SkipCounts), CliError> {
    let text = io_at(std::fs::read_to_string(path), "reading corpus", path)?;
    let mut entries: Vec<CorpusEntry> = Vec::new();
    let mut seen: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    let mut skips = SkipCounts::default();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Ok(raw) = serde_json::from_str::<RawRecord>(line) else {
            skips.invalid_json += 1;
            continue;
        };
        let Some(code) = non_blank(raw.code)
            .or(non_blank(raw.function))
            .or(non_blank(raw.original_string))
        else {
            skips.empty_code += 1;
            continue;
        };
        let Some(query) = non_blank(raw.query)
            .or(non_blank(raw.docstring))
            .or(non_blank(raw.doc))
        else {
            skips.empty_query += 1;
            continue;
        };
        let id = non_blank(raw.id)
            .or(non_blank(raw.url))
            .unwrap_or_else(|| format!("r{}", lineno + 1));
        if !seen.insert(id.clone()) {
            skips.duplicate_id += 1;
            continue;
        }
        entries.push(CorpusEntry { id, code, query });
    }
    Ok((entries, skips))
}

/// A normalized corpus line.
#[derive(Serialize, Deserialize)]
struct CorpusRecord {
    id: String,
    query: String,
    code: String,
}

/// Writes a normalized corpus file.
pub fn write_corpus(path: &Path, entries: &[CorpusEntry]) -> Result<(), CliError> {
    let mut out = String::new();
    for e in entries {
        let record = CorpusRecord {
            id: e.id.clone(),
            query: e.query.clone(),
            code: e.code.clone(),
        };
        out.push_str(&to_json_line(&record)?);
        out.push('\n');
    }
    io_at(std::fs::write(path, out), "writing corpus", path)
}

/// Reads a normalized corpus file strictly: every line must carry the
/// three fields and ids must be unique.
pub fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let text = io_at(std::fs::read_to_string(path), "reading corpus", path)?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(line).map_err(|e| {
            CliError::contract(format!("{}:{}: bad corpus line: {e}", path.display(), lineno + 1))
        })?;
        entries.push(CorpusEntry {
            id: record.id,
            code: record.code,
            query: record.query,
        });
    }
    if entries.is_empty() {
        return Err(CliError::contract(format!(
            "{}: corpus file holds no entries",
            path.display()
        )));
    }
    Corpus::from_entries(entries).map_err(CliError::from)
}

/// One pair-dataset line.
#[derive(Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub origin_id: String,
    pub query: String,
    pub code: String,
    pub label: u8,
    pub provenance: String,
    pub perspective: String,
}

/// Writes pair examples with sequential record ids.
pub fn write_dataset(
    path: &Path,
    examples: &[PairExample],
    perspective: &str,
) -> Result<(), CliError> {
    let mut out = String::new();
    for (i, ex) in examples.iter().enumerate() {
        let record = DatasetRecord {
            id: format!("x{i:06}"),
            origin_id: ex.origin_id.clone(),
            query: ex.query.clone(),
            code: ex.code.clone(),
            label: ex.label,
            provenance: String::from(ex.provenance.as_str()),
            perspective: String::from(perspective),
        };
        out.push_str(&to_json_line(&record)?);
        out.push('\n');
    }
    io_at(std::fs::write(path, out), "writing dataset", path)
}

/// Reads a pair dataset back into examples plus its perspective label
/// (every line must agree on it).
pub fn read_dataset(path: &Path) -> Result<(Vec<PairExample>, String), CliError> {
    let text = io_at(std::fs::read_to_string(path), "reading dataset", path)?;
    let mut examples = Vec::new();
    let mut perspective: Option<String> = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| {
            CliError::contract(format!("{}:{}: {msg}", path.display(), lineno + 1))
        };
        let record: DatasetRecord =
            serde_json::from_str(line).map_err(|e| at(format!("bad dataset line: {e}")))?;
        if record.label > 1 {
            return Err(at(format!("label must be 0 or 1, got {}", record.label)));
        }
        let provenance = Provenance::from_str(&record.provenance)
            .map_err(|e| at(e.to_string()))?;
        match &perspective {
            None => perspective = Some(record.perspective.clone()),
            Some(p) if *p != record.perspective => {
                return Err(at(format!(
                    "mixed perspectives in one dataset: {p} vs {}",
                    record.perspective
                )));
            }
            Some(_) => {}
        }
        examples.push(PairExample {
            query: record.query,
            code: record.code,
            label: record.label,
            provenance,
            origin_id: record.origin_id,
        });
    }
    let perspective =
        perspective.ok_or_else(|| CliError::contract(format!("{}: dataset file holds no examples", path.display())))?;
    Ok((examples, perspective))
}

/// Summary line of a report file (first line).
#[derive(Serialize, Deserialize)]
pub struct ReportSummary {
    pub query_count: usize,
    pub distractors: usize,
    pub seed: u64,
    pub success_rate: Vec<SuccessAtK>,
    pub mrr: f64,
}

#[derive(Serialize, Deserialize)]
pub struct SuccessAtK {
    pub k: usize,
    pub rate: f64,
}

/// Per-query line of a report file (remaining lines).
#[derive(Serialize, Deserialize)]
pub struct ReportRow {
    pub query_id: String,
    pub frank: usize,
    pub ranked_ids: Vec<String>,
}

/// Serializes a metrics report: one summary line, then one line per query.
pub fn render_report(report: &MetricsReport) -> Result<String, CliError> {
    let summary = ReportSummary {
        query_count: report.query_count,
        distractors: report.distractors,
        seed: report.seed,
        success_rate: report
            .success_rate
            .iter()
            .map(|(&k, &rate)| SuccessAtK { k, rate })
            .collect(),
        mrr: report.mrr,
    };
    let mut out = to_json_line(&summary)?;
    out.push('\n');
    for r in &report.results {
        let row = ReportRow {
            query_id: r.query_id.clone(),
            frank: r.frank,
            ranked_ids: r.ranked_ids.clone(),
        };
        out.push_str(&to_json_line(&row)?);
        out.push('\n');
    }
    Ok(out)
}

/// Reads just the summary line of a report file.
pub fn read_report_summary(path: &Path) -> Result<ReportSummary, CliError> {
    let text = io_at(std::fs::read_to_string(path), "reading report", path)?;
    let first = text
        .lines()
        .next()
        .ok_or_else(|| CliError::contract(format!("{}: empty report", path.display())))?;
    serde_json::from_str(first)
        .map_err(|e| CliError::contract(format!("{}: bad report summary: {e}", path.display())))
}

/// Serializes any record to one JSON line (no trailing newline).
pub fn to_json_line<T: Serialize>(record: &T) -> Result<String, CliError> {
    serde_json::to_string(record).map_err(|e| CliError::io(format!("serializing record: {e}")))
}
