use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::text::CharIndex;
use super::{
    AnnotationSet, Corpus, CorpusError, EntityMention, ExpertScore, Label, RelationInstance,
    RelationType, Report, Source,
};

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

/// Yields `(1-based line number, line)` for non-blank lines.
fn records(data: &str) -> impl Iterator<Item = (usize, &str)> {
    data.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn json_error(line: usize, err: serde_json::Error) -> CorpusError {
    let msg = err.to_string();
    // serde reports "missing field `x` at line 1 column N"
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(field) = rest.split('`').next() {
            return CorpusError::MissingField { field: field.to_string(), line };
        }
    }
    CorpusError::Malformed { line, message: msg }
}

pub fn load_reports(path: impl AsRef<Path>) -> Result<Vec<Report>, CorpusError> {
    parse_reports(&read(path.as_ref())?)
}

/// Parses line-delimited `{"id", "text"}` records.
pub fn parse_reports(data: &str) -> Result<Vec<Report>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, raw) in records(data) {
        let report: Report = serde_json::from_str(raw).map_err(|e| json_error(line, e))?;
        if report.id.is_empty() {
            return Err(CorpusError::InvalidReport { id: report.id, line, what: "an empty id" });
        }
        if report.text.is_empty() {
            return Err(CorpusError::InvalidReport { id: report.id, line, what: "empty text" });
        }
        if !seen.insert(report.id.clone()) {
            return Err(CorpusError::DuplicateId { id: report.id, line });
        }
        out.push(report);
    }
    Ok(out)
}

pub fn write_reports<W: Write>(mut w: W, reports: &[Report]) -> io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct AnnotationRecord {
    report_id: String,
    entities: Vec<EntityRecord>,
    #[serde(default)]
    relations: Vec<RelationRecord>,
}

#[derive(Serialize, Deserialize)]
struct EntityRecord {
    start: usize,
    end: usize,
    label: String,
    confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    surface: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RelationRecord {
    head: usize,
    tail: usize,
    #[serde(rename = "type")]
    rel_type: String,
    confidence: f64,
}

pub fn load_annotations(
    path: impl AsRef<Path>,
    source: Source,
    reports: Option<&Corpus>,
) -> Result<BTreeMap<String, AnnotationSet>, CorpusError> {
    parse_annotations(&read(path.as_ref())?, source, reports)
}

/// Parses line-delimited annotation records.
///
/// When `reports` is given, every record must name a known report, spans are
/// checked against its text, and entity surfaces are taken from the text.
/// Without reports, each entity record must carry a `surface` field.
pub fn parse_annotations(
    data: &str,
    source: Source,
    reports: Option<&Corpus>,
) -> Result<BTreeMap<String, AnnotationSet>, CorpusError> {
    let mut out = BTreeMap::new();
    for (line, raw) in records(data) {
        let rec: AnnotationRecord = serde_json::from_str(raw).map_err(|e| json_error(line, e))?;
        let report = match reports {
            Some(c) => Some(
                c.get(&rec.report_id)
                    .ok_or_else(|| CorpusError::UnknownReport(rec.report_id.clone()))?,
            ),
            None => None,
        };
        let set = build_set(rec, source, report)?;
        if out.contains_key(&set.report_id) {
            return Err(CorpusError::DuplicateId { id: set.report_id, line });
        }
        out.insert(set.report_id.clone(), set);
    }
    Ok(out)
}

fn build_set(
    rec: AnnotationRecord,
    source: Source,
    report: Option<&Report>,
) -> Result<AnnotationSet, CorpusError> {
    let index = report.map(|r| CharIndex::new(&r.text));
    let mut set = AnnotationSet::new(rec.report_id, source);
    for (i, e) in rec.entities.into_iter().enumerate() {
        let label: Label = e.label.parse()?;
        let surface = match (&index, e.surface) {
            (Some(idx), given) => {
                let slice = idx.slice(e.start, e.end).ok_or_else(|| CorpusError::SpanOutOfBounds {
                    report_id: set.report_id.clone(),
                    entity: i,
                    start: e.start,
                    end: e.end,
                    len: Some(idx.len()),
                })?;
                if let Some(found) = given.filter(|g| g != slice) {
                    return Err(CorpusError::SurfaceMismatch {
                        report_id: set.report_id.clone(),
                        entity: i,
                        expected: slice.to_string(),
                        found,
                    });
                }
                slice.to_string()
            }
            (None, Some(s)) => s,
            (None, None) => {
                return Err(CorpusError::MissingSurface { report_id: set.report_id.clone(), entity: i })
            }
        };
        set.entities.push(EntityMention {
            start: e.start,
            end: e.end,
            label,
            surface,
            confidence: e.confidence,
        });
    }
    for r in rec.relations {
        set.relations.push(RelationInstance {
            head: r.head,
            tail: r.tail,
            rel_type: r.rel_type.parse::<RelationType>()?,
            confidence: r.confidence,
        });
    }
    set.validate()?;
    Ok(set)
}

/// Writes annotation records in canonical form (no `surface` field). Set
/// `with_surface` to make the file loadable without the report corpus.
pub fn write_annotations<'a, W, I>(mut w: W, sets: I, with_surface: bool) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a AnnotationSet>,
{
    for set in sets {
        let rec = AnnotationRecord {
            report_id: set.report_id.clone(),
            entities: set
                .entities
                .iter()
                .map(|e| EntityRecord {
                    start: e.start,
                    end: e.end,
                    label: e.label.as_str().to_string(),
                    confidence: e.confidence,
                    surface: with_surface.then(|| e.surface.clone()),
                })
                .collect(),
            relations: set
                .relations
                .iter()
                .map(|r| RelationRecord {
                    head: r.head,
                    tail: r.tail,
                    rel_type: r.rel_type.as_str().to_string(),
                    confidence: r.confidence,
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_expert_scores(path: impl AsRef<Path>) -> Result<Vec<ExpertScore>, CorpusError> {
    parse_expert_scores(&read(path.as_ref())?)
}

/// Parses a `report_id,score` CSV file. Scores must be integers in 0-5;
/// zero scores are kept.
pub fn parse_expert_scores(data: &str) -> Result<Vec<ExpertScore>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(data.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Malformed { line: 1, message: e.to_string() })?
        .clone();
    if headers.len() != 2 || &headers[0] != "report_id" || &headers[1] != "score" {
        return Err(CorpusError::Malformed {
            line: 1,
            message: format!("expected header `report_id,score`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let record = i + 1;
        let line = record + 1;
        let row = row.map_err(|e| CorpusError::Malformed { line, message: e.to_string() })?;
        let report_id = row[0].to_string();
        let score: i64 = row[1].parse().map_err(|_| CorpusError::Malformed {
            line,
            message: format!("score `{}` is not an integer", &row[1]),
        })?;
        if !(0..=ExpertScore::MAX as i64).contains(&score) {
            return Err(CorpusError::InvalidScore { record, report_id, score });
        }
        if !seen.insert(report_id.clone()) {
            return Err(CorpusError::DuplicateId { id: report_id, line });
        }
        out.push(ExpertScore { report_id, score: score as u8 });
    }
    Ok(out)
}

pub fn write_expert_scores<W: Write>(mut w: W, scores: &[ExpertScore]) -> io::Result<()> {
    writeln!(w, "report_id,score")?;
    for s in scores {
        writeln!(w, "{},{}", s.report_id, s.score)?;
    }
    Ok(())
}
