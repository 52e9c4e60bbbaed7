//! Reports, span-anchored annotations, expert ratings, and the preprocessing
//! used to build relation-classification samples.

mod io;
pub mod pairs;
pub mod text;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use io::{
    load_annotations, load_expert_scores, load_reports, parse_annotations, parse_expert_scores,
    parse_reports, write_annotations, write_expert_scores, write_reports,
};
pub use pairs::{build_relation_pairs, MarkedPairSample, PairBuild, PairLabel, PairMode};

/// Entity classes of the annotation schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    AnatomicalSite,
    IhcMarker,
    PathologicalDiagnosis,
    DiagnosisDescriptor,
    IhcModifier,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::AnatomicalSite,
        Label::IhcMarker,
        Label::PathologicalDiagnosis,
        Label::DiagnosisDescriptor,
        Label::IhcModifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::AnatomicalSite => "anatomical_site",
            Label::IhcMarker => "ihc_marker",
            Label::PathologicalDiagnosis => "pathological_diagnosis",
            Label::DiagnosisDescriptor => "diagnosis_descriptor",
            Label::IhcModifier => "ihc_modifier",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| CorpusError::UnknownLabel(s.to_string()))
    }
}

/// Typed relations between two entities. The head is always the marker or
/// diagnosis, the tail the modifier or descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationType {
    MarkerModifier,
    DiagnosisDescriptor,
}

impl RelationType {
    pub const ALL: [RelationType; 2] =
        [RelationType::MarkerModifier, RelationType::DiagnosisDescriptor];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::MarkerModifier => "ihc_marker-ihc_modifier",
            RelationType::DiagnosisDescriptor => "diagnosis-diagnosis_descriptor",
        }
    }

    /// `(head label, tail label)`.
    pub fn endpoints(self) -> (Label, Label) {
        match self {
            RelationType::MarkerModifier => (Label::IhcMarker, Label::IhcModifier),
            RelationType::DiagnosisDescriptor => {
                (Label::PathologicalDiagnosis, Label::DiagnosisDescriptor)
            }
        }
    }

    /// The relation type whose head label is `head`, if any.
    pub fn with_head(head: Label) -> Option<RelationType> {
        RelationType::ALL.into_iter().find(|t| t.endpoints().0 == head)
    }

    /// The relation type whose tail label is `tail`, if any.
    pub fn with_tail(tail: Label) -> Option<RelationType> {
        RelationType::ALL.into_iter().find(|t| t.endpoints().1 == tail)
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Accept the en-dash spelling as well as the canonical hyphen.
        let canon = s.replace('\u{2013}', "-");
        RelationType::ALL
            .into_iter()
            .find(|t| t.as_str() == canon)
            .ok_or_else(|| CorpusError::UnknownRelationType(s.to_string()))
    }
}

impl Serialize for RelationType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RelationType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityMention {
    /// Character offset, inclusive.
    pub start: usize,
    /// Character offset, exclusive.
    pub end: usize,
    pub label: Label,
    pub surface: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationInstance {
    pub head: usize,
    pub tail: usize,
    pub rel_type: RelationType,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Gold,
    Predicted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub report_id: String,
    pub entities: Vec<EntityMention>,
    pub relations: Vec<RelationInstance>,
    pub source: Source,
}

impl AnnotationSet {
    pub fn new(report_id: impl Into<String>, source: Source) -> Self {
        AnnotationSet {
            report_id: report_id.into(),
            entities: Vec::new(),
            relations: Vec::new(),
            source,
        }
    }

    /// Checks relation indices, endpoint labels, confidence ranges, and the
    /// gold-confidence invariant. Span checks against report text live in
    /// [`AnnotationSet::validate_against`].
    pub fn validate(&self) -> Result<(), CorpusError> {
        let id = &self.report_id;
        for (i, e) in self.entities.iter().enumerate() {
            check_confidence(id, &format!("entity {i}"), e.confidence, self.source)?;
            if e.start >= e.end {
                return Err(CorpusError::SpanOutOfBounds {
                    report_id: id.clone(),
                    entity: i,
                    start: e.start,
                    end: e.end,
                    len: None,
                });
            }
        }
        let n = self.entities.len();
        for (i, r) in self.relations.iter().enumerate() {
            check_confidence(id, &format!("relation {i}"), r.confidence, self.source)?;
            for index in [r.head, r.tail] {
                if index >= n {
                    return Err(CorpusError::RelationIndex {
                        report_id: id.clone(),
                        relation: i,
                        index,
                        entities: n,
                    });
                }
            }
            if r.head == r.tail {
                return Err(CorpusError::SelfRelation { report_id: id.clone(), relation: i });
            }
            let (head_label, tail_label) = r.rel_type.endpoints();
            let (h, t) = (self.entities[r.head].label, self.entities[r.tail].label);
            if h != head_label || t != tail_label {
                return Err(CorpusError::RelationEndpoints {
                    report_id: id.clone(),
                    relation: i,
                    rel_type: r.rel_type,
                    head: h,
                    tail: t,
                });
            }
        }
        Ok(())
    }

    /// [`AnnotationSet::validate`] plus span bounds and surface equality
    /// against the report text.
    pub fn validate_against(&self, report: &Report) -> Result<(), CorpusError> {
        self.validate()?;
        let index = text::CharIndex::new(&report.text);
        for (i, e) in self.entities.iter().enumerate() {
            let slice = index.slice(e.start, e.end).ok_or_else(|| CorpusError::SpanOutOfBounds {
                report_id: self.report_id.clone(),
                entity: i,
                start: e.start,
                end: e.end,
                len: Some(index.len()),
            })?;
            if slice != e.surface {
                return Err(CorpusError::SurfaceMismatch {
                    report_id: self.report_id.clone(),
                    entity: i,
                    expected: slice.to_string(),
                    found: e.surface.clone(),
                });
            }
        }
        Ok(())
    }
}

fn check_confidence(report_id: &str, item: &str, c: f64, source: Source) -> Result<(), CorpusError> {
    let bad = match source {
        Source::Gold => c != 1.0,
        Source::Predicted => !(0.0..=1.0).contains(&c),
    };
    if bad {
        return Err(CorpusError::Confidence {
            report_id: report_id.to_string(),
            item: item.to_string(),
            confidence: c,
            origin: source,
        });
    }
    Ok(())
}

/// Expert rating on the 0-5 rubric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertScore {
    pub report_id: String,
    pub score: u8,
}

impl ExpertScore {
    pub const MAX: u8 = 5;
}

/// Reports indexed by id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    reports: Vec<Report>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(reports: Vec<Report>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(reports.len());
        for (i, r) in reports.iter().enumerate() {
            if by_id.insert(r.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId { id: r.id.clone(), line: i + 1 });
            }
        }
        Ok(Corpus { reports, by_id })
    }

    pub fn get(&self, id: &str) -> Option<&Report> {
        self.by_id.get(id).map(|&i| &self.reports[i])
    }

    pub fn reports(&self) -> &[Report] {
        &self.reports
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    /// Merges another corpus into this one; ids must stay unique.
    pub fn extend(&mut self, other: Corpus) -> Result<(), CorpusError> {
        for r in other.reports {
            if self.by_id.contains_key(&r.id) {
                return Err(CorpusError::DuplicateId { id: r.id, line: 0 });
            }
            self.by_id.insert(r.id.clone(), self.reports.len());
            self.reports.push(r);
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing field `{field}` at line {line}")]
    MissingField { field: String, line: usize },
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate report id `{id}` at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("report `{id}` at line {line} has {what}")]
    InvalidReport { id: String, line: usize, what: &'static str },
    #[error("record {record} (report `{report_id}`): score {score} outside 0-5")]
    InvalidScore { record: usize, report_id: String, score: i64 },
    #[error("unknown entity label `{0}`")]
    UnknownLabel(String),
    #[error("unknown relation type `{0}`")]
    UnknownRelationType(String),
    #[error("report `{report_id}` entity {entity}: span [{start}, {end}) out of bounds{}", len.map(|l| format!(" for text of length {l}")).unwrap_or_default())]
    SpanOutOfBounds {
        report_id: String,
        entity: usize,
        start: usize,
        end: usize,
        len: Option<usize>,
    },
    #[error("report `{report_id}` entity {entity}: surface `{found}` does not match text `{expected}`")]
    SurfaceMismatch {
        report_id: String,
        entity: usize,
        expected: String,
        found: String,
    },
    #[error("report `{report_id}` entity {entity}: no surface given and no report text to derive it from")]
    MissingSurface { report_id: String, entity: usize },
    #[error("report `{report_id}` relation {relation}: entity index {index} out of range ({entities} entities)")]
    RelationIndex {
        report_id: String,
        relation: usize,
        index: usize,
        entities: usize,
    },
    #[error("report `{report_id}` relation {relation}: head and tail are the same entity")]
    SelfRelation { report_id: String, relation: usize },
    #[error("report `{report_id}` relation {relation}: type {rel_type} cannot join {head} -> {tail}")]
    RelationEndpoints {
        report_id: String,
        relation: usize,
        rel_type: RelationType,
        head: Label,
        tail: Label,
    },
    #[error("report `{report_id}` {item}: confidence {confidence} invalid for {origin:?} annotations")]
    Confidence {
        report_id: String,
        item: String,
        confidence: f64,
        origin: Source,
    },
    #[error("annotations reference unknown report `{0}`")]
    UnknownReport(String),
}
