//! Deterministic extraction and confidence filtering.
//!
//! The gazetteer tagger and proximity linker stand in for trained NER/RE
//! models so the whole pipeline runs without model weights. Predictions from
//! external models enter through the annotation file format instead.

mod filter;
mod gazetteer;
mod linker;

pub use filter::{filter_by_confidence, filter_split, ThresholdMode};
pub use gazetteer::{tag_entities, Gazetteer, GazetteerError};
pub use linker::{link_relations, LinkerConfig};

use crate::corpus::{AnnotationSet, Report, Source};

/// Tags and links one report with the built-in extractors.
pub fn extract(report: &Report, gaz: &Gazetteer, linker: &LinkerConfig) -> AnnotationSet {
    let entities = tag_entities(report, gaz);
    let relations = link_relations(report, &entities, linker);
    AnnotationSet {
        report_id: report.id.clone(),
        entities,
        relations,
        source: Source::Predicted,
    }
}
