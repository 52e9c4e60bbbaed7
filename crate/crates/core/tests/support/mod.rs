#![allow(dead_code)]

pub mod oracle;

use hare_core::corpus::{AnnotationSet, EntityMention, Label, RelationInstance, RelationType, Report, Source};
use proptest::prelude::*;

pub const SURFACES: &[(&str, Label)] = &[
    ("ER", Label::IhcMarker),
    ("PR", Label::IhcMarker),
    ("HER2", Label::IhcMarker),
    ("Ki-67", Label::IhcMarker),
    ("positive", Label::IhcModifier),
    ("negative", Label::IhcModifier),
    ("weak", Label::IhcModifier),
    ("carcinoma", Label::PathologicalDiagnosis),
    ("adenoma", Label::PathologicalDiagnosis),
    ("invasive", Label::DiagnosisDescriptor),
    ("grade 2", Label::DiagnosisDescriptor),
    ("breast", Label::AnatomicalSite),
];

/// Entities laid out on a synthetic text so spans are consistent, with
/// type-compatible relations between them.
pub fn arb_annotation_set(max_entities: usize) -> impl Strategy<Value = AnnotationSet> {
    let entity = (0..SURFACES.len(), 0.0f64..=1.0);
    prop::collection::vec(entity, 0..=max_entities)
        .prop_flat_map(|ents| {
            let n = ents.len();
            let rels = prop::collection::vec((0..n.max(1), 0..n.max(1), 0.0f64..=1.0), 0..=n);
            (Just(ents), rels)
        })
        .prop_map(|(ents, rels)| build_set("r", &ents, &rels))
}

/// `ents` are `(surface index, confidence)`; `rels` are `(head, tail,
/// confidence)` candidates, kept only when the labels fit a relation type
/// and the pair is new.
pub fn build_set(report_id: &str, ents: &[(usize, f64)], rels: &[(usize, usize, f64)]) -> AnnotationSet {
    let mut set = AnnotationSet::new(report_id, Source::Predicted);
    let mut pos = 0;
    for &(k, conf) in ents {
        let (surface, label) = SURFACES[k];
        let len = surface.chars().count();
        set.entities.push(EntityMention {
            start: pos,
            end: pos + len,
            label,
            surface: surface.to_string(),
            confidence: conf,
        });
        pos += len + 1;
    }
    for &(h, t, conf) in rels {
        if h >= set.entities.len() || t >= set.entities.len() || h == t {
            continue;
        }
        let Some(rel_type) = RelationType::with_head(set.entities[h].label) else { continue };
        if rel_type.endpoints().1 != set.entities[t].label {
            continue;
        }
        if set.relations.iter().any(|r| r.head == h && r.tail == t) {
            continue;
        }
        set.relations.push(RelationInstance { head: h, tail: t, rel_type, confidence: conf });
    }
    set
}

/// The report text matching [`build_set`]'s layout.
pub fn text_of(set: &AnnotationSet) -> String {
    set.entities.iter().map(|e| e.surface.as_str()).collect::<Vec<_>>().join(" ")
}

pub fn report(id: &str, text: &str) -> Report {
    Report { id: id.to_string(), text: text.to_string() }
}

/// Words used to build report-like text, including guarded abbreviations.
pub const WORDS: &[&str] = &[
    "ER", "PR", "HER2", "positive", "negative", "weak", "strong", "carcinoma", "invasive", "ductal",
    "breast", "tumour", "approx.", "e.g.", "no.", "vs.", "cm.", "Fig.", "(approx.", "size", "3.5",
    "left", "is", "seen", "and", "focal", "grade", "2", "done!", "why?", "Ki-67", "CK7", "diffuse,",
];

/// Space-separated words with occasional sentence-final periods.
pub fn arb_sentence_text() -> impl Strategy<Value = String> {
    prop::collection::vec((0..WORDS.len(), prop::bool::weighted(0.2), 1usize..3), 0..40).prop_map(|words| {
        let mut s = String::new();
        for (k, stop, spaces) in words {
            s.push_str(WORDS[k]);
            if stop {
                s.push('.');
            }
            s.push_str(&" ".repeat(spaces));
        }
        s
    })
}
