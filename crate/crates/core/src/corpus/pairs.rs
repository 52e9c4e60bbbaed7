//! Relation-classification sample construction.
//!
//! Every annotated relation becomes a positive sample. Negatives are drawn
//! without replacement from type-compatible, unannotated entity pairs that
//! share a sentence: one negative per positive in train mode, three per
//! positive in test mode.

use std::collections::HashSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::text::{split_sentences, sentence_of, CharIndex, Span};
use super::{AnnotationSet, EntityMention, RelationType, Report};

pub const E1_OPEN: &str = "[E1] ";
pub const E1_CLOSE: &str = " [/E1]";
pub const E2_OPEN: &str = "[E2] ";
pub const E2_CLOSE: &str = " [/E2]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    Train,
    Test,
}

impl PairMode {
    /// Negatives drawn per positive.
    pub fn negative_ratio(self) -> usize {
        match self {
            PairMode::Train => 1,
            PairMode::Test => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairLabel {
    Relation(RelationType),
    Negative,
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairLabel::Relation(t) => f.write_str(t.as_str()),
            PairLabel::Negative => f.write_str("NEGATIVE"),
        }
    }
}

impl Serialize for PairLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PairLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "NEGATIVE" {
            return Ok(PairLabel::Negative);
        }
        s.parse().map(PairLabel::Relation).map_err(serde::de::Error::custom)
    }
}

/// One relation-classification input: the sentence context with the head
/// wrapped in `[E1] … [/E1]` and the tail in `[E2] … [/E2]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedPairSample {
    pub origin_report: String,
    pub label: PairLabel,
    /// Head span in report character offsets.
    pub head_span: Span,
    /// Tail span in report character offsets.
    pub tail_span: Span,
    pub text_with_markers: String,
}

impl MarkedPairSample {
    pub fn is_positive(&self) -> bool {
        self.label != PairLabel::Negative
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairBuild {
    pub samples: Vec<MarkedPairSample>,
    pub positives: usize,
    pub negatives: usize,
    /// Negatives requested but unavailable.
    pub shortfall: usize,
}

pub fn build_relation_pairs(
    annots: &AnnotationSet,
    report: &Report,
    mode: PairMode,
    seed: u64,
) -> PairBuild {
    if annots.relations.is_empty() {
        return PairBuild::default();
    }
    let sentences = split_sentences(&report.text);
    let index = CharIndex::new(&report.text);
    let ents = &annots.entities;

    let mut samples = Vec::new();
    let mut taken: HashSet<(Span, Span)> = HashSet::new();
    for r in &annots.relations {
        let (h, t) = (&ents[r.head], &ents[r.tail]);
        taken.insert(((h.start, h.end), (t.start, t.end)));
        samples.push(mark(&index, &sentences, &annots.report_id, h, t, PairLabel::Relation(r.rel_type)));
    }
    let positives = samples.len();

    let candidates = negative_candidates(ents, &sentences, &taken);
    let target = positives * mode.negative_ratio();
    let k = target.min(candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, candidates.len(), k).into_vec();
    picked.sort_unstable();
    for i in picked {
        let (h, t) = candidates[i];
        samples.push(mark(&index, &sentences, &annots.report_id, &ents[h], &ents[t], PairLabel::Negative));
    }

    let shortfall = target - k;
    if shortfall > 0 {
        log::warn!(
            "report {}: {} negative pairs requested, only {} available",
            annots.report_id,
            target,
            k
        );
    }
    PairBuild { samples, positives, negatives: k, shortfall }
}

/// Unannotated `(head, tail)` index pairs whose labels form a relation type
/// and which lie in the same sentence, in index order.
fn negative_candidates(
    ents: &[EntityMention],
    sentences: &[Span],
    taken: &HashSet<(Span, Span)>,
) -> Vec<(usize, usize)> {
    let sent: Vec<Option<usize>> = ents.iter().map(|e| sentence_of(sentences, e.start)).collect();
    let mut out = Vec::new();
    for (h, head) in ents.iter().enumerate() {
        let Some(rel) = RelationType::with_head(head.label) else { continue };
        for (t, tail) in ents.iter().enumerate() {
            if tail.label != rel.endpoints().1 || sent[h].is_none() || sent[h] != sent[t] {
                continue;
            }
            if !taken.contains(&((head.start, head.end), (tail.start, tail.end))) {
                out.push((h, t));
            }
        }
    }
    out
}

fn mark(
    index: &CharIndex<'_>,
    sentences: &[Span],
    report_id: &str,
    head: &EntityMention,
    tail: &EntityMention,
    label: PairLabel,
) -> MarkedPairSample {
    let first = head.start.min(tail.start);
    let last = head.end.max(tail.end);
    let ctx_start = sentence_of(sentences, first).map_or(first, |s| sentences[s].0.min(first));
    let ctx_end = sentence_of(sentences, last - 1).map_or(last, |s| sentences[s].1.max(last));

    // (position, closes-before-opens, marker)
    let mut events = [
        (head.start, 1, E1_OPEN),
        (head.end, 0, E1_CLOSE),
        (tail.start, 1, E2_OPEN),
        (tail.end, 0, E2_CLOSE),
    ];
    events.sort_by_key(|&(pos, order, _)| (pos, order));

    let mut text = String::new();
    let mut cursor = ctx_start;
    for (pos, _, marker) in events {
        if pos > cursor {
            text.push_str(index.slice(cursor, pos).unwrap_or_default());
            cursor = pos;
        }
        text.push_str(marker);
    }
    text.push_str(index.slice(cursor, ctx_end).unwrap_or_default());

    MarkedPairSample {
        origin_report: report_id.to_string(),
        label,
        head_span: (head.start, head.end),
        tail_span: (tail.start, tail.end),
        text_with_markers: text,
    }
}
