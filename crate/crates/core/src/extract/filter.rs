use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationSet, RelationInstance};

/// Which confidences survive filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Keep confidence >= threshold.
    AtOrAbove,
    /// Keep confidence < threshold. Complements `AtOrAbove` exactly.
    Below,
    /// Keep everything.
    None,
}

impl ThresholdMode {
    pub fn keeps(self, confidence: f64, threshold: f64) -> bool {
        match self {
            ThresholdMode::AtOrAbove => confidence >= threshold,
            ThresholdMode::Below => confidence < threshold,
            ThresholdMode::None => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdMode::AtOrAbove => "above",
            ThresholdMode::Below => "below",
            ThresholdMode::None => "none",
        }
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "above" | "at_or_above" => Ok(ThresholdMode::AtOrAbove),
            "below" => Ok(ThresholdMode::Below),
            "none" => Ok(ThresholdMode::None),
            other => Err(format!("unknown threshold mode `{other}` (expected above, below, none)")),
        }
    }
}

/// Filters entities and relations against one shared threshold.
pub fn filter_by_confidence(annots: &AnnotationSet, threshold: f64, mode: ThresholdMode) -> AnnotationSet {
    filter_split(annots, threshold, threshold, mode)
}

/// Filters entities against `entity_threshold` and relations against
/// `relation_threshold`. A relation survives only if it passes and both of
/// its endpoints survive; surviving relation indices are remapped onto the
/// filtered entity list.
pub fn filter_split(
    annots: &AnnotationSet,
    entity_threshold: f64,
    relation_threshold: f64,
    mode: ThresholdMode,
) -> AnnotationSet {
    let mut remap = vec![None; annots.entities.len()];
    let mut entities = Vec::new();
    for (i, e) in annots.entities.iter().enumerate() {
        if mode.keeps(e.confidence, entity_threshold) {
            remap[i] = Some(entities.len());
            entities.push(e.clone());
        }
    }
    let relations = annots
        .relations
        .iter()
        .filter(|r| mode.keeps(r.confidence, relation_threshold))
        .filter_map(|r| {
            Some(RelationInstance { head: remap[r.head]?, tail: remap[r.tail]?, ..*r })
        })
        .collect();
    AnnotationSet {
        report_id: annots.report_id.clone(),
        entities,
        relations,
        source: annots.source,
    }
}
