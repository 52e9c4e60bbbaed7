use crate::corpus::text::{sentence_of, split_sentences, tokenize};
use crate::corpus::{EntityMention, RelationInstance, RelationType, Report};

/// Proximity linker settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkerConfig {
    /// Maximum token distance between linked span ends. Must be at least 1.
    pub window: usize,
    /// Relation types the linker may emit.
    pub relation_types: Vec<RelationType>,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        LinkerConfig { window: 20, relation_types: RelationType::ALL.to_vec() }
    }
}

/// Links every modifier/descriptor to its nearest compatible head in the same
/// sentence, within `cfg.window` tokens.
///
/// Distance is the number of tokens between the two spans' final tokens;
/// confidence is `max(0, 1 - distance / window)`. Ties go to the leftmost
/// head. `entities` must be sorted by start.
pub fn link_relations(
    report: &Report,
    entities: &[EntityMention],
    cfg: &LinkerConfig,
) -> Vec<RelationInstance> {
    let window = cfg.window.max(1);
    let sentences = split_sentences(&report.text);
    let tokens = tokenize(&report.text);
    let last_token = |e: &EntityMention| tokens.partition_point(|&(s, _)| s < e.end).saturating_sub(1);
    let sent: Vec<Option<usize>> = entities.iter().map(|e| sentence_of(&sentences, e.start)).collect();
    let pos: Vec<usize> = entities.iter().map(last_token).collect();

    let mut out = Vec::new();
    for (t, tail) in entities.iter().enumerate() {
        let Some(rel) = RelationType::with_tail(tail.label) else { continue };
        if !cfg.relation_types.contains(&rel) || sent[t].is_none() {
            continue;
        }
        let head_label = rel.endpoints().0;
        let best = entities
            .iter()
            .enumerate()
            .filter(|&(h, head)| head.label == head_label && sent[h] == sent[t])
            .map(|(h, head)| (pos[h].abs_diff(pos[t]), head.start, h))
            .filter(|&(d, _, _)| d <= window)
            .min();
        if let Some((distance, _, h)) = best {
            out.push(RelationInstance {
                head: h,
                tail: t,
                rel_type: rel,
                confidence: (1.0 - distance as f64 / window as f64).max(0.0),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    fn mention(text: &str, word: &str, nth: usize, label: Label) -> EntityMention {
        let byte = text.match_indices(word).nth(nth).unwrap().0;
        let start = text[..byte].chars().count();
        EntityMention { start, end: start + word.chars().count(), label, surface: word.into(), confidence: 1.0 }
    }

    fn report(text: &str) -> Report {
        Report { id: "r".into(), text: text.into() }
    }

    #[test]
    fn adjacent_marker_and_modifier() {
        let text = "ER strongly positive";
        let ents = vec![
            mention(text, "ER", 0, Label::IhcMarker),
            mention(text, "strongly", 0, Label::IhcModifier),
        ];
        let rels = link_relations(&report(text), &ents, &LinkerConfig::default());
        assert_eq!(rels.len(), 1);
        assert_eq!((rels[0].head, rels[0].tail), (0, 1));
        assert!((rels[0].confidence - 0.95).abs() < 1e-12);
    }

    #[test]
    fn no_links_across_sentences() {
        let text = "ER seen. Strongly stained.";
        let ents = vec![
            mention(text, "ER", 0, Label::IhcMarker),
            mention(text, "Strongly", 0, Label::IhcModifier),
        ];
        assert!(link_relations(&report(text), &ents, &LinkerConfig::default()).is_empty());
    }

    #[test]
    fn equidistant_tie_goes_left() {
        let text = "CD3 positive CD20";
        let ents = vec![
            mention(text, "CD3", 0, Label::IhcMarker),
            mention(text, "positive", 0, Label::IhcModifier),
            mention(text, "CD20", 0, Label::IhcMarker),
        ];
        let rels = link_relations(&report(text), &ents, &LinkerConfig::default());
        assert_eq!(rels.len(), 1);
        assert_eq!((rels[0].head, rels[0].tail), (0, 1));
    }

    #[test]
    fn window_limits_distance() {
        let text = "ER a b c d positive";
        let ents = vec![
            mention(text, "ER", 0, Label::IhcMarker),
            mention(text, "positive", 0, Label::IhcModifier),
        ];
        let cfg = LinkerConfig { window: 4, ..LinkerConfig::default() };
        assert!(link_relations(&report(text), &ents, &cfg).is_empty());
        let cfg = LinkerConfig { window: 5, ..LinkerConfig::default() };
        let rels = link_relations(&report(text), &ents, &cfg);
        assert_eq!(rels[0].confidence, 0.0);
    }

    #[test]
    fn diagnosis_descriptor_pairs() {
        let text = "Appearances raise the possibility of lymphoma";
        let ents = vec![
            mention(text, "possibility", 0, Label::DiagnosisDescriptor),
            mention(text, "lymphoma", 0, Label::PathologicalDiagnosis),
            mention(text, "Appearances", 0, Label::AnatomicalSite),
        ];
        let rels = link_relations(&report(text), &ents, &LinkerConfig::default());
        assert_eq!(rels.len(), 1);
        assert_eq!(rels[0].rel_type, RelationType::DiagnosisDescriptor);
        assert_eq!((rels[0].head, rels[0].tail), (1, 0));
    }

    #[test]
    fn disabled_types_are_skipped() {
        let text = "ER strongly positive";
        let ents = vec![
            mention(text, "ER", 0, Label::IhcMarker),
            mention(text, "strongly", 0, Label::IhcModifier),
        ];
        let cfg = LinkerConfig { relation_types: vec![RelationType::DiagnosisDescriptor], ..LinkerConfig::default() };
        assert!(link_relations(&report(text), &ents, &cfg).is_empty());
    }
}
