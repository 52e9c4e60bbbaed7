mod support;

use hare_core::corpus::{AnnotationSet, EntityMention};
use hare_core::embed::{
    cosine, embed_hashed, EmbedQuery, Embedder, EmbeddingVector, FallbackPolicy, HashedEmbedder,
    HashedEmbedderConfig, VectorStore,
};
use hare_core::score::{
    ablate, entity_prf, hare_score, match_relations, RelationMatchMode, ScoringConfig, SimilarityMatrix, Variant,
};
use hare_core::ThresholdMode;
use proptest::prelude::*;
use support::{arb_annotation_set, oracle};

fn embedder() -> HashedEmbedder {
    HashedEmbedder::new(HashedEmbedderConfig::default()).unwrap()
}

fn no_threshold() -> ScoringConfig {
    ScoringConfig { threshold_mode: ThresholdMode::None, ..ScoringConfig::default() }
}

fn arb_matrix() -> impl Strategy<Value = (usize, usize, Vec<Vec<f64>>)> {
    (0usize..=8, 0usize..=8).prop_flat_map(|(r, c)| {
        let rows = prop::collection::vec(prop::collection::vec(0.0f64..=1.0, c), r);
        (Just(r), Just(c), rows)
    })
}

fn arb_unit(dim: usize) -> impl Strategy<Value = EmbeddingVector> {
    prop::collection::vec(-1.0f64..1.0, dim)
        .prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(EmbeddingVector::normalized)
}

proptest! {
    #[test]
    fn entity_prf_matches_definition((r, c, rows) in arb_matrix()) {
        let sim = SimilarityMatrix::new(r, c, rows.concat()).unwrap();
        let got = entity_prf(&sim);
        let (p, rc, f) = oracle::entity_prf(&rows, c);
        prop_assert!((got.precision - p).abs() < 1e-9);
        prop_assert!((got.recall - rc).abs() < 1e-9);
        prop_assert!((got.f1 - f).abs() < 1e-9);
        let t = entity_prf(&sim.transpose());
        prop_assert!((t.precision - got.recall).abs() < 1e-12 && (t.recall - got.precision).abs() < 1e-12);
    }

    #[test]
    fn hare_is_bounded(a in arb_annotation_set(8), b in arb_annotation_set(8), m in 0usize..3) {
        let cfg = ScoringConfig {
            threshold_mode: [ThresholdMode::AtOrAbove, ThresholdMode::Below, ThresholdMode::None][m],
            ..ScoringConfig::default()
        };
        let s = hare_score(&a, &b, &embedder(), &cfg).unwrap();
        for v in [s.precision_e, s.recall_e, s.f1_e, s.precision_r, s.recall_r, s.f1_r] {
            prop_assert!((0.0..=1.0).contains(&v), "{}", v);
        }
        prop_assert!((0.0..=2.0).contains(&s.hare));
        prop_assert_eq!(s.hare, s.f1_e + s.f1_r);
        prop_assert!(s.counts.matched_relations <= s.counts.ref_relations.min(s.counts.cand_relations));
    }

    #[test]
    fn hare_is_symmetric_under_swap(a in arb_annotation_set(8), b in arb_annotation_set(8), exact in any::<bool>()) {
        let cfg = ScoringConfig {
            relation_match: if exact { RelationMatchMode::Exact } else { RelationMatchMode::Soft },
            ..no_threshold()
        };
        let e = embedder();
        let ab = hare_score(&a, &b, &e, &cfg).unwrap();
        let ba = hare_score(&b, &a, &e, &cfg).unwrap();
        prop_assert!((ab.hare - ba.hare).abs() < 1e-12);
        prop_assert!((ab.precision_e - ba.recall_e).abs() < 1e-12);
        prop_assert_eq!(ab.counts.matched_relations, ba.counts.matched_relations);
    }

    #[test]
    fn identical_sets_score_two(a in arb_annotation_set(10)) {
        let s = hare_score(&a, &a, &embedder(), &no_threshold()).unwrap();
        prop_assert_eq!(s.hare, 2.0);
    }

    #[test]
    fn adding_a_reference_entity_to_the_candidate_never_lowers_recall(a in arb_annotation_set(8), b in arb_annotation_set(8), k in 0usize..8) {
        prop_assume!(!a.entities.is_empty());
        let e = embedder();
        let cfg = no_threshold();
        let before = hare_score(&a, &b, &e, &cfg).unwrap();
        let mut grown = b.clone();
        let mut copy = a.entities[k % a.entities.len()].clone();
        copy.start += 1000;
        copy.end += 1000;
        grown.entities.push(copy);
        let after = hare_score(&a, &grown, &e, &cfg).unwrap();
        prop_assert!(after.recall_e >= before.recall_e - 1e-12);
    }

    #[test]
    fn ablation_variants_match_their_modes(a in arb_annotation_set(8), b in arb_annotation_set(8)) {
        let e = embedder();
        let base = ScoringConfig::default();
        let rows = ablate(&a, &b, &e, &base).unwrap();
        prop_assert_eq!(rows.len(), 3);
        for (v, got) in rows {
            let cfg = ScoringConfig { threshold_mode: v.mode(), ..base };
            prop_assert_eq!(got, hare_score(&a, &b, &e, &cfg).unwrap());
        }
        prop_assert_eq!(Variant::Threshold.name(&base), "threshold_0.7");
    }

    #[test]
    fn relation_matching_is_one_to_one(a in arb_annotation_set(8), b in arb_annotation_set(8), tau in 0.0f64..=1.0) {
        let e = embedder();
        let vecs = |s: &AnnotationSet| s.entities.iter().map(|m| embed_hashed(&m.surface, e.config())).collect::<Vec<_>>();
        let sim = SimilarityMatrix::from_vectors(&vecs(&a), &vecs(&b)).unwrap();
        let matches = match_relations(&a.relations, &b.relations, |i, j| sim.get(i, j), tau);
        let mut refs: Vec<_> = matches.iter().map(|m| m.ref_index).collect();
        let mut cands: Vec<_> = matches.iter().map(|m| m.cand_index).collect();
        refs.sort();
        refs.dedup();
        cands.sort();
        cands.dedup();
        prop_assert_eq!(refs.len(), matches.len());
        prop_assert_eq!(cands.len(), matches.len());
        for m in &matches {
            let (r, c) = (&a.relations[m.ref_index], &b.relations[m.cand_index]);
            prop_assert_eq!(r.rel_type, c.rel_type);
            prop_assert!(sim.get(r.head, c.head) >= tau && sim.get(r.tail, c.tail) >= tau);
        }
        let t = sim.transpose();
        let swapped = match_relations(&b.relations, &a.relations, |i, j| t.get(i, j), tau);
        prop_assert_eq!(swapped.len(), matches.len());
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(u in arb_unit(16), v in arb_unit(16)) {
        let (uv, vu) = (cosine(&u, &v).unwrap(), cosine(&v, &u).unwrap());
        prop_assert_eq!(uv, vu);
        prop_assert!((-1.0..=1.0).contains(&uv));
        prop_assert_eq!(cosine(&u, &u).unwrap(), 1.0);
    }

    #[test]
    fn hashed_vectors_are_unit_and_deterministic(s in "[a-zA-Z0-9 -]{0,20}", seed in any::<u64>()) {
        let cfg = HashedEmbedderConfig { seed, ..HashedEmbedderConfig::default() };
        let v = embed_hashed(&s, &cfg);
        prop_assert_eq!(v.dim(), cfg.dim);
        prop_assert!(v.is_zero() || (v.norm() - 1.0).abs() < 1e-9);
        prop_assert_eq!(&v, &embed_hashed(&s, &cfg));
        // Case and surrounding whitespace do not matter.
        prop_assert_eq!(&v, &embed_hashed(&format!("  {}  ", s.to_uppercase()), &cfg));
    }

    #[test]
    fn vector_store_round_trips(keys in prop::collection::btree_set("[a-z]{1,8}", 0..10), seed in any::<u64>()) {
        let cfg = HashedEmbedderConfig { dim: 8, seed, ..HashedEmbedderConfig::default() };
        let mut store = VectorStore::new(8, FallbackPolicy::Error);
        for k in &keys {
            let v = embed_hashed(k, &cfg);
            if !v.is_zero() {
                store.insert(k.clone(), v).unwrap();
            }
        }
        let mut buf = Vec::new();
        store.write(&mut buf).unwrap();
        let back = VectorStore::parse(std::str::from_utf8(&buf).unwrap(), FallbackPolicy::Error).unwrap();
        prop_assert_eq!(back.len(), store.len());
        for k in &keys {
            if let Some(v) = store.get(k) {
                prop_assert_eq!(back.get(k), Some(v));
            }
        }
    }
}

#[test]
fn store_prefers_occurrence_keys_and_counts_misses() {
    let cfg = HashedEmbedderConfig { dim: 8, ..HashedEmbedderConfig::default() };
    let mut store = VectorStore::new(8, FallbackPolicy::Hashed(cfg.clone()));
    let occurrence = EmbeddingVector::normalized(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let by_surface = EmbeddingVector::normalized(vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    store.insert("r1#0#2", occurrence.clone()).unwrap();
    store.insert("er", by_surface.clone()).unwrap();
    let q = |id, surface| EmbedQuery { report_id: id, start: 0, end: 2, surface };
    assert_eq!(store.embed(&q("r1", "ER")).unwrap().vector, occurrence);
    assert_eq!(store.embed(&q("r2", "ER")).unwrap().vector, by_surface);
    let miss = store.embed(&q("r2", "PR")).unwrap();
    assert!(miss.missed);
    assert_eq!(miss.vector, embed_hashed("PR", &cfg));

    let strict = VectorStore::new(8, FallbackPolicy::Error);
    assert!(strict.embed(&q("r2", "PR")).is_err());
}

#[test]
fn empty_sets_follow_the_conventions() {
    let e = embedder();
    let cfg = no_threshold();
    let empty = AnnotationSet::new("r", hare_core::Source::Predicted);
    let mut one = empty.clone();
    one.entities.push(EntityMention {
        start: 0,
        end: 2,
        label: hare_core::Label::IhcMarker,
        surface: "ER".into(),
        confidence: 1.0,
    });
    assert_eq!(hare_score(&empty, &empty, &e, &cfg).unwrap().hare, 2.0);
    let s = hare_score(&one, &empty, &e, &cfg).unwrap();
    assert_eq!((s.f1_e, s.precision_e, s.recall_e), (0.0, 0.0, 0.0));
    // No relations on either side counts as perfect relation agreement.
    assert_eq!(s.f1_r, 1.0);
}
