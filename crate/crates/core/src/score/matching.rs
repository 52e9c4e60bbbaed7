use crate::corpus::RelationInstance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationMatch {
    pub ref_index: usize,
    pub cand_index: usize,
    /// `min(head similarity, tail similarity)`.
    pub score: f64,
}

/// One-to-one matching of candidate relations to reference relations.
///
/// A pair is admissible when the relation types agree and both the head
/// pair and the tail pair have `entity_similarity >= tau`.
/// `entity_similarity(i, j)` compares reference entity `i` with candidate
/// entity `j`. Admissible pairs are taken greedily by descending
/// `min(head, tail)` similarity, ties by reference index then candidate
/// index.
pub fn match_relations<F>(
    refs: &[RelationInstance],
    cands: &[RelationInstance],
    entity_similarity: F,
    tau: f64,
) -> Vec<RelationMatch>
where
    F: Fn(usize, usize) -> f64,
{
    let mut admissible = Vec::new();
    for (i, r) in refs.iter().enumerate() {
        for (j, c) in cands.iter().enumerate() {
            if r.rel_type != c.rel_type {
                continue;
            }
            let head = entity_similarity(r.head, c.head);
            let tail = entity_similarity(r.tail, c.tail);
            if head >= tau && tail >= tau {
                admissible.push(RelationMatch { ref_index: i, cand_index: j, score: head.min(tail) });
            }
        }
    }
    admissible.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.ref_index.cmp(&b.ref_index))
            .then(a.cand_index.cmp(&b.cand_index))
    });

    let mut ref_used = vec![false; refs.len()];
    let mut cand_used = vec![false; cands.len()];
    let mut out = Vec::new();
    for m in admissible {
        if ref_used[m.ref_index] || cand_used[m.cand_index] {
            continue;
        }
        ref_used[m.ref_index] = true;
        cand_used[m.cand_index] = true;
        out.push(m);
    }
    out
}
