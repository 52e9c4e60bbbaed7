//! The HARE score.
//!
//! Pipeline per report pair: confidence filtering, entity embedding, a
//! clamped-cosine similarity matrix between reference and candidate
//! entities, max-similarity entity precision/recall, one-to-one relation
//! matching, and the composite `f1_e + f1_r`.
//!
//! Empty sides follow one convention throughout: if both sides of a
//! component are empty it scores 1, if exactly one is empty it scores 0.

mod matching;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::AnnotationSet;
use crate::embed::{cosine_clamped, normalize_key, EmbedError, EmbedQuery, Embedder, EmbeddingVector};
use crate::extract::{filter_split, ThresholdMode};

pub use matching::{match_relations, RelationMatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationMatchMode {
    /// Endpoints correspond when their clamped cosine reaches `relation_align_tau`.
    Soft,
    /// Endpoints correspond only when their normalized surfaces are equal.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub entity_threshold: f64,
    pub relation_threshold: f64,
    pub threshold_mode: ThresholdMode,
    pub relation_align_tau: f64,
    pub relation_match: RelationMatchMode,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            entity_threshold: 0.7,
            relation_threshold: 0.7,
            threshold_mode: ThresholdMode::AtOrAbove,
            relation_align_tau: 0.7,
            relation_match: RelationMatchMode::Soft,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        for (name, v) in [
            ("entity_threshold", self.entity_threshold),
            ("relation_threshold", self.relation_threshold),
            ("relation_align_tau", self.relation_align_tau),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ScoreError::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("embedding failed for reports `{ref_id}` / `{cand_id}`: {source}")]
    Embed {
        ref_id: String,
        cand_id: String,
        #[source]
        source: EmbedError,
    },
    #[error("invalid scoring configuration: {0}")]
    Config(String),
}

/// Reference entities on rows, candidate entities on columns; every cell is
/// a clamped cosine in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl SimilarityMatrix {
    /// Returns `None` when the cell count is wrong or a cell is outside `[0, 1]`.
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>) -> Option<Self> {
        (cells.len() == rows * cols && cells.iter().all(|c| (0.0..=1.0).contains(c)))
            .then_some(SimilarityMatrix { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds the matrix of clamped cosines between two vector lists.
    pub fn from_vectors(refs: &[EmbeddingVector], cands: &[EmbeddingVector]) -> Result<Self, EmbedError> {
        let mut cells = Vec::with_capacity(refs.len() * cands.len());
        for r in refs {
            for c in cands {
                cells.push(cosine_clamped(r, c)?);
            }
        }
        Ok(SimilarityMatrix { rows: refs.len(), cols: cands.len(), cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn transpose(&self) -> Self {
        let mut cells = Vec::with_capacity(self.cells.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                cells.push(self.get(r, c));
            }
        }
        SimilarityMatrix { rows: self.cols, cols: self.rows, cells }
    }
}

/// Precision, recall, and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub const PERFECT: Prf = Prf { precision: 1.0, recall: 1.0, f1: 1.0 };
    pub const ZERO: Prf = Prf { precision: 0.0, recall: 0.0, f1: 0.0 };

    pub fn new(precision: f64, recall: f64) -> Self {
        let sum = precision + recall;
        let f1 = if sum > 0.0 { 2.0 * precision * recall / sum } else { 0.0 };
        Prf { precision, recall, f1 }
    }
}

/// Recall is the mean of row maxima (each reference entity's best match);
/// precision is the mean of column maxima.
pub fn entity_prf(sim: &SimilarityMatrix) -> Prf {
    match (sim.rows, sim.cols) {
        (0, 0) => return Prf::PERFECT,
        (0, _) | (_, 0) => return Prf::ZERO,
        _ => {}
    }
    let mut row_max = vec![0.0f64; sim.rows];
    let mut col_max = vec![0.0f64; sim.cols];
    for (r, rm) in row_max.iter_mut().enumerate() {
        for (c, cm) in col_max.iter_mut().enumerate() {
            let v = sim.get(r, c);
            *rm = rm.max(v);
            *cm = cm.max(v);
        }
    }
    let recall = row_max.iter().sum::<f64>() / sim.rows as f64;
    let precision = col_max.iter().sum::<f64>() / sim.cols as f64;
    Prf::new(precision, recall)
}

pub fn relation_prf(matched: usize, n_ref: usize, n_cand: usize) -> Prf {
    match (n_ref, n_cand) {
        (0, 0) => Prf::PERFECT,
        (0, _) | (_, 0) => Prf::ZERO,
        _ => Prf::new(matched as f64 / n_cand as f64, matched as f64 / n_ref as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub ref_entities: usize,
    pub cand_entities: usize,
    pub ref_relations: usize,
    pub cand_relations: usize,
    pub matched_relations: usize,
    pub embedder_misses: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HareBreakdown {
    pub precision_e: f64,
    pub recall_e: f64,
    pub f1_e: f64,
    pub precision_r: f64,
    pub recall_r: f64,
    pub f1_r: f64,
    pub hare: f64,
    pub counts: Counts,
}

impl HareBreakdown {
    pub fn new(entity: Prf, relation: Prf, counts: Counts) -> Self {
        HareBreakdown {
            precision_e: entity.precision,
            recall_e: entity.recall,
            f1_e: entity.f1,
            precision_r: relation.precision,
            recall_r: relation.recall,
            f1_r: relation.f1,
            hare: entity.f1 + relation.f1,
            counts,
        }
    }
}

fn embed_all<E: Embedder + ?Sized>(
    set: &AnnotationSet,
    embedder: &E,
    misses: &mut usize,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    set.entities
        .iter()
        .map(|e| {
            let q = EmbedQuery { report_id: &set.report_id, start: e.start, end: e.end, surface: &e.surface };
            let out = embedder.embed(&q)?;
            *misses += out.missed as usize;
            Ok(out.vector)
        })
        .collect()
}

/// Scores a candidate annotation set against a reference.
pub fn hare_score<E: Embedder + ?Sized>(
    reference: &AnnotationSet,
    candidate: &AnnotationSet,
    embedder: &E,
    cfg: &ScoringConfig,
) -> Result<HareBreakdown, ScoreError> {
    cfg.validate()?;
    let filter = |a| filter_split(a, cfg.entity_threshold, cfg.relation_threshold, cfg.threshold_mode);
    let (r, c) = (filter(reference), filter(candidate));

    let mut misses = 0;
    let embed_err = |source| ScoreError::Embed {
        ref_id: reference.report_id.clone(),
        cand_id: candidate.report_id.clone(),
        source,
    };
    let rv = embed_all(&r, embedder, &mut misses).map_err(embed_err)?;
    let cv = embed_all(&c, embedder, &mut misses).map_err(embed_err)?;
    let sim = SimilarityMatrix::from_vectors(&rv, &cv).map_err(embed_err)?;

    let entity = entity_prf(&sim);
    let matches = match cfg.relation_match {
        RelationMatchMode::Soft => {
            match_relations(&r.relations, &c.relations, |i, j| sim.get(i, j), cfg.relation_align_tau)
        }
        RelationMatchMode::Exact => {
            let rk: Vec<String> = r.entities.iter().map(|e| normalize_key(&e.surface)).collect();
            let ck: Vec<String> = c.entities.iter().map(|e| normalize_key(&e.surface)).collect();
            match_relations(&r.relations, &c.relations, |i, j| (rk[i] == ck[j]) as u8 as f64, 1.0)
        }
    };
    let relation = relation_prf(matches.len(), r.relations.len(), c.relations.len());

    Ok(HareBreakdown::new(entity, relation, Counts {
        ref_entities: r.entities.len(),
        cand_entities: c.entities.len(),
        ref_relations: r.relations.len(),
        cand_relations: c.relations.len(),
        matched_relations: matches.len(),
        embedder_misses: misses,
    }))
}

/// Confidence-threshold ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Keep confidences at or above the configured threshold.
    Threshold,
    NoThreshold,
    /// Keep only confidences below the threshold.
    Inverted,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Threshold, Variant::NoThreshold, Variant::Inverted];

    pub fn mode(self) -> ThresholdMode {
        match self {
            Variant::Threshold => ThresholdMode::AtOrAbove,
            Variant::NoThreshold => ThresholdMode::None,
            Variant::Inverted => ThresholdMode::Below,
        }
    }

    /// Row name, e.g. `threshold_0.7`.
    pub fn name(self, cfg: &ScoringConfig) -> String {
        match self {
            Variant::Threshold => format!("threshold_{}", cfg.entity_threshold),
            Variant::NoThreshold => "no_threshold".into(),
            Variant::Inverted => "inverted".into(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Threshold => "threshold",
            Variant::NoThreshold => "no_threshold",
            Variant::Inverted => "inverted",
        })
    }
}

/// Scores one pair under each [`Variant`], in [`Variant::ALL`] order.
pub fn ablate<E: Embedder + ?Sized>(
    reference: &AnnotationSet,
    candidate: &AnnotationSet,
    embedder: &E,
    base: &ScoringConfig,
) -> Result<Vec<(Variant, HareBreakdown)>, ScoreError> {
    Variant::ALL
        .into_iter()
        .map(|v| {
            let cfg = ScoringConfig { threshold_mode: v.mode(), ..*base };
            hare_score(reference, candidate, embedder, &cfg).map(|b| (v, b))
        })
        .collect()
}
