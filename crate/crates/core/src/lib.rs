//! HARE: entity- and relation-alignment scoring for histopathology reports.
//!
//! The crate is split along the scoring pipeline:
//!
//! - [`corpus`]: reports, span-anchored annotations, expert ratings, and the
//!   preprocessing used to build relation-classification samples.
//! - [`extract`]: a deterministic gazetteer tagger and proximity relation
//!   linker, plus confidence filtering for any prediction set.
//! - [`embed`]: surface normalization, hashed character n-gram embeddings,
//!   and a file-backed vector store for externally produced embeddings.
//! - [`score`]: max-cosine entity alignment, relation matching, and the
//!   composite score.
//! - [`stats`]: correlation and regression against expert ratings.

pub mod corpus;
pub mod embed;
pub mod extract;
pub mod score;
pub mod stats;

pub use corpus::{
    AnnotationSet, EntityMention, ExpertScore, Label, RelationInstance, RelationType, Report,
    Source,
};
pub use embed::{EmbeddingVector, HashedEmbedder, HashedEmbedderConfig, VectorStore};
pub use extract::{Gazetteer, LinkerConfig, ThresholdMode};
pub use score::{hare_score, HareBreakdown, ScoringConfig};
