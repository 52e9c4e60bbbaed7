//! Entity surface embeddings and cosine similarity.
//!
//! Two embedders are provided: [`HashedEmbedder`], a model-free signed
//! feature-hashing embedder over character n-grams, and [`VectorStore`],
//! which serves vectors produced by an external encoder.

mod hashed;
mod store;

use std::path::PathBuf;

pub use hashed::{embed_hashed, HashedEmbedder, HashedEmbedderConfig};
pub use store::{FallbackPolicy, VectorStore};

/// Norm tolerance for vectors read from outside the crate.
pub const LOAD_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("no vector for key `{key}`")]
    Missing { key: String },
    #[error("vector store line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read vector store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid embedder configuration: {0}")]
    Config(String),
}

/// Lowercases, collapses internal whitespace, and strips punctuation from
/// both ends.
pub fn normalize_key(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_matches(|c: char| !c.is_alphanumeric())
        .trim()
        .to_string()
}

/// A dense vector that is either unit-norm or the all-zero sentinel used for
/// empty surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn zero(dim: usize) -> Self {
        EmbeddingVector { values: vec![0.0; dim] }
    }

    /// Scales `values` to unit norm. An all-zero input yields the sentinel.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = l2(&values);
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        EmbeddingVector { values }
    }

    /// Wraps values that are already unit-norm within `tol`, or all zero.
    pub fn from_unit(values: Vec<f64>, tol: f64) -> Option<Self> {
        let norm = l2(&values);
        (norm == 0.0 || (norm - 1.0).abs() <= tol).then_some(EmbeddingVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        l2(&self.values)
    }
}

fn l2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Cosine similarity in `[-1, 1]`; 0 when either side is the zero sentinel.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbedError> {
    if u.dim() != v.dim() {
        return Err(EmbedError::Dimension { expected: u.dim(), got: v.dim() });
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    // sqrt(x)^2 need not round back to x
    if u.values == v.values {
        return Ok(1.0);
    }
    let dot: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// `max(0, cosine(u, v))`.
pub fn cosine_clamped(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbedError> {
    Ok(cosine(u, v)?.max(0.0))
}

/// An entity occurrence to embed.
#[derive(Debug, Clone, Copy)]
pub struct EmbedQuery<'a> {
    pub report_id: &'a str,
    pub start: usize,
    pub end: usize,
    pub surface: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedded {
    pub vector: EmbeddingVector,
    /// The embedder had no entry and fell back to another route.
    pub missed: bool,
}

pub trait Embedder {
    fn dim(&self) -> usize;
    fn embed(&self, query: &EmbedQuery<'_>) -> Result<Embedded, EmbedError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_normalization() {
        assert_eq!(normalize_key("  Lymph   Node."), "lymph node");
        assert_eq!(normalize_key("CD20"), "cd20");
        assert_eq!(normalize_key("(ER)"), "er");
        assert_eq!(normalize_key("Ki-67"), "ki-67");
        assert_eq!(normalize_key("..."), "");
    }

    fn onehot(i: usize, d: usize) -> EmbeddingVector {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        EmbeddingVector::normalized(v)
    }

    #[test]
    fn cosine_basics() {
        let v = EmbeddingVector::normalized(vec![0.3, -0.4, 1.2]);
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&onehot(0, 4), &onehot(2, 4)).unwrap(), 0.0);
        let neg = EmbeddingVector::normalized(v.values().iter().map(|x| -x).collect());
        assert!((cosine(&v, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(cosine_clamped(&v, &neg).unwrap(), 0.0);
    }

    #[test]
    fn zero_sentinel_similarity() {
        let z = EmbeddingVector::zero(3);
        let v = EmbeddingVector::normalized(vec![1.0, 2.0, 3.0]);
        assert!(z.is_zero());
        assert_eq!(cosine(&z, &v).unwrap(), 0.0);
        assert_eq!(cosine(&z, &z).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            cosine(&onehot(0, 3), &onehot(0, 4)),
            Err(EmbedError::Dimension { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn from_unit_tolerance() {
        assert!(EmbeddingVector::from_unit(vec![0.6, 0.8], 1e-6).is_some());
        assert!(EmbeddingVector::from_unit(vec![0.0, 0.0], 1e-6).is_some());
        assert!(EmbeddingVector::from_unit(vec![1.0, 1.0], 1e-3).is_none());
    }
}
