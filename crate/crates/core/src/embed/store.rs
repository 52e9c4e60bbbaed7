use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::{
    embed_hashed, normalize_key, EmbedError, EmbedQuery, Embedded, Embedder, EmbeddingVector,
    HashedEmbedderConfig, LOAD_NORM_TOLERANCE,
};

/// What a store does when a key is missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FallbackPolicy {
    /// Embed the surface with the hashed embedder. Its dimension is forced to
    /// the store's.
    Hashed(HashedEmbedderConfig),
    Error,
}

/// Vectors keyed by normalized surface, or by `report_id#start#end` for
/// occurrence-level vectors.
#[derive(Debug, Clone)]
pub struct VectorStore {
    dim: usize,
    entries: BTreeMap<String, EmbeddingVector>,
    fallback: FallbackPolicy,
}

impl VectorStore {
    pub fn new(dim: usize, fallback: FallbackPolicy) -> Self {
        let fallback = match fallback {
            FallbackPolicy::Hashed(cfg) => FallbackPolicy::Hashed(HashedEmbedderConfig { dim, ..cfg }),
            FallbackPolicy::Error => FallbackPolicy::Error,
        };
        VectorStore { dim, entries: BTreeMap::new(), fallback }
    }

    pub fn load(path: impl AsRef<Path>, fallback: FallbackPolicy) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let data = fs::read_to_string(path)
            .map_err(|source| EmbedError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&data, fallback)
    }

    /// Parses `dim=<d>` followed by `key<TAB>v1 v2 … vd` lines.
    pub fn parse(data: &str, fallback: FallbackPolicy) -> Result<Self, EmbedError> {
        let mut lines = data.lines().enumerate().map(|(i, l)| (i + 1, l));
        let parse_err = |line, message: String| EmbedError::Parse { line, message };
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing `dim=` header".into()))?;
        let dim: usize = header
            .trim()
            .strip_prefix("dim=")
            .and_then(|d| d.parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| parse_err(1, format!("expected `dim=<positive integer>`, found `{header}`")))?;

        let mut store = VectorStore::new(dim, fallback);
        for (line, raw) in lines {
            if raw.trim().is_empty() {
                continue;
            }
            let (key, rest) = raw
                .split_once('\t')
                .ok_or_else(|| parse_err(line, "expected `key<TAB>values`".into()))?;
            if key.is_empty() {
                return Err(parse_err(line, "empty key".into()));
            }
            let values = rest
                .split_whitespace()
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| parse_err(line, "values must be finite decimal reals".into()))?;
            if values.len() != dim {
                return Err(parse_err(line, format!("dimension mismatch: expected {dim}, got {}", values.len())));
            }
            let vector = EmbeddingVector::from_unit(values, LOAD_NORM_TOLERANCE)
                .ok_or_else(|| parse_err(line, "vector is not unit-norm".into()))?;
            if store.entries.insert(key.to_string(), vector).is_some() {
                return Err(parse_err(line, format!("duplicate key `{key}`")));
            }
        }
        Ok(store)
    }

    /// Writes the store in canonical form: keys sorted, shortest round-trip
    /// decimal values.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "dim={}", self.dim)?;
        for (key, v) in &self.entries {
            let vals: Vec<String> = v.values().iter().map(f64::to_string).collect();
            writeln!(w, "{key}\t{}", vals.join(" "))?;
        }
        Ok(())
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: EmbeddingVector) -> Result<(), EmbedError> {
        if vector.dim() != self.dim {
            return Err(EmbedError::Dimension { expected: self.dim, got: vector.dim() });
        }
        self.entries.insert(key.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&EmbeddingVector> {
        self.entries.get(key)
    }

    /// Vector for `normalize_key(surface)`.
    ///
    /// A multi-word key absent from the store is mean-pooled from its words
    /// when every word is present. Otherwise the fallback policy applies and
    /// the result is flagged as a miss.
    pub fn lookup(&self, surface: &str) -> Result<Embedded, EmbedError> {
        let key = normalize_key(surface);
        if let Some(v) = self.entries.get(&key) {
            return Ok(Embedded { vector: v.clone(), missed: false });
        }
        if let Some(v) = self.pool_words(&key) {
            return Ok(Embedded { vector: v, missed: false });
        }
        match &self.fallback {
            FallbackPolicy::Hashed(cfg) => Ok(Embedded { vector: embed_hashed(surface, cfg), missed: true }),
            FallbackPolicy::Error => Err(EmbedError::Missing { key }),
        }
    }

    fn pool_words(&self, key: &str) -> Option<EmbeddingVector> {
        let words: Vec<&str> = key.split(' ').collect();
        if words.len() < 2 {
            return None;
        }
        let mut sum = vec![0.0; self.dim];
        for w in words {
            let v = self.entries.get(w)?;
            let n = v.norm();
            if n == 0.0 {
                continue;
            }
            sum.iter_mut().zip(v.values()).for_each(|(s, x)| *s += x / n);
        }
        Some(EmbeddingVector::normalized(sum))
    }
}

impl Embedder for VectorStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, query: &EmbedQuery<'_>) -> Result<Embedded, EmbedError> {
        let occurrence = format!("{}#{}#{}", query.report_id, query.start, query.end);
        if let Some(v) = self.entries.get(&occurrence) {
            return Ok(Embedded { vector: v.clone(), missed: false });
        }
        self.lookup(query.surface)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STORE: &str = "dim=3\ncd20\t1 0 0\ner\t0 1 0\nlymph\t0 0 1\nnode\t0 1 0\nr1#0#4\t0.6 0.8 0\n";

    fn hashed() -> FallbackPolicy {
        FallbackPolicy::Hashed(HashedEmbedderConfig::default())
    }

    #[test]
    fn lookup_normalizes_query() {
        let s = VectorStore::parse(STORE, FallbackPolicy::Error).unwrap();
        let hit = s.lookup("CD20").unwrap();
        assert_eq!(hit.vector.values(), [1.0, 0.0, 0.0]);
        assert!(!hit.missed);
    }

    #[test]
    fn miss_with_hashed_fallback() {
        let s = VectorStore::parse(STORE, hashed()).unwrap();
        let got = s.lookup("Ki-67").unwrap();
        assert!(got.missed);
        assert_eq!(got.vector.dim(), 3);
        let expect = embed_hashed("Ki-67", &HashedEmbedderConfig { dim: 3, ..Default::default() });
        assert_eq!(got.vector, expect);
    }

    #[test]
    fn miss_with_error_policy() {
        let s = VectorStore::parse(STORE, FallbackPolicy::Error).unwrap();
        let err = s.lookup("Ki-67").unwrap_err();
        assert!(matches!(err, EmbedError::Missing { ref key } if key == "ki-67"));
    }

    #[test]
    fn multiword_keys_pool_words() {
        let s = VectorStore::parse(STORE, FallbackPolicy::Error).unwrap();
        let got = s.lookup("Lymph Node").unwrap();
        let h = 0.5f64.sqrt();
        assert!((got.vector.values()[1] - h).abs() < 1e-12);
        assert!((got.vector.values()[2] - h).abs() < 1e-12);
        assert!(s.lookup("lymph gland").is_err());
    }

    #[test]
    fn occurrence_keys_take_precedence() {
        let s = VectorStore::parse(STORE, FallbackPolicy::Error).unwrap();
        let q = EmbedQuery { report_id: "r1", start: 0, end: 4, surface: "CD20" };
        assert_eq!(s.embed(&q).unwrap().vector.values(), [0.6, 0.8, 0.0]);
        let q = EmbedQuery { report_id: "r2", ..q };
        assert_eq!(s.embed(&q).unwrap().vector.values(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn parse_errors() {
        let bad = |data: &str| VectorStore::parse(data, FallbackPolicy::Error).unwrap_err();
        assert!(matches!(bad(""), EmbedError::Parse { line: 1, .. }));
        assert!(matches!(bad("dims=3\n"), EmbedError::Parse { line: 1, .. }));
        assert!(bad("dim=3\ncd20\t1 0\n").to_string().contains("dimension mismatch"));
        assert!(matches!(bad("dim=2\na\t1 0\na\t0 1\n"), EmbedError::Parse { line: 3, .. }));
        assert!(matches!(bad("dim=2\na\t3 4\n"), EmbedError::Parse { line: 2, .. }));
        assert!(matches!(bad("dim=2\na 1 0\n"), EmbedError::Parse { line: 2, .. }));
        assert!(matches!(bad("dim=2\na\tx 0\n"), EmbedError::Parse { line: 2, .. }));
    }

    #[test]
    fn canonical_round_trip() {
        let data = "dim=3\na\t0.6 0.8 0\nb\t0 0 1\nc\t-0.28 0.96 0\n";
        let s = VectorStore::parse(data, FallbackPolicy::Error).unwrap();
        let mut out = Vec::new();
        s.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), data);
    }

    #[test]
    fn empty_store_header_only() {
        let s = VectorStore::parse("dim=768\n", hashed()).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.dim(), 768);
    }

    #[test]
    fn insert_checks_dimension() {
        let mut s = VectorStore::new(3, FallbackPolicy::Error);
        assert!(s.insert("x", EmbeddingVector::zero(4)).is_err());
        s.insert("x", EmbeddingVector::zero(3)).unwrap();
        assert_eq!(s.len(), 1);
    }
}
