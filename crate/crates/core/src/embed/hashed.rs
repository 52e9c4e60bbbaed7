use serde::{Deserialize, Serialize};

use super::{normalize_key, EmbedError, EmbedQuery, Embedded, Embedder, EmbeddingVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedEmbedderConfig {
    /// Character n-gram sizes.
    pub ngram_sizes: Vec<usize>,
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashedEmbedderConfig {
    fn default() -> Self {
        HashedEmbedderConfig { ngram_sizes: vec![3, 4, 5], dim: 256, seed: 0 }
    }
}

impl HashedEmbedderConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim < 8 {
            return Err(EmbedError::Config(format!("dimension {} is below 8", self.dim)));
        }
        if self.ngram_sizes.is_empty() || self.ngram_sizes.contains(&0) {
            return Err(EmbedError::Config("n-gram sizes must be non-empty and positive".into()));
        }
        Ok(())
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn feature_hash(gram: &[char], seed: u64) -> u64 {
    let mut h = FNV_OFFSET ^ splitmix64(seed);
    let mut buf = [0u8; 4];
    for c in gram {
        for b in c.encode_utf8(&mut buf).bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    splitmix64(h)
}

/// Embeds a surface by signed feature hashing of the character n-grams of
/// `<key>`, where `key` is the normalized surface. Empty keys map to the zero
/// sentinel.
pub fn embed_hashed(surface: &str, cfg: &HashedEmbedderConfig) -> EmbeddingVector {
    let key = normalize_key(surface);
    if key.is_empty() {
        return EmbeddingVector::zero(cfg.dim);
    }
    let padded: Vec<char> = std::iter::once('<').chain(key.chars()).chain(std::iter::once('>')).collect();
    let mut values = vec![0.0; cfg.dim];
    let mut add = |gram: &[char]| {
        let h = feature_hash(gram, cfg.seed);
        let bucket = (h % cfg.dim as u64) as usize;
        values[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    };
    let mut any = false;
    for &n in &cfg.ngram_sizes {
        for gram in padded.windows(n) {
            add(gram);
            any = true;
        }
    }
    if !any {
        add(&padded);
    }
    EmbeddingVector::normalized(values)
}

#[derive(Debug, Clone, Default)]
pub struct HashedEmbedder {
    cfg: HashedEmbedderConfig,
}

impl HashedEmbedder {
    pub fn new(cfg: HashedEmbedderConfig) -> Result<Self, EmbedError> {
        cfg.validate()?;
        Ok(HashedEmbedder { cfg })
    }

    pub fn config(&self) -> &HashedEmbedderConfig {
        &self.cfg
    }
}

impl Embedder for HashedEmbedder {
    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn embed(&self, query: &EmbedQuery<'_>) -> Result<Embedded, EmbedError> {
        Ok(Embedded { vector: embed_hashed(query.surface, &self.cfg), missed: false })
    }
}
