use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hare_core::embed::{FallbackPolicy, HashedEmbedderConfig};
use hare_core::extract::{LinkerConfig, ThresholdMode};
use hare_core::score::{RelationMatchMode, ScoringConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{Common, EmbedderChoice, ExtractorChoice, MatchChoice, StoreFallback};
use crate::CliError;

/// Keys accepted in a `--config` TOML file. Every key is optional and is
/// overridden by the matching flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub threshold: Option<f64>,
    pub relation_threshold: Option<f64>,
    pub threshold_mode: Option<String>,
    pub align_tau: Option<f64>,
    pub relation_match: Option<MatchChoice>,
    pub embedder: Option<EmbedderChoice>,
    pub store_fallback: Option<StoreFallback>,
    pub extractor: Option<ExtractorChoice>,
    pub exclude_zero: Option<bool>,
    pub out: Option<PathBuf>,
    pub reports: Option<PathBuf>,
    pub cand_reports: Option<PathBuf>,
    pub ref_annotations: Option<PathBuf>,
    pub cand_annotations: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub window: Option<usize>,
    pub manifest: Option<PathBuf>,
    pub expert: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub hashed: Option<HashedSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HashedSection {
    pub dim: Option<usize>,
    pub ngram_sizes: Option<Vec<usize>>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub seed: u64,
    #[serde(skip)]
    pub jobs: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub scoring: ScoringConfig,
    pub embedder: EmbedderChoice,
    pub store_fallback: StoreFallback,
    pub hashed: HashedEmbedderConfig,
    pub extractor: ExtractorChoice,
    pub window: usize,
    pub exclude_zero: bool,
    pub reports: Option<PathBuf>,
    pub cand_reports: Option<PathBuf>,
    pub ref_annotations: Option<PathBuf>,
    pub cand_annotations: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub expert: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    /// Command-specific arguments that affect output.
    pub extra: BTreeMap<&'static str, serde_json::Value>,
}

/// Command-specific paths that may also come from the config file.
#[derive(Debug, Default)]
pub struct CommandPaths {
    pub manifest: Option<PathBuf>,
    pub expert: Option<PathBuf>,
    pub gold: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(command: &'static str, flags: &Common, paths: CommandPaths) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let defaults = ScoringConfig::default();

        let threshold_mode = match (flags.threshold_mode, &file.threshold_mode) {
            (Some(m), _) => m,
            (None, Some(s)) => s.parse::<ThresholdMode>().map_err(CliError::Config)?,
            (None, None) => defaults.threshold_mode,
        };
        let threshold = flags.threshold.or(file.threshold);
        let scoring = ScoringConfig {
            entity_threshold: threshold.unwrap_or(defaults.entity_threshold),
            relation_threshold: flags
                .relation_threshold
                .or(file.relation_threshold)
                .or(threshold)
                .unwrap_or(defaults.relation_threshold),
            threshold_mode,
            relation_align_tau: flags.align_tau.or(file.align_tau).unwrap_or(defaults.relation_align_tau),
            relation_match: match flags.relation_match.or(file.relation_match).unwrap_or(MatchChoice::Soft) {
                MatchChoice::Soft => RelationMatchMode::Soft,
                MatchChoice::Exact => RelationMatchMode::Exact,
            },
        };
        scoring.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let seed = flags.seed.or(file.seed).unwrap_or(0);
        let hashed_file = file.hashed.unwrap_or_default();
        let hashed_defaults = HashedEmbedderConfig::default();
        let hashed = HashedEmbedderConfig {
            ngram_sizes: hashed_file.ngram_sizes.unwrap_or(hashed_defaults.ngram_sizes),
            dim: hashed_file.dim.unwrap_or(hashed_defaults.dim),
            seed: hashed_file.seed.unwrap_or(hashed_defaults.seed),
        };
        hashed.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let jobs = flags.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        let window = flags.window.or(file.window).unwrap_or(LinkerConfig::default().window);
        if window == 0 {
            return Err(CliError::Config("--window must be at least 1".into()));
        }

        let cfg = RunConfig {
            command,
            seed,
            jobs,
            out: flags.out.clone().or(file.out),
            scoring,
            embedder: flags.embedder.or(file.embedder).unwrap_or(EmbedderChoice::Hashed),
            store_fallback: flags.store_fallback.or(file.store_fallback).unwrap_or(StoreFallback::Hashed),
            hashed,
            extractor: flags.extractor.or(file.extractor).unwrap_or(ExtractorChoice::Gazetteer),
            window,
            exclude_zero: flags.exclude_zero.or(file.exclude_zero).unwrap_or(true),
            reports: flags.reports.clone().or(file.reports),
            cand_reports: flags.cand_reports.clone().or(file.cand_reports),
            ref_annotations: flags.ref_annotations.clone().or(file.ref_annotations),
            cand_annotations: flags.cand_annotations.clone().or(file.cand_annotations),
            gazetteer: flags.gazetteer.clone().or(file.gazetteer),
            vectors: flags.vectors.clone().or(file.vectors),
            manifest: paths.manifest.or(file.manifest),
            expert: paths.expert.or(file.expert),
            gold: paths.gold.or(file.gold),
            extra: BTreeMap::new(),
        };
        cfg.check_paths()?;
        Ok(cfg)
    }

    fn check_paths(&self) -> Result<(), CliError> {
        if self.embedder == EmbedderChoice::Store && self.vectors.is_none() {
            return Err(CliError::Config("--embedder store requires --vectors".into()));
        }
        if self.extractor == ExtractorChoice::External && self.ref_annotations.is_none() {
            return Err(CliError::Config("--extractor external requires --ref-annotations".into()));
        }
        let given = [
            ("--reports", &self.reports),
            ("--cand-reports", &self.cand_reports),
            ("--ref-annotations", &self.ref_annotations),
            ("--cand-annotations", &self.cand_annotations),
            ("--gazetteer", &self.gazetteer),
            ("--vectors", &self.vectors),
            ("--manifest", &self.manifest),
            ("--expert", &self.expert),
            ("--gold", &self.gold),
        ];
        for (flag, path) in given {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::Config(format!("{flag}: {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn require<'a>(&self, flag: &str, path: &'a Option<PathBuf>) -> Result<&'a Path, CliError> {
        path.as_deref().ok_or_else(|| CliError::Config(format!("{} requires {flag}", self.command)))
    }

    pub fn linker(&self) -> LinkerConfig {
        LinkerConfig { window: self.window, ..LinkerConfig::default() }
    }

    pub fn fallback(&self) -> FallbackPolicy {
        match self.store_fallback {
            StoreFallback::Hashed => FallbackPolicy::Hashed(self.hashed.clone()),
            StoreFallback::Error => FallbackPolicy::Error,
        }
    }

    /// SHA-256 of the canonical JSON form of the settings that affect output.
    /// `jobs` and `out` are excluded.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// First line of every machine-readable output.
    pub fn meta_line(&self) -> String {
        serde_json::json!({
            "meta": {
                "tool": "hare",
                "version": env!("CARGO_PKG_VERSION"),
                "command": self.command,
                "seed": self.seed,
                "config_digest": self.digest(),
                "rmse_divisor": "n",
            }
        })
        .to_string()
    }
}
