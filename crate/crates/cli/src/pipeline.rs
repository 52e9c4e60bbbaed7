use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use hare_core::corpus::{
    load_annotations, load_reports, parse_annotations, AnnotationSet, Corpus, Report, Source,
};
use hare_core::embed::{Embedder, HashedEmbedder, VectorStore};
use hare_core::extract::{extract, Gazetteer, LinkerConfig};
use hare_core::score::ScoreError;
use rayon::prelude::*;
use serde::Deserialize;

use crate::args::{EmbedderChoice, ExtractorChoice};
use crate::{CliError, RunConfig};

pub type DynEmbedder = Box<dyn Embedder + Send + Sync>;

pub fn build_embedder(cfg: &RunConfig) -> Result<DynEmbedder, CliError> {
    Ok(match cfg.embedder {
        EmbedderChoice::Hashed => Box::new(HashedEmbedder::new(cfg.hashed.clone())?),
        EmbedderChoice::Store => {
            let path = cfg.require("--vectors", &cfg.vectors)?;
            Box::new(VectorStore::load(path, cfg.fallback())?)
        }
    })
}

pub fn load_corpus(cfg: &RunConfig) -> Result<Corpus, CliError> {
    let mut corpus = Corpus::new(match &cfg.reports {
        Some(p) => load_reports(p)?,
        None => Vec::new(),
    })?;
    if let Some(p) = &cfg.cand_reports {
        corpus.extend(Corpus::new(load_reports(p)?)?)?;
    }
    Ok(corpus)
}

#[derive(Deserialize)]
struct IdOnly {
    report_id: String,
}

/// Loads annotation records, keeping only `wanted` ids when given.
fn annotations_for(
    path: &Path,
    corpus: &Corpus,
    wanted: Option<&BTreeSet<String>>,
) -> Result<BTreeMap<String, AnnotationSet>, CliError> {
    let reports = (!corpus.is_empty()).then_some(corpus);
    let Some(wanted) = wanted else {
        return Ok(load_annotations(path, Source::Predicted, reports)?);
    };
    let data = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut kept = String::new();
    for line in data.lines() {
        // Unparseable lines are kept so the loader reports them with context.
        let keep = serde_json::from_str::<IdOnly>(line).map(|r| wanted.contains(&r.report_id)).unwrap_or(true);
        if keep && !line.trim().is_empty() {
            kept.push_str(line);
        }
        kept.push('\n');
    }
    Ok(parse_annotations(&kept, Source::Predicted, reports)?)
}

pub enum Annotator {
    Gazetteer { gazetteer: Gazetteer, linker: LinkerConfig },
    External {
        refs: BTreeMap<String, AnnotationSet>,
        cands: BTreeMap<String, AnnotationSet>,
    },
}

#[derive(Debug, Clone, Copy)]
pub enum Side {
    Ref,
    Cand,
}

impl Annotator {
    pub fn build(cfg: &RunConfig, corpus: &Corpus, wanted: Option<&BTreeSet<String>>) -> Result<Self, CliError> {
        Ok(match cfg.extractor {
            ExtractorChoice::Gazetteer => Annotator::Gazetteer {
                gazetteer: match &cfg.gazetteer {
                    Some(dir) => Gazetteer::load_dir(dir)?,
                    None => Gazetteer::builtin(),
                },
                linker: cfg.linker(),
            },
            ExtractorChoice::External => {
                let ref_path = cfg.require("--ref-annotations", &cfg.ref_annotations)?;
                let refs = annotations_for(ref_path, corpus, wanted)?;
                let cands = match &cfg.cand_annotations {
                    Some(p) => annotations_for(p, corpus, wanted)?,
                    None => refs.clone(),
                };
                Annotator::External { refs, cands }
            }
        })
    }

    /// Annotations of report `id`, or `None` when they are unavailable.
    pub fn annotate<'a>(&'a self, corpus: &Corpus, id: &str, side: Side) -> Option<Cow<'a, AnnotationSet>> {
        match self {
            Annotator::Gazetteer { gazetteer, linker } => {
                corpus.get(id).map(|r| Cow::Owned(extract(r, gazetteer, linker)))
            }
            Annotator::External { refs, cands } => {
                let sets = match side {
                    Side::Ref => refs,
                    Side::Cand => cands,
                };
                if !corpus.is_empty() && corpus.get(id).is_none() {
                    return None;
                }
                sets.get(id).map(Cow::Borrowed)
            }
        }
    }
}

/// One `(ref_id, cand_id)` manifest entry.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PairEntry {
    pub ref_id: String,
    pub cand_id: String,
}

pub fn load_manifest(path: &Path) -> Result<Vec<PairEntry>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("manifest {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("manifest {}: {e}", path.display())))?;
    if headers.iter().collect::<Vec<_>>() != ["ref_id", "cand_id"] {
        return Err(CliError::Data(format!("manifest {}: header must be `ref_id,cand_id`", path.display())));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CliError::Data(format!("manifest record {}: {e}", i + 1))))
        .collect()
}

pub enum Outcome<T> {
    Scored(T),
    /// Ids that could not be resolved to a report or annotation set.
    Unresolved(Vec<String>),
}

pub struct Scorer<'a> {
    pub corpus: &'a Corpus,
    pub annotator: &'a Annotator,
    pub embedder: &'a (dyn Embedder + Send + Sync),
}

impl Scorer<'_> {
    /// Applies `f` to every manifest pair on `jobs` threads. Results keep
    /// manifest order, so output does not depend on `jobs`.
    pub fn run<T, F>(&self, pairs: &[PairEntry], jobs: usize, f: F) -> Result<Vec<Outcome<T>>, CliError>
    where
        T: Send,
        F: Fn(&AnnotationSet, &AnnotationSet, &(dyn Embedder + Send + Sync)) -> Result<T, ScoreError> + Sync,
    {
        let one = |p: &PairEntry| -> Result<Outcome<T>, ScoreError> {
            let r = self.annotator.annotate(self.corpus, &p.ref_id, Side::Ref);
            let c = self.annotator.annotate(self.corpus, &p.cand_id, Side::Cand);
            match (r, c) {
                (Some(r), Some(c)) => f(&r, &c, self.embedder).map(Outcome::Scored),
                (r, c) => {
                    let mut missing = Vec::new();
                    if r.is_none() {
                        missing.push(p.ref_id.clone());
                    }
                    if c.is_none() {
                        missing.push(p.cand_id.clone());
                    }
                    Ok(Outcome::Unresolved(missing))
                }
            }
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let results: Vec<Result<Outcome<T>, ScoreError>> = pool.install(|| pairs.par_iter().map(one).collect());
        results.into_iter().map(|r| r.map_err(CliError::from)).collect()
    }
}

/// Ids of `pairs`, for restricting annotation loading.
pub fn pair_ids(pairs: &[PairEntry]) -> BTreeSet<String> {
    pairs.iter().flat_map(|p| [p.ref_id.clone(), p.cand_id.clone()]).collect()
}

/// A report read from a plain-text file; its id defaults to the file stem.
pub fn report_from_file(path: &Path, id: Option<&str>) -> Result<Report, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let id = match id {
        Some(id) => id.to_string(),
        None => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::Config(format!("{} has no file name", path.display())))?,
    };
    if text.trim().is_empty() {
        return Err(CliError::Data(format!("{} is empty", path.display())));
    }
    Ok(Report { id, text })
}
