use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::Path;

use hare_core::corpus::text::{chunk_sentence, split_sentences, tokenize, CharIndex};
use hare_core::corpus::{
    build_relation_pairs, load_annotations, load_expert_scores, Corpus, ExpertScore, PairMode, Source,
};
use hare_core::score::{ablate, hare_score, HareBreakdown, Variant};
use hare_core::stats::{compare_metrics, normalize, ComparisonReport, MetricSeries};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::{AblateArgs, BatchArgs, Command, CompareArgs, ExtractorChoice, ModeChoice, PrepArgs, ScoreArgs};
use crate::config::CommandPaths;
use crate::pipeline::{
    build_embedder, load_corpus, load_manifest, pair_ids, report_from_file, Annotator, Outcome, PairEntry, Scorer,
};
use crate::{CliError, RunConfig};

pub fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Score(a) => score(a, stdout),
        Command::Batch(a) => batch(a, stdout, stderr),
        Command::Compare(a) => compare(a, stdout, stderr),
        Command::Ablate(a) => ablate_cmd(a, stdout, stderr),
        Command::Prep(a) => prep(a, stdout),
    }
}

/// `--out` when given, otherwise `stdout`.
fn sink<'a>(cfg: &RunConfig, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
    match &cfg.out {
        Some(p) => Ok(Box::new(BufWriter::new(create(p)?))),
        None => Ok(Box::new(stdout)),
    }
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))
}

#[derive(Serialize)]
struct PairRecord<'a> {
    report_id: &'a str,
    ref_id: &'a str,
    #[serde(flatten)]
    breakdown: &'a HareBreakdown,
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *w, value).map_err(|e| CliError::Internal(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Registers a positional `score` argument. A path to an existing file is read
/// as a plain-text report; anything else is taken as a report id.
fn positional_report(corpus: &mut Corpus, arg: &str, id: Option<&str>, external: bool) -> Result<String, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let report = report_from_file(path, id)?;
        match corpus.get(&report.id) {
            Some(known) if known.text == report.text => {}
            Some(_) => {
                return Err(CliError::Data(format!("report id `{}` is already used by different text", report.id)))
            }
            None => corpus.extend(Corpus::new(vec![report.clone()])?)?,
        }
        return Ok(report.id);
    }
    if corpus.get(arg).is_some() || (external && corpus.is_empty()) {
        return Ok(arg.to_string());
    }
    Err(CliError::Data(format!("`{arg}` is neither a readable file nor a known report id")))
}

fn score(a: ScoreArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("score", &a.common, CommandPaths::default())?;
    let mut corpus = load_corpus(&cfg)?;
    let external = cfg.extractor == ExtractorChoice::External;
    let pair = PairEntry {
        ref_id: positional_report(&mut corpus, &a.reference, a.ref_id.as_deref(), external)?,
        cand_id: positional_report(&mut corpus, &a.candidate, a.cand_id.as_deref(), external)?,
    };
    let pairs = [pair];
    let annotator = Annotator::build(&cfg, &corpus, Some(&pair_ids(&pairs)))?;
    let embedder = build_embedder(&cfg)?;
    let scorer = Scorer { corpus: &corpus, annotator: &annotator, embedder: embedder.as_ref() };
    let outcome = scorer.run(&pairs, 1, |r, c, e| hare_score(r, c, e, &cfg.scoring))?;
    let breakdown = match outcome.into_iter().next() {
        Some(Outcome::Scored(b)) => b,
        Some(Outcome::Unresolved(ids)) => {
            return Err(CliError::Data(format!("no annotations for {}", ids.join(", "))))
        }
        None => return Err(CliError::Internal("no result for pair".into())),
    };
    let mut w = sink(&cfg, stdout)?;
    writeln!(w, "{}", cfg.meta_line())?;
    let p = &pairs[0];
    write_json(&mut *w, &PairRecord { report_id: &p.cand_id, ref_id: &p.ref_id, breakdown: &breakdown })?;
    w.flush()?;
    Ok(())
}

/// Everything a manifest-driven command needs.
struct Loaded {
    corpus: Corpus,
    annotator: Annotator,
    pairs: Vec<PairEntry>,
}

fn load_manifest_run(cfg: &RunConfig) -> Result<Loaded, CliError> {
    let pairs = load_manifest(cfg.require("--manifest", &cfg.manifest)?)?;
    let corpus = load_corpus(cfg)?;
    let annotator = Annotator::build(cfg, &corpus, Some(&pair_ids(&pairs)))?;
    Ok(Loaded { corpus, annotator, pairs })
}

fn report_unresolved(stderr: &mut dyn Write, unresolved: &[(&PairEntry, Vec<String>)]) -> Result<(), CliError> {
    if unresolved.is_empty() {
        return Ok(());
    }
    for (p, ids) in unresolved {
        writeln!(stderr, "skipped {} -> {}: unresolved {}", p.ref_id, p.cand_id, ids.join(", "))?;
    }
    Err(CliError::Data(format!("{} manifest pair(s) had unresolved report ids", unresolved.len())))
}

fn batch(a: BatchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("batch", &a.common, CommandPaths { manifest: a.manifest, ..Default::default() })?;
    let run = load_manifest_run(&cfg)?;
    let embedder = build_embedder(&cfg)?;
    let scorer = Scorer { corpus: &run.corpus, annotator: &run.annotator, embedder: embedder.as_ref() };
    let outcomes = scorer.run(&run.pairs, cfg.jobs, |r, c, e| hare_score(r, c, e, &cfg.scoring))?;

    let mut w = sink(&cfg, stdout)?;
    writeln!(w, "{}", cfg.meta_line())?;
    let mut unresolved = Vec::new();
    let (mut total, mut scored) = (0.0, 0usize);
    for (p, o) in run.pairs.iter().zip(outcomes) {
        match o {
            Outcome::Scored(b) => {
                write_json(&mut *w, &PairRecord { report_id: &p.cand_id, ref_id: &p.ref_id, breakdown: &b })?;
                total += b.hare;
                scored += 1;
            }
            Outcome::Unresolved(ids) => unresolved.push((p, ids)),
        }
    }
    w.flush()?;
    drop(w);

    let mean = if scored > 0 { format!("{:.4}", total / scored as f64) } else { "n/a".into() };
    writeln!(stderr, "scored {scored} of {} pairs, mean hare {mean}", run.pairs.len())?;
    report_unresolved(stderr, &unresolved)
}

/// Parses `name=max` normalizer overrides.
fn parse_normalizers(specs: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    specs
        .iter()
        .map(|s| {
            let (name, max) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--normalize `{s}`: expected name=max")))?;
            let max: f64 = max
                .parse()
                .ok()
                .filter(|m: &f64| *m > 0.0 && m.is_finite())
                .ok_or_else(|| CliError::Config(format!("--normalize `{s}`: max must be a positive number")))?;
            Ok((name.to_string(), max))
        })
        .collect()
}

/// Default normalizer of a breakdown file's `hare` values.
const HARE_MAX: f64 = 2.0;

fn read_metric_file(path: &Path) -> Result<Vec<(MetricSeries, f64)>, CliError> {
    let is_jsonl = path.extension().is_some_and(|e| e == "jsonl");
    if is_jsonl {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let mut series = MetricSeries::new(name);
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |what: &str| CliError::Data(format!("{} line {}: {what}", path.display(), i + 1));
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
            if v.get("meta").is_some() {
                continue;
            }
            let id = v.get("report_id").and_then(|x| x.as_str()).ok_or_else(|| bad("missing field `report_id`"))?;
            let hare = v.get("hare").and_then(|x| x.as_f64()).ok_or_else(|| bad("missing field `hare`"))?;
            if series.values.insert(id.to_string(), hare).is_some() {
                return Err(bad(&format!("duplicate report id `{id}`")));
            }
        }
        return Ok(vec![(series, HARE_MAX)]);
    }

    let bad = |what: String| CliError::Data(format!("{}: {what}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.get(0) != Some("report_id") || headers.len() < 2 {
        return Err(bad("header must be `report_id,<metric>,...`".into()));
    }
    let mut series: Vec<MetricSeries> = headers.iter().skip(1).map(MetricSeries::new).collect();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let id = &rec[0];
        for (col, s) in series.iter_mut().enumerate() {
            let raw = rec.get(col + 1).unwrap_or("");
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| bad(format!("record {}: `{raw}` is not a number", i + 1)))?;
            if s.values.insert(id.to_string(), v).is_some() {
                return Err(bad(format!("record {}: duplicate report id `{id}`", i + 1)));
            }
        }
    }
    Ok(series.into_iter().map(|s| (s, 1.0)).collect())
}

/// Expert series scaled to [0, 1], without zero-rated reports when
/// `exclude_zero` is set. Also returns the excluded ids.
fn expert_series(scores: &[ExpertScore], exclude_zero: bool) -> (MetricSeries, BTreeSet<String>) {
    let mut series = MetricSeries::new("expert");
    let mut excluded = BTreeSet::new();
    for s in scores {
        if exclude_zero && s.score == 0 {
            excluded.insert(s.report_id.clone());
        } else {
            series.values.insert(s.report_id.clone(), f64::from(s.score) / f64::from(ExpertScore::MAX));
        }
    }
    (series, excluded)
}

fn normalized(mut series: MetricSeries, max: f64, excluded: &BTreeSet<String>) -> Result<MetricSeries, CliError> {
    series.values.retain(|id, _| !excluded.contains(id));
    let ids: Vec<String> = series.values.keys().cloned().collect();
    let raw: Vec<f64> = series.values.values().copied().collect();
    let scaled = normalize(&raw, max).map_err(|e| CliError::Data(format!("metric `{}`: {e}", series.name)))?;
    series.values = ids.into_iter().zip(scaled).collect();
    Ok(series)
}

fn write_comparison(
    cfg: &RunConfig,
    report: &ComparisonReport,
    excluded: usize,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if cfg.exclude_zero {
        writeln!(stderr, "excluded {excluded} report(s) with expert score 0")?;
    }
    stdout.write_all(report.to_table().as_bytes())?;
    if let Some(path) = &cfg.out {
        let mut w = BufWriter::new(create(path)?);
        writeln!(w, "{}", cfg.meta_line())?;
        for row in &report.rows {
            write_json(&mut w, row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn compare(a: CompareArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("compare", &a.common, CommandPaths { expert: a.expert, ..Default::default() })?;
    if a.metrics.is_empty() {
        return Err(CliError::Config("compare needs at least one metric file".into()));
    }
    for p in &a.metrics {
        if !p.is_file() {
            return Err(CliError::Config(format!("metric file {} does not exist", p.display())));
        }
    }
    let overrides = parse_normalizers(&a.normalize)?;
    cfg.extra.insert("metrics", serde_json::json!(a.metrics));
    cfg.extra.insert("normalize", serde_json::json!(overrides));

    let scores = load_expert_scores(cfg.require("--expert", &cfg.expert)?)?;
    let (expert, excluded) = expert_series(&scores, cfg.exclude_zero);

    let mut metrics = Vec::new();
    let mut seen = BTreeSet::new();
    for path in &a.metrics {
        for (series, default_max) in read_metric_file(path)? {
            if !seen.insert(series.name.clone()) {
                return Err(CliError::Data(format!("metric `{}` appears more than once", series.name)));
            }
            let max = overrides.get(&series.name).copied().unwrap_or(default_max);
            metrics.push(normalized(series, max, &excluded)?);
        }
    }
    if let Some(name) = overrides.keys().find(|n| !seen.contains(*n)) {
        return Err(CliError::Config(format!("--normalize names unknown metric `{name}`")));
    }
    let report = compare_metrics(&metrics, &expert)?;
    write_comparison(&cfg, &report, excluded.len(), stdout, stderr)
}

fn ablate_cmd(a: AblateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let paths = CommandPaths { manifest: a.manifest, expert: a.expert, ..Default::default() };
    let cfg = RunConfig::resolve("ablate", &a.common, paths)?;
    let scores = load_expert_scores(cfg.require("--expert", &cfg.expert)?)?;
    let run = load_manifest_run(&cfg)?;
    let embedder = build_embedder(&cfg)?;
    let scorer = Scorer { corpus: &run.corpus, annotator: &run.annotator, embedder: embedder.as_ref() };
    let outcomes = scorer.run(&run.pairs, cfg.jobs, |r, c, e| ablate(r, c, e, &cfg.scoring))?;

    let mut series: Vec<MetricSeries> = Variant::ALL.iter().map(|v| MetricSeries::new(v.name(&cfg.scoring))).collect();
    let mut unresolved = Vec::new();
    for (p, o) in run.pairs.iter().zip(outcomes) {
        match o {
            Outcome::Scored(variants) => {
                for (s, (_, b)) in series.iter_mut().zip(variants) {
                    if s.values.insert(p.cand_id.clone(), b.hare).is_some() {
                        return Err(CliError::Data(format!("candidate `{}` appears more than once", p.cand_id)));
                    }
                }
            }
            Outcome::Unresolved(ids) => unresolved.push((p, ids)),
        }
    }
    report_unresolved(stderr, &unresolved)?;

    let (mut expert, excluded) = expert_series(&scores, cfg.exclude_zero);
    let wanted: BTreeSet<String> = series[0].values.keys().cloned().collect();
    let known: BTreeSet<String> = scores.iter().map(|s| s.report_id.clone()).collect();
    if let Some(id) = wanted.iter().find(|id| !known.contains(*id)) {
        return Err(CliError::Data(format!("no expert score for candidate `{id}`")));
    }
    expert.values.retain(|id, _| wanted.contains(id));
    let metrics = series
        .into_iter()
        .map(|s| normalized(s, HARE_MAX, &excluded))
        .collect::<Result<Vec<_>, _>>()?;
    let removed = excluded.iter().filter(|id| wanted.contains(*id)).count();
    let report = compare_metrics(&metrics, &expert)?;
    write_comparison(&cfg, &report, removed, stdout, stderr)
}

/// Per-report sampling seed, independent of corpus order.
fn report_seed(seed: u64, report_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(report_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Serialize)]
struct ChunkRecord<'a> {
    report_id: &'a str,
    sentence: usize,
    chunk: usize,
    start: usize,
    end: usize,
    tokens: usize,
    text: &'a str,
}

fn prep(a: PrepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("prep", &a.common, CommandPaths { gold: a.gold, ..Default::default() })?;
    let max_tokens = NonZeroUsize::new(a.max_tokens)
        .ok_or_else(|| CliError::Config("--max-tokens must be at least 1".into()))?;
    let mode = match a.mode {
        ModeChoice::Train => PairMode::Train,
        ModeChoice::Test => PairMode::Test,
    };
    cfg.extra.insert("mode", serde_json::json!(a.mode));
    cfg.extra.insert("max_tokens", serde_json::json!(a.max_tokens));
    let out_dir = cfg.require("--out", &cfg.out)?.to_path_buf();
    cfg.require("--reports", &cfg.reports)?;

    let corpus = load_corpus(&cfg)?;
    let gold = load_annotations(cfg.require("--gold", &cfg.gold)?, Source::Gold, Some(&corpus))?;
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut pairs = BufWriter::new(create(&out_dir.join("pairs.jsonl"))?);
    writeln!(pairs, "{}", cfg.meta_line())?;
    let (mut positives, mut negatives, mut shortfall) = (0, 0, 0);
    for (id, set) in &gold {
        let report = corpus.get(id).ok_or_else(|| CliError::Internal(format!("report `{id}` vanished")))?;
        let built = build_relation_pairs(set, report, mode, report_seed(cfg.seed, id));
        for s in &built.samples {
            write_json(&mut pairs, s)?;
        }
        positives += built.positives;
        negatives += built.negatives;
        shortfall += built.shortfall;
    }
    pairs.flush()?;

    let mut chunks = BufWriter::new(create(&out_dir.join("chunks.jsonl"))?);
    writeln!(chunks, "{}", cfg.meta_line())?;
    let (mut n_chunks, mut longest) = (0usize, 0usize);
    for report in corpus.reports() {
        let index = CharIndex::new(&report.text);
        for (si, &(s_start, s_end)) in split_sentences(&report.text).iter().enumerate() {
            let sentence = index.slice(s_start, s_end).unwrap_or_default();
            let tokens: Vec<_> = tokenize(sentence).into_iter().map(|(a, b)| (a + s_start, b + s_start)).collect();
            for (ci, chunk) in chunk_sentence(&tokens, max_tokens).into_iter().enumerate() {
                let (start, end) = (chunk[0].0, chunk[chunk.len() - 1].1);
                write_json(&mut chunks, &ChunkRecord {
                    report_id: &report.id,
                    sentence: si,
                    chunk: ci,
                    start,
                    end,
                    tokens: chunk.len(),
                    text: index.slice(start, end).unwrap_or_default(),
                })?;
                n_chunks += 1;
                longest = longest.max(chunk.len());
            }
        }
    }
    chunks.flush()?;

    writeln!(
        stdout,
        "positives={positives} negatives={negatives} shortfall={shortfall} chunks={n_chunks} max_chunk_tokens={longest}"
    )?;
    Ok(())
}
