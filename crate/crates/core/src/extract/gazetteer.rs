use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::text::{tokenize, CharIndex};
use crate::corpus::{EntityMention, Label, Report};

const BUILTIN: [(Label, &str); 5] = [
    (Label::AnatomicalSite, include_str!("../../data/gazetteer/anatomical_site.txt")),
    (Label::IhcMarker, include_str!("../../data/gazetteer/ihc_marker.txt")),
    (Label::PathologicalDiagnosis, include_str!("../../data/gazetteer/pathological_diagnosis.txt")),
    (Label::DiagnosisDescriptor, include_str!("../../data/gazetteer/diagnosis_descriptor.txt")),
    (Label::IhcModifier, include_str!("../../data/gazetteer/ihc_modifier.txt")),
];

#[derive(Debug, thiserror::Error)]
pub enum GazetteerError {
    #[error("cannot read gazetteer at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("gazetteer entry `{name}` is not a known label")]
    UnknownLabel { name: String },
    #[error("label `{0}` listed twice in priority order")]
    DuplicatePriority(Label),
}

#[derive(Debug, Default, Clone)]
struct Node {
    children: HashMap<String, usize>,
    label: Option<Label>,
}

/// Per-label lexicons compiled into a token trie.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    lexicons: BTreeMap<Label, BTreeSet<String>>,
    priority: Vec<Label>,
    nodes: Vec<Node>,
}

/// Lowercases and collapses whitespace.
fn normalize_entry(entry: &str) -> String {
    entry.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn parse_lexicon(data: &str) -> impl Iterator<Item = String> + '_ {
    data.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize_entry)
}

impl Gazetteer {
    /// Builds a gazetteer. Labels missing from `priority` rank after the
    /// listed ones, in declaration order.
    pub fn new<I, S>(lexicons: I, priority: &[Label]) -> Result<Self, GazetteerError>
    where
        I: IntoIterator<Item = (Label, S)>,
        S: IntoIterator,
        S::Item: AsRef<str>,
    {
        let mut order = Vec::with_capacity(Label::ALL.len());
        for &l in priority {
            if order.contains(&l) {
                return Err(GazetteerError::DuplicatePriority(l));
            }
            order.push(l);
        }
        for l in Label::ALL {
            if !order.contains(&l) {
                order.push(l);
            }
        }

        let mut sets: BTreeMap<Label, BTreeSet<String>> = BTreeMap::new();
        for (label, entries) in lexicons {
            let set = sets.entry(label).or_default();
            set.extend(
                entries
                    .into_iter()
                    .map(|e| normalize_entry(e.as_ref()))
                    .filter(|e| !e.is_empty()),
            );
        }

        let mut gaz = Gazetteer { lexicons: sets, priority: order, nodes: vec![Node::default()] };
        gaz.compile();
        Ok(gaz)
    }

    /// The lexicons shipped with the crate.
    pub fn builtin() -> Self {
        let lexicons = BUILTIN.iter().map(|&(l, data)| (l, parse_lexicon(data).collect::<Vec<_>>()));
        Gazetteer::new(lexicons, &[]).expect("builtin gazetteer is valid")
    }

    /// Loads lexicons from a directory.
    ///
    /// Each label is read from `<label>.txt` and/or from every file inside a
    /// `<label>/` subdirectory. An optional `priority.txt` lists label names
    /// in tie-break order. Lines starting with `#` are comments.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, GazetteerError> {
        let dir = dir.as_ref();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io(dir))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io(dir))?;
        paths.sort();

        let mut lexicons: Vec<(Label, Vec<String>)> = Vec::new();
        let mut priority = Vec::new();
        for path in paths {
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            if path.is_file() && name == "priority" {
                let data = fs::read_to_string(&path).map_err(io(&path))?;
                for entry in parse_lexicon(&data) {
                    priority.push(label_named(&entry)?);
                }
                continue;
            }
            if name.starts_with('.') {
                continue;
            }
            let label = label_named(&name)?;
            let mut entries = Vec::new();
            if path.is_dir() {
                let mut files: Vec<PathBuf> = fs::read_dir(&path)
                    .map_err(io(&path))?
                    .map(|e| e.map(|e| e.path()))
                    .collect::<Result<_, _>>()
                    .map_err(io(&path))?;
                files.sort();
                for f in files.into_iter().filter(|f| f.is_file()) {
                    let data = fs::read_to_string(&f).map_err(io(&f))?;
                    entries.extend(parse_lexicon(&data));
                }
            } else {
                let data = fs::read_to_string(&path).map_err(io(&path))?;
                entries.extend(parse_lexicon(&data));
            }
            lexicons.push((label, entries));
        }
        Gazetteer::new(lexicons, &priority)
    }

    pub fn lexicon(&self, label: Label) -> Option<&BTreeSet<String>> {
        self.lexicons.get(&label)
    }

    pub fn priority(&self) -> &[Label] {
        &self.priority
    }

    pub fn len(&self) -> usize {
        self.lexicons.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn rank(&self, label: Label) -> usize {
        self.priority.iter().position(|&l| l == label).unwrap_or(usize::MAX)
    }

    fn compile(&mut self) {
        let lexicons = std::mem::take(&mut self.lexicons);
        for (&label, entries) in &lexicons {
            for entry in entries {
                let mut node = 0;
                for (s, e) in tokenize(entry) {
                    let tok: String = entry.chars().skip(s).take(e - s).collect();
                    node = match self.nodes[node].children.get(&tok) {
                        Some(&child) => child,
                        None => {
                            self.nodes.push(Node::default());
                            let child = self.nodes.len() - 1;
                            self.nodes[node].children.insert(tok, child);
                            child
                        }
                    };
                }
                if node == 0 {
                    continue;
                }
                let better = self.nodes[node].label.is_none_or(|cur| self.rank(label) < self.rank(cur));
                if better {
                    self.nodes[node].label = Some(label);
                }
            }
        }
        self.lexicons = lexicons;
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> GazetteerError + '_ {
    move |source| GazetteerError::Io { path: path.to_path_buf(), source }
}

fn label_named(name: &str) -> Result<Label, GazetteerError> {
    name.parse().map_err(|_| GazetteerError::UnknownLabel { name: name.to_string() })
}

/// Case-insensitive, token-aligned, greedy left-to-right longest match.
/// Mentions never overlap, carry confidence 1.0, and come out sorted by start.
pub fn tag_entities(report: &Report, gaz: &Gazetteer) -> Vec<EntityMention> {
    let index = CharIndex::new(&report.text);
    let spans = tokenize(&report.text);
    let lowered: Vec<String> = spans
        .iter()
        .map(|&(s, e)| index.slice(s, e).unwrap_or_default().to_lowercase())
        .collect();

    let mut mentions = Vec::new();
    let mut i = 0;
    while i < spans.len() {
        let mut node = 0;
        let mut best: Option<(usize, Label)> = None;
        for (j, tok) in lowered.iter().enumerate().skip(i) {
            match gaz.nodes[node].children.get(tok) {
                Some(&child) => node = child,
                None => break,
            }
            if let Some(label) = gaz.nodes[node].label {
                best = Some((j, label));
            }
        }
        match best {
            Some((j, label)) => {
                let (start, end) = (spans[i].0, spans[j].1);
                mentions.push(EntityMention {
                    start,
                    end,
                    label,
                    surface: index.slice(start, end).unwrap_or_default().to_string(),
                    confidence: 1.0,
                });
                i = j + 1;
            }
            None => i += 1,
        }
    }
    mentions
}
