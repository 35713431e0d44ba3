//! Data model and parsers for collections, runs, qrels, label files and
//! stereotype tags.
//!
//! Every parser is a pure function of its input text. Line numbers in errors
//! are 1-based.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while reading corpus files.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate document `{doc_id}`")]
    DuplicateDoc { line: usize, doc_id: String },
    #[error("line {line}: duplicate rank {rank} for query `{query_id}`")]
    DuplicateRank { line: usize, query_id: String, rank: u32 },
    #[error("line {line}: negative relevance grade {grade}")]
    NegativeGrade { line: usize, grade: i64 },
    #[error("line {line}: duplicate judgment for ({query_id}, {doc_id})")]
    DuplicatePair {
        line: usize,
        query_id: String,
        doc_id: String,
    },
    #[error("line {line}: unknown label `{token}`")]
    UnknownLabel { line: usize, token: String },
    #[error("line {line}: empty document id")]
    EmptyId { line: usize },
    #[error("line {line}: document `{doc_id}` has neither text nor title")]
    EmptyDocument { line: usize, doc_id: String },
    #[error("label `Unparseable` is not allowed in a `{provenance}` label set")]
    UnparseableNotAllowed { provenance: String },
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
}

/// A retrievable text unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: Option<String>,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: None,
            text: text.into(),
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    /// Title and body joined by a single space; the body alone when untitled.
    pub fn full_text(&self) -> String {
        match self.title.as_deref() {
            Some(title) if !title.is_empty() => {
                if self.text.is_empty() {
                    title.to_string()
                } else {
                    format!("{title} {}", self.text)
                }
            }
            _ => self.text.clone(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.text.trim().is_empty() && self.title.as_deref().is_none_or(|t| t.trim().is_empty())
    }
}

/// Three-way gender bias class plus a sentinel for completions that could
/// not be read as any class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenderLabel {
    Male,
    Female,
    Neutral,
    Unparseable,
}

impl GenderLabel {
    pub const CLASSES: [GenderLabel; 3] = [GenderLabel::Male, GenderLabel::Female, GenderLabel::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            GenderLabel::Male => "Male",
            GenderLabel::Female => "Female",
            GenderLabel::Neutral => "Neutral",
            GenderLabel::Unparseable => "Unparseable",
        }
    }

    /// Male <-> Female; Neutral and Unparseable map to themselves.
    pub fn swapped(self) -> Self {
        match self {
            GenderLabel::Male => GenderLabel::Female,
            GenderLabel::Female => GenderLabel::Male,
            other => other,
        }
    }

    pub fn is_class(self) -> bool {
        self != GenderLabel::Unparseable
    }

    /// Case-insensitive, whitespace-trimmed match against the three classes.
    pub fn parse_class(token: &str) -> Option<Self> {
        let token = token.trim();
        if token.eq_ignore_ascii_case("male") {
            Some(GenderLabel::Male)
        } else if token.eq_ignore_ascii_case("female") {
            Some(GenderLabel::Female)
        } else if token.eq_ignore_ascii_case("neutral") {
            Some(GenderLabel::Neutral)
        } else {
            None
        }
    }
}

impl fmt::Display for GenderLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenderLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("unparseable") {
            return Ok(GenderLabel::Unparseable);
        }
        GenderLabel::parse_class(s).ok_or_else(|| format!("unknown label `{}`", s.trim()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
}

/// One query's ranking, entries strictly ascending by rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<RankEntry>,
}

impl RankedList {
    /// Sorts entries by rank. Fails on a repeated rank or document.
    pub fn new(query_id: impl Into<String>, mut entries: Vec<RankEntry>) -> Result<Self, CorpusError> {
        let query_id = query_id.into();
        entries.sort_by_key(|e| e.rank);
        let mut seen = HashSet::new();
        for (idx, entry) in entries.iter().enumerate() {
            if entry.rank == 0 {
                return Err(CorpusError::Malformed {
                    line: 0,
                    reason: format!("rank must be >= 1 (document `{}`)", entry.doc_id),
                });
            }
            if idx > 0 && entries[idx - 1].rank == entry.rank {
                return Err(CorpusError::DuplicateRank {
                    line: 0,
                    query_id,
                    rank: entry.rank,
                });
            }
            if !seen.insert(entry.doc_id.as_str()) {
                return Err(CorpusError::DuplicateDoc {
                    line: 0,
                    doc_id: entry.doc_id.clone(),
                });
            }
        }
        Ok(Self { query_id, entries })
    }

    /// Convenience constructor assigning ranks 1..n in the given order.
    pub fn from_doc_ids<I, S>(query_id: impl Into<String>, doc_ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entries: Vec<RankEntry> = doc_ids
            .into_iter()
            .enumerate()
            .map(|(i, id)| RankEntry {
                doc_id: id.into(),
                rank: i as u32 + 1,
                score: 0.0,
            })
            .collect();
        Self {
            query_id: query_id.into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }
}

/// First `min(k, len)` entries; order preserved.
pub fn truncate(list: &RankedList, k: usize) -> RankedList {
    RankedList {
        query_id: list.query_id.clone(),
        entries: list.entries.iter().take(k).cloned().collect(),
    }
}

/// Per-query rankings from one system.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Run {
    pub tag: String,
    pub lists: BTreeMap<String, RankedList>,
}

impl Run {
    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    pub fn get(&self, query_id: &str) -> Option<&RankedList> {
        self.lists.get(query_id)
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Parses a TREC run: `qid Q0 docid rank score tag` per line.
///
/// The rank column orders each list; scores are carried but never used to
/// reorder. The run tag is taken from the first line.
pub fn parse_run(text: &str) -> Result<Run, CorpusError> {
    let mut tag: Option<String> = None;
    let mut grouped: BTreeMap<String, Vec<(usize, RankEntry)>> = BTreeMap::new();
    let mut seen_pairs: HashSet<(String, String)> = HashSet::new();

    for (line, raw) in data_lines(text) {
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let (qid, docid) = (fields[0], fields[2]);
        let rank: u32 = fields[3].parse().map_err(|_| CorpusError::Malformed {
            line,
            reason: format!("rank `{}` is not a non-negative integer", fields[3]),
        })?;
        if rank == 0 {
            return Err(CorpusError::Malformed {
                line,
                reason: "rank must be >= 1".into(),
            });
        }
        let score: f64 = fields[4].parse().map_err(|_| CorpusError::Malformed {
            line,
            reason: format!("score `{}` is not numeric", fields[4]),
        })?;
        if !score.is_finite() {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("score `{}` is not finite", fields[4]),
            });
        }
        if !seen_pairs.insert((qid.to_string(), docid.to_string())) {
            return Err(CorpusError::DuplicateDoc {
                line,
                doc_id: docid.to_string(),
            });
        }
        tag.get_or_insert_with(|| fields[5].to_string());
        grouped.entry(qid.to_string()).or_default().push((
            line,
            RankEntry {
                doc_id: docid.to_string(),
                rank,
                score,
            },
        ));
    }

    let mut lists = BTreeMap::new();
    for (qid, mut entries) in grouped {
        entries.sort_by_key(|(_, e)| e.rank);
        for pair in entries.windows(2) {
            if pair[0].1.rank == pair[1].1.rank {
                return Err(CorpusError::DuplicateRank {
                    line: pair[0].0.max(pair[1].0),
                    query_id: qid,
                    rank: pair[1].1.rank,
                });
            }
        }
        let list = RankedList {
            query_id: qid.clone(),
            entries: entries.into_iter().map(|(_, e)| e).collect(),
        };
        lists.insert(qid, list);
    }
    Ok(Run {
        tag: tag.unwrap_or_default(),
        lists,
    })
}

/// Writes a run in TREC format, queries in id order and entries by rank.
pub fn serialize_run(run: &Run) -> String {
    let tag = if run.tag.is_empty() { "run" } else { run.tag.as_str() };
    let mut out = String::new();
    for list in run.lists.values() {
        for e in &list.entries {
            out.push_str(&format!(
                "{} Q0 {} {} {} {}\n",
                list.query_id, e.doc_id, e.rank, e.score, tag
            ));
        }
    }
    out
}

/// Relevance judgments keyed by (query, document).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Qrels {
    pub judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.judgments.contains_key(query_id)
    }

    /// Number of (query, document) judgments.
    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade);
    }
}

/// Parses qrels lines `qid 0 docid grade`.
pub fn parse_qrels(text: &str) -> Result<Qrels, CorpusError> {
    let mut qrels = Qrels::default();
    for (line, raw) in data_lines(text) {
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let grade: i64 = fields[3].parse().map_err(|_| CorpusError::Malformed {
            line,
            reason: format!("grade `{}` is not an integer", fields[3]),
        })?;
        if grade < 0 {
            return Err(CorpusError::NegativeGrade { line, grade });
        }
        let grade = u32::try_from(grade).map_err(|_| CorpusError::Malformed {
            line,
            reason: format!("grade {grade} out of range"),
        })?;
        let (qid, docid) = (fields[0], fields[2]);
        if qrels.grade(qid, docid).is_some() {
            return Err(CorpusError::DuplicatePair {
                line,
                query_id: qid.to_string(),
                doc_id: docid.to_string(),
            });
        }
        qrels.insert(qid, docid, grade);
    }
    Ok(qrels)
}

/// Provenance tags for human and word-list labels, which may never carry
/// [`GenderLabel::Unparseable`].
pub const PROVENANCE_HUMAN: &str = "human";
pub const PROVENANCE_LEXICAL: &str = "lexical";

/// `doc_id -> label` with a provenance tag (`human`, `lexical`,
/// `llm:{model}:{mode}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    provenance: String,
    labels: BTreeMap<String, GenderLabel>,
}

impl LabelSet {
    pub fn new(provenance: impl Into<String>) -> Self {
        Self {
            provenance: provenance.into(),
            labels: BTreeMap::new(),
        }
    }

    pub fn from_pairs<I, S>(provenance: impl Into<String>, pairs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (S, GenderLabel)>,
        S: Into<String>,
    {
        let mut set = Self::new(provenance);
        for (i, (doc, label)) in pairs.into_iter().enumerate() {
            let doc = doc.into();
            if set.labels.contains_key(&doc) {
                return Err(CorpusError::DuplicateDoc {
                    line: i + 1,
                    doc_id: doc,
                });
            }
            set.insert(doc, label)?;
        }
        Ok(set)
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Whether this provenance admits [`GenderLabel::Unparseable`].
    pub fn allows_unparseable(&self) -> bool {
        self.provenance.starts_with("llm:")
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, label: GenderLabel) -> Result<(), CorpusError> {
        if label == GenderLabel::Unparseable && !self.allows_unparseable() {
            return Err(CorpusError::UnparseableNotAllowed {
                provenance: self.provenance.clone(),
            });
        }
        self.labels.insert(doc_id.into(), label);
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<GenderLabel> {
        self.labels.get(doc_id).copied()
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.labels.contains_key(doc_id)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, GenderLabel)> {
        self.labels.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    /// Count per label, in Male, Female, Neutral, Unparseable order.
    pub fn counts(&self) -> BTreeMap<GenderLabel, usize> {
        let mut counts = BTreeMap::new();
        for label in self.labels.values() {
            *counts.entry(*label).or_insert(0) += 1;
        }
        counts
    }

    /// Male <-> Female relabeling of every entry.
    pub fn gender_swapped(&self) -> Self {
        Self {
            provenance: self.provenance.clone(),
            labels: self.labels.iter().map(|(k, v)| (k.clone(), v.swapped())).collect(),
        }
    }
}

/// Reads a label TSV (`doc_id<TAB>label`). `#` lines are comments.
///
/// The token `unparseable` is accepted only for `llm:*` provenance.
pub fn load_labels(text: &str, provenance: &str) -> Result<LabelSet, CorpusError> {
    let mut set = LabelSet::new(provenance);
    for (line, raw) in data_lines(text) {
        if raw.trim_start().starts_with('#') {
            continue;
        }
        let mut cols = raw.split('\t');
        let doc_id = cols.next().unwrap_or("").trim();
        let token = cols.next().ok_or_else(|| CorpusError::Malformed {
            line,
            reason: "expected `doc_id<TAB>label`".into(),
        })?;
        if doc_id.is_empty() {
            return Err(CorpusError::EmptyId { line });
        }
        let label = match GenderLabel::parse_class(token) {
            Some(label) => label,
            None if set.allows_unparseable() && token.trim().eq_ignore_ascii_case("unparseable") => {
                GenderLabel::Unparseable
            }
            None => {
                return Err(CorpusError::UnknownLabel {
                    line,
                    token: token.trim().to_string(),
                })
            }
        };
        if set.contains(doc_id) {
            return Err(CorpusError::DuplicateDoc {
                line,
                doc_id: doc_id.to_string(),
            });
        }
        set.insert(doc_id, label)?;
    }
    Ok(set)
}

/// Provenance declared by a `# provenance: <tag>` header line, if any.
pub fn declared_provenance(text: &str) -> Option<String> {
    text.lines()
        .take_while(|l| l.trim_start().starts_with('#') || l.trim().is_empty())
        .find_map(|l| {
            l.trim_start()
                .trim_start_matches('#')
                .trim()
                .strip_prefix("provenance:")
                .map(|p| p.trim().to_string())
        })
}

/// Label TSV with a provenance header, rows in doc-id order.
pub fn serialize_labels(labels: &LabelSet) -> String {
    let mut out = format!("# provenance: {}\n", labels.provenance());
    for (doc, label) in labels.iter() {
        out.push_str(doc);
        out.push('\t');
        out.push_str(&label.as_str().to_ascii_lowercase());
        out.push('\n');
    }
    out
}

/// Reads a collection TSV `doc_id<TAB>text[<TAB>title]`.
pub fn load_collection(text: &str) -> Result<BTreeMap<String, Document>, CorpusError> {
    let mut docs = BTreeMap::new();
    for (line, raw) in data_lines(text) {
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("expected 2 or 3 tab-separated columns, found {}", cols.len()),
            });
        }
        let doc_id = cols[0].trim();
        if doc_id.is_empty() {
            return Err(CorpusError::EmptyId { line });
        }
        let mut doc = Document::new(doc_id, cols[1]);
        if let Some(title) = cols.get(2).filter(|t| !t.is_empty()) {
            doc.title = Some(title.to_string());
        }
        if doc.is_empty() {
            return Err(CorpusError::EmptyDocument {
                line,
                doc_id: doc_id.to_string(),
            });
        }
        if docs.contains_key(doc_id) {
            return Err(CorpusError::DuplicateDoc {
                line,
                doc_id: doc_id.to_string(),
            });
        }
        docs.insert(doc_id.to_string(), doc);
    }
    Ok(docs)
}

/// Inverse of [`load_collection`] for documents without tabs or newlines.
pub fn serialize_collection<'a>(docs: impl IntoIterator<Item = &'a Document>) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&doc.doc_id);
        out.push('\t');
        out.push_str(&doc.text);
        if let Some(title) = &doc.title {
            out.push('\t');
            out.push_str(title);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StereotypeTarget {
    FemaleStereotype,
    MaleStereotype,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StereotypeTag {
    pub doc_id: String,
    pub target: StereotypeTarget,
}

/// Reads a stereotype TSV `doc_id<TAB>{female|male}`.
pub fn parse_stereotypes(text: &str) -> Result<Vec<StereotypeTag>, CorpusError> {
    let mut tags = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in data_lines(text) {
        if raw.trim_start().starts_with('#') {
            continue;
        }
        let (doc_id, token) = raw.split_once('\t').ok_or_else(|| CorpusError::Malformed {
            line,
            reason: "expected `doc_id<TAB>female|male`".into(),
        })?;
        let doc_id = doc_id.trim();
        if doc_id.is_empty() {
            return Err(CorpusError::EmptyId { line });
        }
        let target = match token.trim().to_ascii_lowercase().as_str() {
            "female" => StereotypeTarget::FemaleStereotype,
            "male" => StereotypeTarget::MaleStereotype,
            other => {
                return Err(CorpusError::UnknownLabel {
                    line,
                    token: other.to_string(),
                })
            }
        };
        if !seen.insert(doc_id.to_string()) {
            return Err(CorpusError::DuplicateDoc {
                line,
                doc_id: doc_id.to_string(),
            });
        }
        tags.push(StereotypeTag {
            doc_id: doc_id.to_string(),
            target,
        });
    }
    Ok(tags)
}

/// Evaluation cutoff and CWEx trade-off weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub cutoff: usize,
    pub alphas: Vec<f64>,
}

impl EvalConfig {
    pub const DEFAULT_CUTOFF: usize = 10;
    pub const DEFAULT_ALPHAS: [f64; 3] = [0.2, 0.5, 0.7];

    pub fn new(cutoff: usize, alphas: Vec<f64>) -> Result<Self, CorpusError> {
        if cutoff == 0 {
            return Err(CorpusError::InvalidConfig("cutoff must be >= 1".into()));
        }
        if let Some(bad) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(CorpusError::InvalidConfig(format!("alpha {bad} outside [0, 1]")));
        }
        Ok(Self { cutoff, alphas })
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            cutoff: Self::DEFAULT_CUTOFF,
            alphas: Self::DEFAULT_ALPHAS.to_vec(),
        }
    }
}
