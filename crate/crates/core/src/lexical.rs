//! Word-list gender classification and lexical neutrality scoring.
//!
//! This is the frequency heuristic used by NFaiRR-style metrics: count
//! tokens that appear in a male list and a female list, then either take the
//! majority (a three-way label) or turn the gendered-token share into a
//! neutrality score in `[0, 1]`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Document, GenderLabel};

const DEFAULT_MALE: &str = include_str!("../data/male_terms.txt");
const DEFAULT_FEMALE: &str = include_str!("../data/female_terms.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordListError {
    #[error("term `{0}` is not a single lowercase token")]
    InvalidTerm(String),
    #[error("term `{0}` appears in both the male and female lists")]
    Overlap(String),
}

/// Disjoint sets of lowercase single-token gendered terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordLists {
    male: BTreeSet<String>,
    female: BTreeSet<String>,
}

impl WordLists {
    pub fn new<M, F, S>(male: M, female: F) -> Result<Self, WordListError>
    where
        M: IntoIterator<Item = S>,
        F: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let male = collect_terms(male)?;
        let female = collect_terms(female)?;
        if let Some(shared) = male.intersection(&female).next() {
            return Err(WordListError::Overlap(shared.clone()));
        }
        Ok(Self { male, female })
    }

    /// Builds lists from word-list file contents (one term per line, `#`
    /// comments ignored).
    pub fn from_texts(male: &str, female: &str) -> Result<Self, WordListError> {
        Self::new(parse_word_list(male), parse_word_list(female))
    }

    pub fn male_terms(&self) -> &BTreeSet<String> {
        &self.male
    }

    pub fn female_terms(&self) -> &BTreeSet<String> {
        &self.female
    }

    /// The same lists with the male and female roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            male: self.female.clone(),
            female: self.male.clone(),
        }
    }

    /// Hex SHA-256 over both sorted lists; identifies the lists in reports.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (tag, set) in [("male", &self.male), ("female", &self.female)] {
            hasher.update(tag.as_bytes());
            hasher.update([0u8]);
            for term in set {
                hasher.update(term.as_bytes());
                hasher.update(b"\n");
            }
        }
        hex(&hasher.finalize())
    }
}

impl Default for WordLists {
    fn default() -> Self {
        Self::from_texts(DEFAULT_MALE, DEFAULT_FEMALE).expect("bundled word lists are valid")
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn collect_terms<I, S>(terms: I) -> Result<BTreeSet<String>, WordListError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut set = BTreeSet::new();
    for term in terms {
        let term = term.into();
        if tokenize(&term) != [term.as_str()] {
            return Err(WordListError::InvalidTerm(term));
        }
        set.insert(term);
    }
    Ok(set)
}

/// Terms of a word-list file: trimmed non-empty lines not starting with `#`.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Lowercased tokens split on every non-alphanumeric character.
///
/// Apostrophes are separators, so `men's` yields `men` and `s`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Male and female token occurrence counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenderCounts {
    pub male: usize,
    pub female: usize,
    pub tokens: usize,
}

impl GenderCounts {
    pub fn gendered(&self) -> usize {
        self.male + self.female
    }
}

fn count_tokens(doc: &Document, lists: &WordLists) -> GenderCounts {
    let tokens = tokenize(&doc.full_text());
    let mut counts = GenderCounts {
        tokens: tokens.len(),
        ..GenderCounts::default()
    };
    for token in &tokens {
        if lists.male.contains(token) {
            counts.male += 1;
        } else if lists.female.contains(token) {
            counts.female += 1;
        }
    }
    counts
}

/// `(m, f)`: occurrences of male and female terms in title and body.
pub fn gender_counts(doc: &Document, lists: &WordLists) -> (usize, usize) {
    let c = count_tokens(doc, lists);
    (c.male, c.female)
}

/// Majority of gendered terms; ties (including no terms at all) are Neutral.
pub fn label_from_counts(male: usize, female: usize) -> GenderLabel {
    use std::cmp::Ordering::*;
    match male.cmp(&female) {
        Greater => GenderLabel::Male,
        Less => GenderLabel::Female,
        Equal => GenderLabel::Neutral,
    }
}

pub fn lexical_label(doc: &Document, lists: &WordLists) -> GenderLabel {
    let (m, f) = gender_counts(doc, lists);
    label_from_counts(m, f)
}

/// Lexical neutrality of a document, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct NeutralityScore(f64);

impl NeutralityScore {
    pub const NEUTRAL: NeutralityScore = NeutralityScore(1.0);

    /// Clamps into `[0, 1]`; `None` for NaN.
    pub fn new(value: f64) -> Option<Self> {
        if value.is_nan() {
            None
        } else {
            Some(Self(value.clamp(0.0, 1.0)))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_neutral(self) -> bool {
        self.0 == 1.0
    }
}

/// Exactly 1 with no gendered tokens, else `max(0, 1 - (m + f) / |tokens|)`.
pub fn neutrality_from_counts(counts: GenderCounts) -> NeutralityScore {
    if counts.gendered() == 0 {
        return NeutralityScore::NEUTRAL;
    }
    let share = counts.gendered() as f64 / counts.tokens as f64;
    NeutralityScore((1.0 - share).max(0.0))
}

pub fn neutrality_score(doc: &Document, lists: &WordLists) -> NeutralityScore {
    neutrality_from_counts(count_tokens(doc, lists))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryNeutrality {
    Neutral,
    NonNeutral,
}

impl BinaryNeutrality {
    /// Collapses a three-way label: Male and Female become NonNeutral.
    pub fn from_label(label: GenderLabel) -> Option<Self> {
        match label {
            GenderLabel::Neutral => Some(BinaryNeutrality::Neutral),
            GenderLabel::Male | GenderLabel::Female => Some(BinaryNeutrality::NonNeutral),
            GenderLabel::Unparseable => None,
        }
    }
}

/// Neutral iff the neutrality score is exactly 1.
pub fn binary_neutrality(doc: &Document, lists: &WordLists) -> BinaryNeutrality {
    if neutrality_score(doc, lists).is_neutral() {
        BinaryNeutrality::Neutral
    } else {
        BinaryNeutrality::NonNeutral
    }
}
