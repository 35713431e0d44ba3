//! Accuracy, Cohen's and Fleiss's kappa, and majority-vote aggregation of
//! crowd labels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, GenderLabel, LabelSet, StereotypeTag, StereotypeTarget, PROVENANCE_HUMAN};
use crate::lexical::BinaryNeutrality;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgreementError {
    #[error("no prediction for gold document `{0}`")]
    MissingPrediction(String),
    #[error("document sets differ: {only_a:?} only in the first, {only_b:?} only in the second")]
    DocMismatch { only_a: Vec<String>, only_b: Vec<String> },
    #[error("empty input")]
    Empty,
    #[error("no documents tagged {0:?}")]
    EmptySubset(StereotypeTarget),
    #[error("stereotype tag references unknown document `{0}`")]
    UnknownDoc(String),
    #[error("item {item} has {found} ratings, expected {expected}")]
    UnequalRaters { item: usize, found: u32, expected: u32 },
    #[error("at least two raters per item are required")]
    TooFewRaters,
    #[error("vote on document `{0}` is unparseable")]
    UnparseableVote(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Share of gold documents whose prediction equals the gold label.
/// Unparseable predictions never match.
pub fn accuracy(pred: &LabelSet, gold: &LabelSet) -> Result<f64, AgreementError> {
    if gold.is_empty() {
        return Err(AgreementError::Empty);
    }
    let mut correct = 0usize;
    for (doc, gold_label) in gold.iter() {
        let p = pred
            .get(doc)
            .ok_or_else(|| AgreementError::MissingPrediction(doc.to_string()))?;
        if p.is_class() && p == gold_label {
            correct += 1;
        }
    }
    Ok(correct as f64 / gold.len() as f64)
}

/// Accuracy after collapsing gold labels to Neutral vs NonNeutral.
/// Gold documents missing from `pred` count as errors of omission.
pub fn binary_neutrality_accuracy(
    pred: &BTreeMap<String, BinaryNeutrality>,
    gold: &LabelSet,
) -> Result<f64, AgreementError> {
    if gold.is_empty() {
        return Err(AgreementError::Empty);
    }
    let mut correct = 0usize;
    for (doc, gold_label) in gold.iter() {
        let p = pred
            .get(doc)
            .ok_or_else(|| AgreementError::MissingPrediction(doc.to_string()))?;
        if BinaryNeutrality::from_label(gold_label) == Some(*p) {
            correct += 1;
        }
    }
    Ok(correct as f64 / gold.len() as f64)
}

/// `(female_acc, male_acc)` over the two stereotype subsets.
pub fn stereotype_accuracy(
    pred: &LabelSet,
    gold: &LabelSet,
    tags: &[StereotypeTag],
) -> Result<(f64, f64), AgreementError> {
    let subset_accuracy = |target: StereotypeTarget| -> Result<f64, AgreementError> {
        let mut total = 0usize;
        let mut correct = 0usize;
        for tag in tags.iter().filter(|t| t.target == target) {
            let g = gold
                .get(&tag.doc_id)
                .ok_or_else(|| AgreementError::UnknownDoc(tag.doc_id.clone()))?;
            let p = pred
                .get(&tag.doc_id)
                .ok_or_else(|| AgreementError::MissingPrediction(tag.doc_id.clone()))?;
            total += 1;
            if p.is_class() && p == g {
                correct += 1;
            }
        }
        if total == 0 {
            return Err(AgreementError::EmptySubset(target));
        }
        Ok(correct as f64 / total as f64)
    };
    Ok((
        subset_accuracy(StereotypeTarget::FemaleStereotype)?,
        subset_accuracy(StereotypeTarget::MaleStereotype)?,
    ))
}

fn doc_mismatch(a: &LabelSet, b: &LabelSet) -> Option<AgreementError> {
    let da: BTreeSet<&str> = a.doc_ids().collect();
    let db: BTreeSet<&str> = b.doc_ids().collect();
    if da == db {
        return None;
    }
    Some(AgreementError::DocMismatch {
        only_a: da.difference(&db).map(|s| s.to_string()).collect(),
        only_b: db.difference(&da).map(|s| s.to_string()).collect(),
    })
}

/// Cohen's kappa with marginal-product chance agreement. Unparseable is its
/// own category.
pub fn cohens_kappa(a: &LabelSet, b: &LabelSet) -> Result<f64, AgreementError> {
    if let Some(err) = doc_mismatch(a, b) {
        return Err(err);
    }
    if a.is_empty() {
        return Err(AgreementError::Empty);
    }
    let pairs: Vec<(GenderLabel, GenderLabel)> = a
        .iter()
        .map(|(doc, la)| (la, b.get(doc).expect("doc sets are equal")))
        .collect();
    Ok(kappa_from_pairs(&pairs))
}

fn kappa_from_pairs<T: Ord + Copy>(pairs: &[(T, T)]) -> f64 {
    let n = pairs.len() as f64;
    let mut margin_a: BTreeMap<T, f64> = BTreeMap::new();
    let mut margin_b: BTreeMap<T, f64> = BTreeMap::new();
    let mut agree = 0.0;
    for (x, y) in pairs {
        *margin_a.entry(*x).or_default() += 1.0;
        *margin_b.entry(*y).or_default() += 1.0;
        if x == y {
            agree += 1.0;
        }
    }
    let p_o = agree / n;
    let p_e: f64 = margin_a
        .iter()
        .map(|(cat, ca)| ca / n * margin_b.get(cat).copied().unwrap_or(0.0) / n)
        .sum();
    if p_e == 1.0 {
        return 1.0;
    }
    (p_o - p_e) / (1.0 - p_e)
}

/// Per-item rating counts over the three classes, in Male, Female, Neutral
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnnotationMatrix {
    pub counts: Vec<[u32; 3]>,
}

fn class_index(label: GenderLabel) -> Option<usize> {
    match label {
        GenderLabel::Male => Some(0),
        GenderLabel::Female => Some(1),
        GenderLabel::Neutral => Some(2),
        GenderLabel::Unparseable => None,
    }
}

impl AnnotationMatrix {
    pub fn from_votes<'a>(items: impl IntoIterator<Item = &'a [GenderLabel]>) -> Result<Self, AgreementError> {
        let mut counts = Vec::new();
        for votes in items {
            let mut row = [0u32; 3];
            for v in votes {
                let idx = class_index(*v).ok_or_else(|| AgreementError::UnparseableVote(String::new()))?;
                row[idx] += 1;
            }
            counts.push(row);
        }
        Ok(Self { counts })
    }
}

/// Fleiss's kappa over {Male, Female, Neutral}. Returns 1 when every item is
/// unanimous.
pub fn fleiss_kappa(matrix: &AnnotationMatrix) -> Result<f64, AgreementError> {
    let first = matrix.counts.first().ok_or(AgreementError::Empty)?;
    let raters: u32 = first.iter().sum();
    if raters < 2 {
        return Err(AgreementError::TooFewRaters);
    }
    for (item, row) in matrix.counts.iter().enumerate() {
        let found: u32 = row.iter().sum();
        if found != raters {
            return Err(AgreementError::UnequalRaters {
                item,
                found,
                expected: raters,
            });
        }
    }
    let n = raters as f64;
    let items = matrix.counts.len() as f64;
    let mut column_totals = [0.0f64; 3];
    let mut p_bar = 0.0;
    for row in &matrix.counts {
        let mut agreeing_pairs = 0.0;
        for (j, c) in row.iter().enumerate() {
            let c = *c as f64;
            column_totals[j] += c;
            agreeing_pairs += c * (c - 1.0);
        }
        p_bar += agreeing_pairs / (n * (n - 1.0));
    }
    p_bar /= items;
    let p_e: f64 = column_totals.iter().map(|t| (t / (items * n)).powi(2)).sum();
    if p_e == 1.0 {
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteOutcome {
    Decided(GenderLabel),
    Unresolved,
}

/// Strict plurality decides; any tie at the top is unresolved.
pub fn majority_vote(votes: &[GenderLabel]) -> Result<VoteOutcome, AgreementError> {
    if votes.is_empty() {
        return Err(AgreementError::Empty);
    }
    let mut tally: BTreeMap<GenderLabel, usize> = BTreeMap::new();
    for v in votes {
        *tally.entry(*v).or_default() += 1;
    }
    let top = *tally.values().max().expect("non-empty tally");
    let mut leaders = tally.iter().filter(|(_, c)| **c == top);
    let (label, _) = leaders.next().expect("at least one leader");
    if leaders.next().is_some() {
        Ok(VoteOutcome::Unresolved)
    } else {
        Ok(VoteOutcome::Decided(*label))
    }
}

/// Crowd votes grouped by document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VoteTable {
    pub votes: BTreeMap<String, Vec<(String, GenderLabel)>>,
}

/// Reads `doc_id<TAB>annotator_id<TAB>label` rows.
pub fn parse_votes(text: &str) -> Result<VoteTable, CorpusError> {
    let mut table = VoteTable::default();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 3 {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        let (doc, annotator) = (cols[0].trim(), cols[1].trim());
        if doc.is_empty() {
            return Err(CorpusError::EmptyId { line });
        }
        let label = GenderLabel::parse_class(cols[2]).ok_or_else(|| CorpusError::UnknownLabel {
            line,
            token: cols[2].trim().to_string(),
        })?;
        if !seen.insert((doc.to_string(), annotator.to_string())) {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("annotator `{annotator}` voted twice on `{doc}`"),
            });
        }
        table
            .votes
            .entry(doc.to_string())
            .or_default()
            .push((annotator.to_string(), label));
    }
    Ok(table)
}

/// A document whose votes had no strict plurality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicationItem {
    pub doc_id: String,
    /// Male, Female, Neutral vote counts.
    pub counts: [u32; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub gold: LabelSet,
    pub unresolved: Vec<AdjudicationItem>,
}

impl VoteTable {
    fn labels_of(&self, doc: &str) -> Vec<GenderLabel> {
        self.votes[doc].iter().map(|(_, l)| *l).collect()
    }

    pub fn matrix(&self) -> AnnotationMatrix {
        let counts = self
            .votes
            .keys()
            .map(|doc| {
                let mut row = [0u32; 3];
                for l in self.labels_of(doc) {
                    row[class_index(l).expect("votes are classes")] += 1;
                }
                row
            })
            .collect();
        AnnotationMatrix { counts }
    }

    /// Majority labels as a human gold set; ties go to the adjudication list.
    pub fn aggregate(&self) -> Result<Aggregation, AgreementError> {
        let mut gold = LabelSet::new(PROVENANCE_HUMAN);
        let mut unresolved = Vec::new();
        let matrix = self.matrix();
        for (doc, counts) in self.votes.keys().zip(matrix.counts) {
            match majority_vote(&self.labels_of(doc))? {
                VoteOutcome::Decided(label) => gold.insert(doc.clone(), label)?,
                VoteOutcome::Unresolved => unresolved.push(AdjudicationItem {
                    doc_id: doc.clone(),
                    counts,
                }),
            }
        }
        Ok(Aggregation { gold, unresolved })
    }
}

/// Adjudication TSV: header then `doc_id<TAB>male<TAB>female<TAB>neutral`.
pub fn serialize_adjudication(items: &[AdjudicationItem]) -> String {
    let mut out = String::from("# doc_id\tmale\tfemale\tneutral\n");
    for item in items {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            item.doc_id, item.counts[0], item.counts[1], item.counts[2]
        ));
    }
    out
}
