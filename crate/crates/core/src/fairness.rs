//! Exposure-based gender fairness of ranked lists.
//!
//! Positions are the 1-based indices of the truncated list, not the rank
//! values from the run file. A document at position `i` receives attention
//! `p(i) = 1 / log2(1 + i)`; a group's exposure is its share of the total
//! attention of the truncated list. CWEx rewards neutral exposure and
//! penalizes the gap between gendered exposures:
//!
//! ```text
//! CWEx = alpha * Exp_neutral - (1 - alpha) * |Exp_male - Exp_female|
//! ```
//!
//! NFaiRR is the neutrality-weighted attention of the ranking divided by the
//! best value achievable by reordering the query's candidate pool.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{truncate, EvalConfig, GenderLabel, LabelSet, RankedList, Run};
use crate::lexical::NeutralityScore;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FairnessError {
    #[error("position must be >= 1")]
    InvalidPosition,
    #[error("cutoff must be >= 1")]
    InvalidCutoff,
    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("query `{query_id}` has no documents within the cutoff")]
    EmptyList { query_id: String },
    #[error("query `{query_id}`: document `{doc_id}` has no gender label")]
    Unlabeled { query_id: String, doc_id: String },
    #[error("query `{query_id}`: document `{doc_id}` has an unparseable label")]
    UnparseableLabel { query_id: String, doc_id: String },
    #[error("query `{query_id}`: document `{doc_id}` has no neutrality score")]
    MissingNeutrality { query_id: String, doc_id: String },
    #[error("query `{query_id}`: ranked document `{doc_id}` is not in the candidate pool")]
    NotInPool { query_id: String, doc_id: String },
    #[error("query `{query_id}`: empty candidate pool")]
    EmptyPool { query_id: String },
    #[error("empty group set")]
    EmptyGroupSet,
    #[error("query `{query_id}`: document `{doc_id}` belongs to undeclared group `{group}`")]
    UnknownGroup {
        query_id: String,
        doc_id: String,
        group: String,
    },
}

/// `1 / log2(1 + i)` for 1-based position `i`.
pub fn position_weight(i: usize) -> Result<f64, FairnessError> {
    if i == 0 {
        return Err(FairnessError::InvalidPosition);
    }
    Ok(weight(i))
}

fn weight(i: usize) -> f64 {
    1.0 / ((1 + i) as f64).log2()
}

/// Total attention of positions `1..=n`.
fn max_exposure(n: usize) -> f64 {
    (1..=n).map(weight).sum()
}

/// Trade-off weight and cutoff for one CWEx evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CWExParams {
    pub alpha: f64,
    pub cutoff: usize,
}

impl CWExParams {
    pub fn new(alpha: f64, cutoff: usize) -> Result<Self, FairnessError> {
        let params = Self { alpha, cutoff };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<(), FairnessError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(FairnessError::InvalidAlpha(self.alpha));
        }
        check_cutoff(self.cutoff)
    }
}

fn check_cutoff(k: usize) -> Result<(), FairnessError> {
    if k == 0 {
        Err(FairnessError::InvalidCutoff)
    } else {
        Ok(())
    }
}

/// Normalized exposure of each class over a truncated list.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExposureVector {
    pub male: f64,
    pub female: f64,
    pub neutral: f64,
}

impl ExposureVector {
    pub fn get(&self, group: GenderLabel) -> f64 {
        match group {
            GenderLabel::Male => self.male,
            GenderLabel::Female => self.female,
            GenderLabel::Neutral => self.neutral,
            GenderLabel::Unparseable => 0.0,
        }
    }

    pub fn delta(&self) -> f64 {
        (self.male - self.female).abs()
    }

    pub fn cwex(&self, alpha: f64) -> f64 {
        alpha * self.neutral - (1.0 - alpha) * self.delta()
    }
}

/// Labels of the first `k` documents, in position order.
fn truncated_labels(list: &RankedList, labels: &LabelSet, k: usize) -> Result<Vec<GenderLabel>, FairnessError> {
    check_cutoff(k)?;
    let top = truncate(list, k);
    if top.is_empty() {
        return Err(FairnessError::EmptyList {
            query_id: list.query_id.clone(),
        });
    }
    top.entries
        .iter()
        .map(|e| match labels.get(&e.doc_id) {
            None => Err(FairnessError::Unlabeled {
                query_id: list.query_id.clone(),
                doc_id: e.doc_id.clone(),
            }),
            Some(GenderLabel::Unparseable) => Err(FairnessError::UnparseableLabel {
                query_id: list.query_id.clone(),
                doc_id: e.doc_id.clone(),
            }),
            Some(label) => Ok(label),
        })
        .collect()
}

fn exposure_of(sequence: &[GenderLabel]) -> ExposureVector {
    let mut raw = ExposureVector::default();
    for (idx, label) in sequence.iter().enumerate() {
        let w = weight(idx + 1);
        match label {
            GenderLabel::Male => raw.male += w,
            GenderLabel::Female => raw.female += w,
            GenderLabel::Neutral => raw.neutral += w,
            GenderLabel::Unparseable => unreachable!("rejected while collecting labels"),
        }
    }
    let total = max_exposure(sequence.len());
    ExposureVector {
        male: raw.male / total,
        female: raw.female / total,
        neutral: raw.neutral / total,
    }
}

/// Exposure of every class over the top `k` of `list`.
pub fn exposures(list: &RankedList, labels: &LabelSet, k: usize) -> Result<ExposureVector, FairnessError> {
    Ok(exposure_of(&truncated_labels(list, labels, k)?))
}

/// Exposure of `group` over the top `k`, normalized by the attention of all
/// `min(k, len)` positions.
pub fn exposure(list: &RankedList, labels: &LabelSet, group: GenderLabel, k: usize) -> Result<f64, FairnessError> {
    Ok(exposures(list, labels, k)?.get(group))
}

/// `|Exp_male - Exp_female|` over the top `k`.
pub fn delta_exposure(list: &RankedList, labels: &LabelSet, k: usize) -> Result<f64, FairnessError> {
    Ok(exposures(list, labels, k)?.delta())
}

/// Class-wise weighted exposure; always within `[alpha - 1, alpha]`.
pub fn cwex(list: &RankedList, labels: &LabelSet, params: CWExParams) -> Result<f64, FairnessError> {
    params.validate()?;
    Ok(exposures(list, labels, params.cutoff)?.cwex(params.alpha))
}

/// Group membership for the multi-group generalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupLabel {
    Neutral,
    Group(String),
}

impl From<GenderLabel> for GroupLabel {
    fn from(label: GenderLabel) -> Self {
        match label {
            GenderLabel::Neutral => GroupLabel::Neutral,
            other => GroupLabel::Group(other.as_str().to_string()),
        }
    }
}

/// CWEx over any declared set of non-neutral groups: the disparity term is
/// the gap between the most and least exposed declared group. A declared
/// group with no ranked documents has exposure 0.
pub fn cwex_multigroup(
    list: &RankedList,
    labels: &HashMap<String, GroupLabel>,
    groups: &BTreeSet<String>,
    params: CWExParams,
) -> Result<f64, FairnessError> {
    params.validate()?;
    if groups.is_empty() {
        return Err(FairnessError::EmptyGroupSet);
    }
    let top = truncate(list, params.cutoff);
    if top.is_empty() {
        return Err(FairnessError::EmptyList {
            query_id: list.query_id.clone(),
        });
    }
    let mut neutral = 0.0;
    let mut per_group: BTreeMap<&str, f64> = groups.iter().map(|g| (g.as_str(), 0.0)).collect();
    for (idx, entry) in top.entries.iter().enumerate() {
        let w = weight(idx + 1);
        match labels.get(&entry.doc_id) {
            None => {
                return Err(FairnessError::Unlabeled {
                    query_id: list.query_id.clone(),
                    doc_id: entry.doc_id.clone(),
                })
            }
            Some(GroupLabel::Neutral) => neutral += w,
            Some(GroupLabel::Group(g)) => match per_group.get_mut(g.as_str()) {
                Some(total) => *total += w,
                None => {
                    return Err(FairnessError::UnknownGroup {
                        query_id: list.query_id.clone(),
                        doc_id: entry.doc_id.clone(),
                        group: g.clone(),
                    })
                }
            },
        }
    }
    let total = max_exposure(top.len());
    let (lo, hi) = per_group
        .values()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    let disparity = (hi - lo) / total;
    Ok(params.alpha * (neutral / total) - (1.0 - params.alpha) * disparity)
}

/// Sum of `tau(d_i) * p(i)` over the top `k`.
pub fn fairr(list: &RankedList, neutrality: &HashMap<String, NeutralityScore>, k: usize) -> Result<f64, FairnessError> {
    check_cutoff(k)?;
    truncate(list, k)
        .entries
        .iter()
        .enumerate()
        .map(|(idx, e)| {
            neutrality
                .get(&e.doc_id)
                .map(|tau| tau.value() * weight(idx + 1))
                .ok_or_else(|| FairnessError::MissingNeutrality {
                    query_id: list.query_id.clone(),
                    doc_id: e.doc_id.clone(),
                })
        })
        .sum()
}

/// FaiRR of the ideal ordering: the top `k` of `pool` by neutrality.
pub fn ideal_fairr(pool: &HashMap<String, NeutralityScore>, k: usize) -> Result<f64, FairnessError> {
    check_cutoff(k)?;
    let mut taus: Vec<f64> = pool.values().map(|t| t.value()).collect();
    taus.sort_by(|a, b| b.total_cmp(a));
    Ok(taus
        .iter()
        .take(k)
        .enumerate()
        .map(|(idx, t)| t * weight(idx + 1))
        .sum())
}

/// FaiRR divided by the ideal FaiRR of the candidate pool; 1 when the ideal
/// is 0.
pub fn nfairr(list: &RankedList, pool: &HashMap<String, NeutralityScore>, k: usize) -> Result<f64, FairnessError> {
    check_cutoff(k)?;
    if pool.is_empty() {
        return Err(FairnessError::EmptyPool {
            query_id: list.query_id.clone(),
        });
    }
    if let Some(missing) = list.entries.iter().find(|e| !pool.contains_key(&e.doc_id)) {
        return Err(FairnessError::NotInPool {
            query_id: list.query_id.clone(),
            doc_id: missing.doc_id.clone(),
        });
    }
    let ideal = ideal_fairr(pool, k)?;
    if ideal == 0.0 {
        return Ok(1.0);
    }
    Ok(fairr(list, pool, k)? / ideal)
}

/// Neutrality inputs for NFaiRR within [`evaluate_run`].
#[derive(Debug, Clone, Copy)]
pub struct NeutralityInput<'a> {
    pub scores: &'a HashMap<String, NeutralityScore>,
    /// Explicit candidate pools per query; when absent, a query's pool is its
    /// full (untruncated) ranked list.
    pub pools: Option<&'a Run>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessRow {
    pub query_id: String,
    /// One value per configured alpha, same order.
    pub cwex: Vec<f64>,
    pub delta_exposure: f64,
    pub exposure: ExposureVector,
    pub nfairr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub cutoff: usize,
    pub alphas: Vec<f64>,
    pub rows: Vec<FairnessRow>,
    /// Unweighted mean over evaluated queries.
    pub mean: Option<FairnessRow>,
    pub skipped_queries: Vec<String>,
}

fn pool_scores(
    query_id: &str,
    pool: &RankedList,
    scores: &HashMap<String, NeutralityScore>,
) -> Result<HashMap<String, NeutralityScore>, FairnessError> {
    pool.doc_ids()
        .map(|doc| {
            scores
                .get(doc)
                .map(|s| (doc.to_string(), *s))
                .ok_or_else(|| FairnessError::MissingNeutrality {
                    query_id: query_id.to_string(),
                    doc_id: doc.to_string(),
                })
        })
        .collect()
}

/// Per-query CWEx (one per alpha), delta exposure and optional NFaiRR, plus
/// their means. Queries with nothing in the cutoff are skipped and listed.
pub fn evaluate_run(
    run: &Run,
    labels: &LabelSet,
    neutrality: Option<NeutralityInput<'_>>,
    config: &EvalConfig,
) -> Result<FairnessReport, FairnessError> {
    check_cutoff(config.cutoff)?;
    if let Some(bad) = config.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(FairnessError::InvalidAlpha(*bad));
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (query_id, list) in &run.lists {
        if list.is_empty() {
            skipped.push(query_id.clone());
            continue;
        }
        let exp = exposures(list, labels, config.cutoff)?;
        let nfairr_value = match neutrality {
            None => None,
            Some(input) => {
                let pool_list = match input.pools {
                    Some(pools) => pools.get(query_id).unwrap_or(list),
                    None => list,
                };
                let pool = pool_scores(query_id, pool_list, input.scores)?;
                Some(nfairr(list, &pool, config.cutoff)?)
            }
        };
        rows.push(FairnessRow {
            query_id: query_id.clone(),
            cwex: config.alphas.iter().map(|a| exp.cwex(*a)).collect(),
            delta_exposure: exp.delta(),
            exposure: exp,
            nfairr: nfairr_value,
        });
    }
    let mean = mean_row(&rows, config.alphas.len());
    Ok(FairnessReport {
        cutoff: config.cutoff,
        alphas: config.alphas.clone(),
        rows,
        mean,
        skipped_queries: skipped,
    })
}

fn mean_row(rows: &[FairnessRow], n_alphas: usize) -> Option<FairnessRow> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let avg = |f: &dyn Fn(&FairnessRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let nfairr = if rows.iter().all(|r| r.nfairr.is_some()) {
        Some(avg(&|r| r.nfairr.unwrap_or_default()))
    } else {
        None
    };
    Some(FairnessRow {
        query_id: "all".into(),
        cwex: (0..n_alphas).map(|j| avg(&|r| r.cwex[j])).collect(),
        delta_exposure: avg(&|r| r.delta_exposure),
        exposure: ExposureVector {
            male: avg(&|r| r.exposure.male),
            female: avg(&|r| r.exposure.female),
            neutral: avg(&|r| r.exposure.neutral),
        },
        nfairr,
    })
}
