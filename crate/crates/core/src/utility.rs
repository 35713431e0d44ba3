//! MRR and nDCG at a cutoff.
//!
//! Gain is the qrels grade (linear) and the discount is `1 / log2(1 + i)`
//! over truncated positions. Queries missing from the qrels score 0 and are
//! listed in the report.

use serde::{Deserialize, Serialize};

use crate::corpus::{truncate, Qrels, RankedList, Run};

fn discount(position: usize) -> f64 {
    1.0 / ((position + 1) as f64).log2()
}

/// Reciprocal rank of the first document with grade > 0 in the top `k`.
pub fn reciprocal_rank(list: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    truncate(list, k)
        .entries
        .iter()
        .position(|e| qrels.grade(&list.query_id, &e.doc_id).unwrap_or(0) > 0)
        .map_or(0.0, |idx| 1.0 / (idx + 1) as f64)
}

/// DCG@k / IDCG@k; 0 when the query has no relevant documents.
pub fn ndcg_at(list: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    let dcg: f64 = truncate(list, k)
        .entries
        .iter()
        .enumerate()
        .map(|(idx, e)| qrels.grade(&list.query_id, &e.doc_id).unwrap_or(0) as f64 * discount(idx + 1))
        .sum();
    let mut ideal: Vec<u32> = qrels
        .for_query(&list.query_id)
        .map(|m| m.values().copied().filter(|g| *g > 0).collect())
        .unwrap_or_default();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(idx, g)| *g as f64 * discount(idx + 1))
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

fn macro_mean(run: &Run, per_query: impl Fn(&RankedList) -> f64) -> f64 {
    if run.is_empty() {
        return 0.0;
    }
    run.lists.values().map(per_query).sum::<f64>() / run.len() as f64
}

/// Mean reciprocal rank over the run's queries.
pub fn mrr(run: &Run, qrels: &Qrels, k: usize) -> f64 {
    macro_mean(run, |l| reciprocal_rank(l, qrels, k))
}

/// Mean nDCG@k over the run's queries.
pub fn ndcg(run: &Run, qrels: &Qrels, k: usize) -> f64 {
    macro_mean(run, |l| ndcg_at(l, qrels, k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRow {
    pub query_id: String,
    pub reciprocal_rank: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub cutoff: usize,
    pub rows: Vec<UtilityRow>,
    pub mean: Option<UtilityRow>,
    /// Run queries with no judgments at all.
    pub queries_without_qrels: Vec<String>,
}

pub fn evaluate_utility(run: &Run, qrels: &Qrels, k: usize) -> UtilityReport {
    let rows: Vec<UtilityRow> = run
        .lists
        .values()
        .map(|list| UtilityRow {
            query_id: list.query_id.clone(),
            reciprocal_rank: reciprocal_rank(list, qrels, k),
            ndcg: ndcg_at(list, qrels, k),
        })
        .collect();
    let mean = (!rows.is_empty()).then(|| {
        let n = rows.len() as f64;
        UtilityRow {
            query_id: "all".into(),
            reciprocal_rank: rows.iter().map(|r| r.reciprocal_rank).sum::<f64>() / n,
            ndcg: rows.iter().map(|r| r.ndcg).sum::<f64>() / n,
        }
    });
    UtilityReport {
        cutoff: k,
        rows,
        mean,
        queries_without_qrels: run
            .query_ids()
            .filter(|q| !qrels.contains_query(q))
            .map(str::to_string)
            .collect(),
    }
}
