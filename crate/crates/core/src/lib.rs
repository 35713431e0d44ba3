//! Gender-fairness evaluation for ranked retrieval.
//!
//! Documents are labeled Male, Female or Neutral, either by a word-list
//! heuristic ([`lexical`]) or by prompting a chat model ([`llm`]). Ranked
//! lists are then scored with class-wise weighted exposure (CWEx), the gap
//! between male and female exposure, and the NFaiRR neutrality baseline
//! ([`fairness`]). [`utility`] and [`agreement`] cover the usual retrieval
//! and annotation-quality numbers alongside.

pub mod agreement;
pub mod cli;
pub mod corpus;
pub mod fairness;
pub mod lexical;
pub mod llm;
pub mod report;
pub mod utility;

pub use corpus::{
    load_collection, load_labels, parse_qrels, parse_run, truncate, CorpusError, Document, EvalConfig, GenderLabel,
    LabelSet, Qrels, RankEntry, RankedList, Run,
};
pub use fairness::{cwex, delta_exposure, exposure, nfairr, position_weight, CWExParams, FairnessError};
