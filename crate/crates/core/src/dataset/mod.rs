//! Routing data model: queries, per-model responses, and the record-stream
//! file format they are stored in.

mod io;
mod split;
mod synthetic;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::vector;
use crate::{Error, Result};

pub use io::{load_dataset, read_dataset, save_dataset, write_dataset};
pub use split::split_dataset;
pub use synthetic::{
    generate_scenario, generate_synthetic, PlantedRegion, SyntheticScenario, SyntheticSpec, ANSWER_OPTIONS,
};

/// Embeddings whose norm is this far from 1 are rescaled; farther is an error.
pub const EMBEDDING_NORM_TOLERANCE: f64 = 1e-3;
/// Norms within this of 1 are left untouched so that load/save is idempotent.
const EMBEDDING_EXACT_TOLERANCE: f64 = 1e-9;

/// Canonical answer form: trimmed, lowercased, inner whitespace collapsed.
pub fn normalize_answer(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One model's extracted answer and confidence for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCell {
    pub model: String,
    pub answer: String,
    pub logprob: f64,
}

impl ResponseCell {
    pub fn new(model: impl Into<String>, answer: &str, logprob: f64) -> Self {
        Self {
            model: model.into(),
            answer: normalize_answer(answer),
            logprob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub task: String,
    pub text: String,
    pub embedding: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    pub responses: Vec<ResponseCell>,
}

impl QueryRecord {
    pub fn answers(&self) -> impl Iterator<Item = &str> {
        self.responses.iter().map(|c| c.answer.as_str())
    }

    pub fn logprobs(&self) -> impl Iterator<Item = f64> + '_ {
        self.responses.iter().map(|c| c.logprob)
    }
}

/// A validated set of query records over a fixed model pool.
///
/// Every record's `responses` are stored in pool order, so `responses[j]`
/// always belongs to `model_pool()[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    model_pool: Vec<String>,
    dim: usize,
    records: Vec<QueryRecord>,
}

impl Dataset {
    /// Validates and canonicalizes `records`. Answers are normalized, responses
    /// are reordered to match `model_pool`, and near-unit embeddings are
    /// rescaled.
    pub fn new(model_pool: Vec<String>, dim: usize, records: Vec<QueryRecord>) -> Result<Self> {
        if model_pool.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "model pool needs at least 2 models, got {}",
                model_pool.len()
            )));
        }
        let mut slot = HashMap::with_capacity(model_pool.len());
        for (j, m) in model_pool.iter().enumerate() {
            if slot.insert(m.as_str(), j).is_some() {
                return Err(Error::InvalidArgument(format!("model {m} listed twice in pool")));
            }
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }

        let mut seen = HashSet::with_capacity(records.len());
        let mut out = Vec::with_capacity(records.len());
        for (k, rec) in records.into_iter().enumerate() {
            let rec = canonicalize_record(rec, k + 1, &model_pool, &slot, dim)?;
            if !seen.insert(rec.query_id.clone()) {
                return Err(Error::DuplicateQueryId(rec.query_id));
            }
            out.push(rec);
        }
        Ok(Self {
            model_pool,
            dim,
            records: out,
        })
    }

    pub fn model_pool(&self) -> &[String] {
        &self.model_pool
    }

    pub fn n_models(&self) -> usize {
        self.model_pool.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Task labels in sorted order.
    pub fn tasks(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| r.task.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Record indices belonging to `task`, in dataset order.
    pub fn task_indices(&self, task: &str) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.task == task)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn model_index(&self, model: &str) -> Option<usize> {
        self.model_pool.iter().position(|m| m == model)
    }

    /// Records at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            model_pool: self.model_pool.clone(),
            dim: self.dim,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Same records with gold answers replaced by `labels` (one per record).
    pub fn with_gold(&self, labels: &[Option<String>]) -> Result<Dataset> {
        if labels.len() != self.records.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} records",
                labels.len(),
                self.records.len()
            )));
        }
        let mut out = self.clone();
        for (rec, label) in out.records.iter_mut().zip(labels) {
            rec.gold = label.as_deref().map(normalize_answer);
        }
        Ok(out)
    }

    /// Gold answers of all records, failing on the first record without one.
    pub fn gold_labels(&self) -> Result<Vec<&str>> {
        self.records
            .iter()
            .map(|r| r.gold.as_deref().ok_or_else(|| Error::MissingGold(r.query_id.clone())))
            .collect()
    }
}

fn canonicalize_record(
    mut rec: QueryRecord,
    record_no: usize,
    pool: &[String],
    slot: &HashMap<&str, usize>,
    dim: usize,
) -> Result<QueryRecord> {
    if rec.embedding.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: rec.embedding.len(),
        });
    }
    if rec.embedding.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("embedding of {}", rec.query_id)));
    }
    let n = vector::norm(&rec.embedding);
    if (n - 1.0).abs() > EMBEDDING_NORM_TOLERANCE {
        return Err(Error::EmbeddingNorm {
            query_id: rec.query_id,
            norm: n,
        });
    }
    if (n - 1.0).abs() > EMBEDDING_EXACT_TOLERANCE {
        rec.embedding.iter_mut().for_each(|x| *x /= n);
    }

    if rec.responses.len() != pool.len() {
        return Err(Error::PoolMismatch {
            record: record_no,
            detail: format!("{} responses for a pool of {}", rec.responses.len(), pool.len()),
        });
    }
    let mut ordered: Vec<Option<ResponseCell>> = vec![None; pool.len()];
    for mut cell in rec.responses.drain(..) {
        let Some(&j) = slot.get(cell.model.as_str()) else {
            return Err(Error::PoolMismatch {
                record: record_no,
                detail: format!("unknown model {}", cell.model),
            });
        };
        if ordered[j].is_some() {
            return Err(Error::PoolMismatch {
                record: record_no,
                detail: format!("duplicate response from {}", cell.model),
            });
        }
        if !cell.logprob.is_finite() {
            return Err(Error::NonFinite(format!(
                "logprob of {} on {}",
                cell.model, rec.query_id
            )));
        }
        cell.answer = normalize_answer(&cell.answer);
        if cell.answer.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "empty answer from {} on {}",
                cell.model, rec.query_id
            )));
        }
        ordered[j] = Some(cell);
    }
    // Counts match and there are no duplicates, so every slot is filled.
    rec.responses = ordered.into_iter().flatten().collect();

    if let Some(g) = rec.gold.as_mut() {
        *g = normalize_answer(g);
        if g.is_empty() {
            return Err(Error::InvalidArgument(format!("empty gold on {}", rec.query_id)));
        }
    }
    Ok(rec)
}
