//! Confidence-weighted consensus.
//!
//! Each model's logprobs are z-normalized against a reference slice. The
//! consensus score of model `j` on query `i` is the sum of the z-scores of
//! every model that gave the same answer as `j`:
//!
//! ```text
//! C[i][j] = sum_k 1(a[i][j] == a[i][k]) * Z[i][k]
//! ```
//!
//! so an answer is rewarded both for the number of models backing it and for
//! how confident those models were.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ResponseCell};
use crate::{Error, Result};

/// Per-model logprob mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub models: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn get(&self, model: &str) -> Option<(f64, f64)> {
        let j = self.models.iter().position(|m| m == model)?;
        Some((self.mean[j], self.std[j]))
    }

    /// `(L - mean) / std`, or 0 when the model's logprobs never varied.
    pub fn z(&self, model: &str, logprob: f64) -> Result<f64> {
        let (mean, std) = self.get(model).ok_or_else(|| Error::UnknownModel(model.to_string()))?;
        Ok(z_score(logprob, mean, std))
    }

    /// Column order of `pool` within these stats.
    fn columns(&self, pool: &[String]) -> Result<Vec<usize>> {
        pool.iter()
            .map(|m| {
                self.models
                    .iter()
                    .position(|s| s == m)
                    .ok_or_else(|| Error::UnknownModel(m.clone()))
            })
            .collect()
    }
}

pub fn z_score(logprob: f64, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        (logprob - mean) / std
    }
}

pub fn fit_norm_stats(d: &Dataset) -> Result<NormStats> {
    if d.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot fit norm stats on an empty dataset".into(),
        ));
    }
    let n = d.len() as f64;
    let m = d.n_models();
    let mut mean = vec![0.0; m];
    for rec in d.records() {
        for (acc, lp) in mean.iter_mut().zip(rec.logprobs()) {
            *acc += lp;
        }
    }
    mean.iter_mut().for_each(|s| *s /= n);
    let mut var = vec![0.0; m];
    for rec in d.records() {
        for ((acc, lp), mu) in var.iter_mut().zip(rec.logprobs()).zip(&mean) {
            *acc += (lp - mu) * (lp - mu);
        }
    }
    Ok(NormStats {
        models: d.model_pool().to_vec(),
        mean,
        std: var.into_iter().map(|v| (v / n).sqrt()).collect(),
    })
}

/// Z-scores for every record, one row per record in pool order.
pub fn z_scores(d: &Dataset, stats: &NormStats) -> Result<Vec<Vec<f64>>> {
    let cols = stats.columns(d.model_pool())?;
    Ok(d.records()
        .iter()
        .map(|rec| {
            rec.logprobs()
                .zip(&cols)
                .map(|(lp, &c)| z_score(lp, stats.mean[c], stats.std[c]))
                .collect()
        })
        .collect())
}

/// Per-answer vote count and z-sum, accumulated in pool order.
fn tally<'a>(answers: &[&'a str], z: &[f64]) -> BTreeMap<&'a str, (usize, f64)> {
    let mut groups: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for (a, zk) in answers.iter().zip(z) {
        let g = groups.entry(a).or_insert((0, 0.0));
        g.0 += 1;
        g.1 += zk;
    }
    groups
}

/// Plurality answer. Ties go to the larger summed z-score of the supporters,
/// then to the lexicographically smallest answer.
pub fn majority_answer(answers: &[&str], z: &[f64]) -> String {
    assert!(!answers.is_empty(), "majority of an empty answer set");
    assert_eq!(answers.len(), z.len());
    let mut best: Option<(&str, usize, f64)> = None;
    // BTreeMap iterates in ascending answer order, so strict comparisons keep
    // the smallest answer on a full tie.
    for (a, (count, zsum)) in tally(answers, z) {
        let better = match best {
            None => true,
            Some((_, bc, bz)) => count > bc || (count == bc && zsum > bz),
        };
        if better {
            best = Some((a, count, zsum));
        }
    }
    best.expect("non-empty").0.to_string()
}

/// `C[j] = sum_k 1(a[j] == a[k]) * z[k]` for one query.
pub fn consensus_row(answers: &[&str], z: &[f64]) -> Vec<f64> {
    let groups = tally(answers, z);
    answers.iter().map(|a| groups[a].1).collect()
}

/// Numerically stable softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Consensus state of a dataset slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusMatrix {
    pub models: Vec<String>,
    pub query_ids: Vec<String>,
    pub z: Vec<Vec<f64>>,
    pub scores: Vec<Vec<f64>>,
    pub probs: Vec<Vec<f64>>,
    pub majority: Vec<String>,
}

impl ConsensusMatrix {
    /// Mean consensus score of every model over the rows in `rows`.
    pub fn mean_scores(&self, rows: &[usize]) -> Vec<f64> {
        let mut acc = vec![0.0; self.models.len()];
        for &i in rows {
            for (a, c) in acc.iter_mut().zip(&self.scores[i]) {
                *a += c;
            }
        }
        let n = rows.len().max(1) as f64;
        acc.into_iter().map(|s| s / n).collect()
    }

    pub fn mean_scores_all(&self) -> Vec<f64> {
        let rows: Vec<usize> = (0..self.scores.len()).collect();
        self.mean_scores(&rows)
    }
}

pub fn consensus_scores(d: &Dataset, stats: &NormStats) -> Result<ConsensusMatrix> {
    let z = z_scores(d, stats)?;
    let mut scores = Vec::with_capacity(d.len());
    let mut probs = Vec::with_capacity(d.len());
    let mut majority = Vec::with_capacity(d.len());
    for (rec, zrow) in d.records().iter().zip(&z) {
        let answers: Vec<&str> = rec.answers().collect();
        let c = consensus_row(&answers, zrow);
        probs.push(softmax(&c));
        scores.push(c);
        majority.push(majority_answer(&answers, zrow));
    }
    Ok(ConsensusMatrix {
        models: d.model_pool().to_vec(),
        query_ids: d.records().iter().map(|r| r.query_id.clone()).collect(),
        z,
        scores,
        probs,
        majority,
    })
}

/// Index of the winning cell when consensus is computed within `answers`
/// only. Exact score ties go to the earliest cell.
pub fn aggregate_index(answers: &[&str], z: &[f64]) -> usize {
    assert!(!answers.is_empty(), "aggregate over an empty subset");
    let c = consensus_row(answers, z);
    let mut best = 0;
    for (k, s) in c.iter().enumerate().skip(1) {
        if *s > c[best] {
            best = k;
        }
    }
    best
}

/// Consensus aggregation over a subset of cells. When every answer differs
/// this picks the most confident cell.
pub fn aggregate_subset(cells: &[&ResponseCell], z: &[f64]) -> String {
    let answers: Vec<&str> = cells.iter().map(|c| c.answer.as_str()).collect();
    cells[aggregate_index(&answers, z)].answer.clone()
}
