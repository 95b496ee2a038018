//! The consensus-and-clustering router.
//!
//! Training builds, per task, a set of skill centroids and a ranked expert
//! list for each of them:
//!
//! 1. for every model, the task queries it handles well (it agrees with the
//!    majority, or with gold for [`Variant::GroundTruth`]);
//! 2. silhouette-selected k-means over each of those query sets, pooled
//!    into one centroid set per task;
//! 3. merging of near-duplicate centroids;
//! 4. assignment of all task queries to centroids and ranking of the pool
//!    inside every cluster;
//! 5. pruning of clusters whose top experts duplicate a larger cluster's,
//!    followed by reassignment, recentering and re-ranking.
//!
//! Routing inherits the task of the nearest training query, picks the nearest
//! centroid of that task, and aggregates the top-K experts by consensus using
//! the logprob statistics of the training split.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clustering::{
    self, assign_queries, merge_centroids, prune_centroids, select_k, Centroid, ClusterAssignment, ClusterId,
};
use crate::consensus::{self, consensus_scores, fit_norm_stats, ConsensusMatrix, NormStats};
use crate::dataset::{Dataset, QueryRecord, ResponseCell};
use crate::eval::{RoutedAnswer, Router};
use crate::{seed, vector, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Strong sets and rankings from consensus alone; no labels consumed.
    Consensus,
    /// Strong sets and rankings from agreement with the gold answers.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterConfig {
    pub k_select: usize,
    pub variant: Variant,
    pub k_min: usize,
    pub k_max: usize,
    pub silhouette_threshold: f64,
    pub merge_tau: f64,
    pub jaccard_threshold: f64,
    pub seed: u64,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            k_select: 3,
            variant: Variant::Consensus,
            k_min: *clustering::DEFAULT_K_RANGE.start(),
            k_max: *clustering::DEFAULT_K_RANGE.end(),
            silhouette_threshold: clustering::DEFAULT_SILHOUETTE_THRESHOLD,
            merge_tau: clustering::DEFAULT_MERGE_TAU,
            jaccard_threshold: clustering::DEFAULT_JACCARD_THRESHOLD,
            seed: 0,
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_select == 0 {
            return Err(Error::InvalidArgument("k_select must be positive".into()));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::InvalidArgument(format!(
                "invalid k range {}..={}",
                self.k_min, self.k_max
            )));
        }
        for (name, v) in [
            ("silhouette_threshold", self.silhouette_threshold),
            ("merge_tau", self.merge_tau),
            ("jaccard_threshold", self.jaccard_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub model: String,
    pub score: f64,
}

/// Full-pool expert ranking of one cluster, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRanking {
    pub cluster_id: ClusterId,
    pub models: Vec<RankedModel>,
}

impl ClusterRanking {
    pub fn model_ids(&self) -> Vec<String> {
        self.models.iter().map(|m| m.model.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRouting {
    pub task: String,
    pub centroids: Vec<Centroid>,
    pub rankings: Vec<ClusterRanking>,
}

impl TaskRouting {
    pub fn ranking(&self, id: ClusterId) -> Option<&ClusterRanking> {
        self.rankings.iter().find(|r| r.cluster_id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainQuery {
    pub embedding: Vec<f64>,
    pub task: String,
}

/// Everything routing needs; immutable once trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterArtifact {
    pub model_pool: Vec<String>,
    pub norm_stats: NormStats,
    pub tasks: Vec<TaskRouting>,
    pub train_index: Vec<TrainQuery>,
    pub config: RouterConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub query_id: String,
    pub task: String,
    pub cluster_id: ClusterId,
    pub selected: Vec<String>,
    pub answer: String,
    /// Consensus score of each selected model within the selected subset.
    pub scores: Vec<f64>,
}

/// Positions (within `rows`) of the queries `model` handles well.
pub fn strong_set(
    d: &Dataset,
    rows: &[usize],
    consensus: &ConsensusMatrix,
    model: usize,
    variant: Variant,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for &i in rows {
        let rec = &d.records()[i];
        let answer = rec.responses[model].answer.as_str();
        let target = match variant {
            Variant::Consensus => consensus.majority[i].as_str(),
            Variant::GroundTruth => rec
                .gold
                .as_deref()
                .ok_or_else(|| Error::MissingGold(rec.query_id.clone()))?,
        };
        if answer == target {
            out.push(i);
        }
    }
    Ok(out)
}

/// Pool ranked by mean consensus over `rows`; ties keep pool order.
pub fn rank_by_consensus(consensus: &ConsensusMatrix, rows: &[usize]) -> Vec<RankedModel> {
    let means = consensus.mean_scores(rows);
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
    order
        .into_iter()
        .map(|j| RankedModel {
            model: consensus.models[j].clone(),
            score: means[j],
        })
        .collect()
}

/// Pool ranked by accuracy against gold over `rows`, ties broken by mean
/// consensus and then pool order.
pub fn rank_by_accuracy(d: &Dataset, consensus: &ConsensusMatrix, rows: &[usize]) -> Result<Vec<RankedModel>> {
    let m = d.n_models();
    let mut hits = vec![0usize; m];
    for &i in rows {
        let rec = &d.records()[i];
        let gold = rec
            .gold
            .as_deref()
            .ok_or_else(|| Error::MissingGold(rec.query_id.clone()))?;
        for (h, a) in hits.iter_mut().zip(rec.answers()) {
            *h += usize::from(a == gold);
        }
    }
    let n = rows.len().max(1) as f64;
    let acc: Vec<f64> = hits.into_iter().map(|h| h as f64 / n).collect();
    let means = consensus.mean_scores(rows);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| acc[b].total_cmp(&acc[a]).then(means[b].total_cmp(&means[a])));
    Ok(order
        .into_iter()
        .map(|j| RankedModel {
            model: d.model_pool()[j].clone(),
            score: acc[j],
        })
        .collect())
}

pub fn train(d: &Dataset, config: &RouterConfig) -> Result<RouterArtifact> {
    config.validate()?;
    if d.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    if config.variant == Variant::GroundTruth {
        d.gold_labels()?;
    }
    let norm_stats = fit_norm_stats(d)?;
    let cm = consensus_scores(d, &norm_stats)?;

    let mut next_id: ClusterId = 0;
    let mut tasks = Vec::new();
    for (t, task) in d.tasks().into_iter().enumerate() {
        let rows = d.task_indices(&task);
        tasks.push(train_task(d, &cm, &task, t, &rows, config, &mut next_id)?);
    }

    Ok(RouterArtifact {
        model_pool: d.model_pool().to_vec(),
        norm_stats,
        tasks,
        train_index: d
            .records()
            .iter()
            .map(|r| TrainQuery {
                embedding: r.embedding.clone(),
                task: r.task.clone(),
            })
            .collect(),
        config: config.clone(),
    })
}

fn train_task(
    d: &Dataset,
    cm: &ConsensusMatrix,
    task: &str,
    task_no: usize,
    rows: &[usize],
    config: &RouterConfig,
    next_id: &mut ClusterId,
) -> Result<TaskRouting> {
    let embedding = |i: usize| d.records()[i].embedding.as_slice();
    let mut fresh_id = || {
        let id = *next_id;
        *next_id += 1;
        id
    };

    let mut candidates = Vec::new();
    for model in 0..d.n_models() {
        let strong = strong_set(d, rows, cm, model, config.variant)?;
        if strong.is_empty() {
            continue;
        }
        let vectors: Vec<&[f64]> = strong.iter().map(|&i| embedding(i)).collect();
        let sel = select_k(
            &vectors,
            config.k_min..=config.k_max,
            config.silhouette_threshold,
            seed::derive(config.seed, &[task_no as u64, model as u64]),
        )?;
        for (vector, size) in sel.centroids.iter().zip(sel.cluster_sizes()) {
            if size == 0 {
                continue;
            }
            candidates.push(Centroid {
                cluster_id: fresh_id(),
                task: task.to_string(),
                vector: vector.clone(),
                seed_count: size,
            });
        }
    }

    let merged = merge_centroids(candidates, config.merge_tau);
    let vectors: Vec<&[f64]> = rows.iter().map(|&i| embedding(i)).collect();
    if merged.is_empty() {
        return fallback_task(d, cm, task, rows, &vectors, config, fresh_id());
    }

    let assignment = assign_queries(&vectors, &merged)?;
    let rankings = rank_clusters(d, cm, rows, &merged, &assignment, config.variant)?;
    let top_lists: BTreeMap<ClusterId, Vec<String>> = rankings.iter().map(|r| (r.cluster_id, r.model_ids())).collect();
    let pruned = prune_centroids(&vectors, &merged, &assignment, &top_lists, config.jaccard_threshold)?;
    let rankings = rank_clusters(d, cm, rows, &pruned.centroids, &pruned.assignment, config.variant)?;

    Ok(TaskRouting {
        task: task.to_string(),
        centroids: pruned.centroids,
        rankings,
    })
}

fn fallback_task(
    d: &Dataset,
    cm: &ConsensusMatrix,
    task: &str,
    rows: &[usize],
    vectors: &[&[f64]],
    config: &RouterConfig,
    id: ClusterId,
) -> Result<TaskRouting> {
    let sum = vector::weighted_sum(d.dim(), vectors.iter().map(|v| (1.0, *v)));
    let centroid = Centroid {
        cluster_id: id,
        task: task.to_string(),
        vector: vector::normalized(&sum).unwrap_or_else(|| vectors[0].to_vec()),
        seed_count: rows.len(),
    };
    let models = match config.variant {
        Variant::Consensus => rank_by_consensus(cm, rows),
        Variant::GroundTruth => rank_by_accuracy(d, cm, rows)?,
    };
    Ok(TaskRouting {
        task: task.to_string(),
        centroids: vec![centroid],
        rankings: vec![ClusterRanking { cluster_id: id, models }],
    })
}

fn rank_clusters(
    d: &Dataset,
    cm: &ConsensusMatrix,
    rows: &[usize],
    centroids: &[Centroid],
    assignment: &ClusterAssignment,
    variant: Variant,
) -> Result<Vec<ClusterRanking>> {
    centroids
        .iter()
        .map(|c| {
            let members: Vec<usize> = assignment
                .members
                .get(&c.cluster_id)
                .map(|m| m.iter().map(|&p| rows[p]).collect())
                .unwrap_or_default();
            let models = match variant {
                Variant::Consensus => rank_by_consensus(cm, &members),
                Variant::GroundTruth => rank_by_accuracy(d, cm, &members)?,
            };
            Ok(ClusterRanking {
                cluster_id: c.cluster_id,
                models,
            })
        })
        .collect()
}

impl RouterArtifact {
    pub fn task(&self, name: &str) -> Option<&TaskRouting> {
        self.tasks.iter().find(|t| t.task == name)
    }

    /// Task label of the nearest training query.
    pub fn route_task(&self, embedding: &[f64]) -> Result<&TaskRouting> {
        self.check_dim(embedding)?;
        let (i, _) = vector::nearest_by_dot(
            embedding,
            self.train_index.iter().enumerate().map(|(i, q)| (i, &q.embedding)),
        )
        .ok_or_else(|| Error::Invariant("empty training index".into()))?;
        let name = &self.train_index[i].task;
        self.task(name)
            .ok_or_else(|| Error::Invariant(format!("task {name} has no routing table")))
    }

    fn check_dim(&self, embedding: &[f64]) -> Result<()> {
        let expected = self.train_index.first().map_or(0, |q| q.embedding.len());
        if embedding.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: embedding.len(),
            });
        }
        Ok(())
    }

    pub fn route(&self, query_id: &str, embedding: &[f64], responses: &[ResponseCell]) -> Result<RoutingDecision> {
        let by_model = self.responses_by_model(responses)?;
        let task = self.route_task(embedding)?;
        let centroid = clustering::nearest_centroid(embedding, &task.centroids)
            .ok_or_else(|| Error::Invariant(format!("task {} has no centroids", task.task)))?;
        let ranking = task
            .ranking(centroid.cluster_id)
            .ok_or_else(|| Error::Invariant(format!("cluster {} has no ranking", centroid.cluster_id)))?;

        let mut selected: Vec<String> = ranking
            .models
            .iter()
            .take(self.config.k_select)
            .map(|m| m.model.clone())
            .collect();
        if selected.len() < self.config.k_select {
            for m in &self.model_pool {
                if selected.len() == self.config.k_select {
                    break;
                }
                if !selected.contains(m) {
                    selected.push(m.clone());
                }
            }
        }

        let cells: Vec<&ResponseCell> = selected.iter().map(|m| by_model[m.as_str()]).collect();
        let z: Vec<f64> = cells
            .iter()
            .map(|c| self.norm_stats.z(&c.model, c.logprob))
            .collect::<Result<_>>()?;
        let answers: Vec<&str> = cells.iter().map(|c| c.answer.as_str()).collect();
        let answer = if selected.len() == 1 {
            cells[0].answer.clone()
        } else {
            // Exact score ties go to the earlier model in pool order.
            let mut order: Vec<usize> = (0..cells.len()).collect();
            order.sort_by_key(|&k| self.model_pool.iter().position(|m| *m == cells[k].model));
            let pooled: Vec<&ResponseCell> = order.iter().map(|&k| cells[k]).collect();
            let pooled_z: Vec<f64> = order.iter().map(|&k| z[k]).collect();
            consensus::aggregate_subset(&pooled, &pooled_z)
        };
        Ok(RoutingDecision {
            query_id: query_id.to_string(),
            task: task.task.clone(),
            cluster_id: centroid.cluster_id,
            scores: consensus::consensus_row(&answers, &z),
            selected,
            answer,
        })
    }

    pub fn route_record(&self, rec: &QueryRecord) -> Result<RoutingDecision> {
        self.route(&rec.query_id, &rec.embedding, &rec.responses)
    }

    fn responses_by_model<'a>(&self, responses: &'a [ResponseCell]) -> Result<BTreeMap<&'a str, &'a ResponseCell>> {
        let mut out = BTreeMap::new();
        for c in responses {
            if !self.model_pool.contains(&c.model) {
                return Err(Error::UnknownModel(c.model.clone()));
            }
            out.insert(c.model.as_str(), c);
        }
        if let Some(missing) = self.model_pool.iter().find(|m| !out.contains_key(m.as_str())) {
            return Err(Error::InvalidArgument(format!("no response from {missing}")));
        }
        Ok(out)
    }
}

impl Router for RouterArtifact {
    fn answer(&self, record: &QueryRecord) -> Result<RoutedAnswer> {
        let d = self.route_record(record)?;
        Ok(RoutedAnswer {
            answer: d.answer,
            selected: d.selected,
        })
    }
}


#[cfg(test)]
mod properties {
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::{generate_scenario, split_dataset, SyntheticSpec};
    use crate::eval::evaluate;

    fn scenario(seed: u64, n_models: usize, n_tasks: usize) -> (Dataset, Dataset) {
        let spec = SyntheticSpec {
            n_tasks,
            n_clusters_per_task: 2,
            n_models,
            n_queries: 80,
            embedding_dim: 6,
            expert_accuracy: 0.9,
            background_accuracy: 0.3,
            label_flip_rate: 0.0,
            noise_query_rate: 0.0,
            seed,
        };
        split_dataset(&generate_scenario(&spec).unwrap().dataset, 0.6, seed).unwrap()
    }

    fn shift(d: &Dataset, offsets: &[f64]) -> Dataset {
        let records = d
            .records()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                for (c, o) in r.responses.iter_mut().zip(offsets) {
                    c.logprob += o;
                }
                r
            })
            .collect();
        Dataset::new(d.model_pool().to_vec(), d.dim(), records).unwrap()
    }

    fn config(seed: u64, k_select: usize, variant: Variant) -> RouterConfig {
        RouterConfig {
            k_select,
            variant,
            seed,
            ..RouterConfig::default()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn routing_leaves_artifact_untouched_and_rankings_cover_pool(seed in any::<u64>(), m in 3..6usize, tasks in 1..3usize) {
            let (train_d, test_d) = scenario(seed, m, tasks);
            let artifact = train(&train_d, &config(seed, 3, Variant::Consensus)).unwrap();
            let before = artifact.clone();
            for rec in test_d.records() {
                artifact.route_record(rec).unwrap();
            }
            prop_assert_eq!(&artifact, &before);
            for task in &artifact.tasks {
                prop_assert_eq!(task.rankings.len(), task.centroids.len());
                for r in &task.rankings {
                    let mut ids = r.model_ids();
                    ids.sort();
                    prop_assert_eq!(&ids, &artifact.model_pool);
                    prop_assert!(r.models.iter().all(|x| x.score.is_finite()));
                }
            }
        }

        #[test]
        fn top1_and_top3_agree_where_answers_agree(seed in any::<u64>()) {
            let (train_d, test_d) = scenario(seed, 4, 1);
            let one = train(&train_d, &config(seed, 1, Variant::Consensus)).unwrap();
            let three = train(&train_d, &config(seed, 3, Variant::Consensus)).unwrap();
            let agree: Vec<usize> = (0..test_d.len())
                .filter(|&i| {
                    let r = &test_d.records()[i];
                    one.route_record(r).unwrap().answer == three.route_record(r).unwrap().answer
                })
                .collect();
            prop_assume!(!agree.is_empty());
            let sub = test_d.subset(&agree);
            prop_assert_eq!(evaluate(&one, &sub).unwrap().overall, evaluate(&three, &sub).unwrap().overall);
        }

        #[test]
        fn unanimous_pool_makes_variants_identical(seed in any::<u64>()) {
            let (train_d, _) = scenario(seed, 4, 1);
            let records = train_d
                .records()
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    let gold = r.gold.clone().unwrap();
                    for c in &mut r.responses {
                        c.answer = gold.clone();
                    }
                    r
                })
                .collect();
            let d = Dataset::new(train_d.model_pool().to_vec(), train_d.dim(), records).unwrap();
            let mut gt = train(&d, &config(seed, 3, Variant::GroundTruth)).unwrap();
            let cons = train(&d, &config(seed, 3, Variant::Consensus)).unwrap();
            gt.config.variant = Variant::Consensus;
            prop_assert_eq!(gt.tasks.iter().map(|t| &t.centroids).collect::<Vec<_>>(), cons.tasks.iter().map(|t| &t.centroids).collect::<Vec<_>>());
            let order = |a: &RouterArtifact| a.tasks.iter().flat_map(|t| t.rankings.iter().map(|r| r.model_ids())).collect::<Vec<_>>();
            prop_assert_eq!(order(&gt), order(&cons));
            let cm = consensus_scores(&d, &fit_norm_stats(&d).unwrap()).unwrap();
            let rows: Vec<usize> = (0..d.len()).collect();
            for m in 0..d.n_models() {
                prop_assert_eq!(
                    strong_set(&d, &rows, &cm, m, Variant::GroundTruth).unwrap(),
                    strong_set(&d, &rows, &cm, m, Variant::Consensus).unwrap()
                );
            }
        }

        #[test]
        fn logprob_offsets_do_not_change_decisions(seed in any::<u64>(), offsets in prop::collection::vec(-5.0..5.0f64, 4)) {
            let (train_d, test_d) = scenario(seed, 4, 1);
            let a = train(&train_d, &config(seed, 3, Variant::Consensus)).unwrap();
            let b = train(&shift(&train_d, &offsets), &config(seed, 3, Variant::Consensus)).unwrap();
            let shifted_test = shift(&test_d, &offsets);
            for (r, s) in test_d.records().iter().zip(shifted_test.records()) {
                let (x, y) = (a.route_record(r).unwrap(), b.route_record(s).unwrap());
                prop_assert_eq!(x.selected, y.selected);
                prop_assert_eq!(x.answer, y.answer);
            }
        }
    }
}
