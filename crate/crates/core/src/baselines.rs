//! Comparison routers: fixed top-k, random, per-query oracle, and the
//! cluster-accuracy router that scores models per k-means cluster against
//! answer labels.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::kmeans;
use crate::dataset::{Dataset, QueryRecord};
use crate::eval::{RoutedAnswer, Router};
use crate::{seed, vector, Error, Result};

pub const AVENGERS_K: usize = 64;
const VOTE_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticKind {
    Top1,
    Top3Vote,
    Random1,
    Random3Vote,
    Oracle,
}

impl StaticKind {
    fn needs_ranking(self) -> bool {
        matches!(self, StaticKind::Top1 | StaticKind::Top3Vote)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticRouter {
    pub kind: StaticKind,
    pub model_pool: Vec<String>,
    /// Models by validation accuracy, best first. Empty for kinds that do
    /// not use it.
    pub ranking: Vec<String>,
    pub seed: u64,
}

/// Plurality over answers listed in priority order; ties go to the answer
/// whose first supporter comes earliest.
pub fn plurality<'a>(answers: &[&'a str]) -> &'a str {
    let mut best: Option<(&str, usize)> = None;
    for (k, a) in answers.iter().enumerate() {
        if answers[..k].contains(a) {
            continue;
        }
        let votes = answers.iter().filter(|b| *b == a).count();
        if best.is_none_or(|(_, v)| votes > v) {
            best = Some((a, votes));
        }
    }
    best.expect("plurality over no answers").0
}

/// Pool indices sorted by accuracy against `labels`, ties in pool order.
fn rank_by_label_accuracy(d: &Dataset, rows: &[usize], labels: &[&str]) -> Vec<(usize, f64)> {
    let mut hits = vec![0usize; d.n_models()];
    for &i in rows {
        for (h, a) in hits.iter_mut().zip(d.records()[i].answers()) {
            *h += usize::from(a == labels[i]);
        }
    }
    let n = rows.len().max(1) as f64;
    let mut ranked: Vec<(usize, f64)> = hits.into_iter().map(|h| h as f64 / n).enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}

/// Fits a static router on the gold answers of `validation`.
pub fn fit_static(validation: &Dataset, kind: StaticKind, seed: u64) -> Result<StaticRouter> {
    if kind.needs_ranking() {
        let labels = validation.gold_labels()?;
        fit_static_on_labels(validation, &labels, kind, seed)
    } else {
        fit_static_on_labels(validation, &[], kind, seed)
    }
}

/// Fits a static router on arbitrary labels (e.g. generated answers).
pub fn fit_static_on_labels(d: &Dataset, labels: &[&str], kind: StaticKind, seed: u64) -> Result<StaticRouter> {
    let ranking = if kind.needs_ranking() {
        if labels.len() != d.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} records",
                labels.len(),
                d.len()
            )));
        }
        let rows: Vec<usize> = (0..d.len()).collect();
        rank_by_label_accuracy(d, &rows, labels)
            .into_iter()
            .map(|(j, _)| d.model_pool()[j].clone())
            .collect()
    } else {
        Vec::new()
    };
    Ok(StaticRouter {
        kind,
        model_pool: d.model_pool().to_vec(),
        ranking,
        seed,
    })
}

impl StaticRouter {
    fn cell<'a>(&self, rec: &'a QueryRecord, model: &str) -> Result<&'a str> {
        rec.responses
            .iter()
            .find(|c| c.model == model)
            .map(|c| c.answer.as_str())
            .ok_or_else(|| Error::UnknownModel(model.to_string()))
    }

    /// Per-query generator: depends only on the router seed and query id.
    fn query_rng(&self, query_id: &str) -> rand_chacha::ChaCha8Rng {
        seed::rng(seed::derive(self.seed, &[seed::fnv1a(query_id.as_bytes())]))
    }

    pub fn route(&self, rec: &QueryRecord, gold: Option<&str>) -> Result<RoutedAnswer> {
        let m = self.model_pool.len();
        let selected: Vec<String> = match self.kind {
            StaticKind::Top1 => self.ranking.iter().take(1).cloned().collect(),
            StaticKind::Top3Vote => self.ranking.iter().take(VOTE_SIZE).cloned().collect(),
            StaticKind::Random1 => {
                let j = self.query_rng(&rec.query_id).random_range(0..m);
                vec![self.model_pool[j].clone()]
            }
            StaticKind::Random3Vote => index::sample(&mut self.query_rng(&rec.query_id), m, VOTE_SIZE.min(m))
                .into_iter()
                .map(|j| self.model_pool[j].clone())
                .collect(),
            StaticKind::Oracle => {
                let gold = gold.ok_or_else(|| Error::MissingGold(rec.query_id.clone()))?;
                let hit = rec.responses.iter().find(|c| c.answer == gold);
                let cell = hit.unwrap_or(&rec.responses[0]);
                return Ok(RoutedAnswer {
                    answer: cell.answer.clone(),
                    selected: vec![cell.model.clone()],
                });
            }
        };
        if selected.is_empty() {
            return Err(Error::InvalidArgument(format!("{:?} router has no ranking", self.kind)));
        }
        let answers: Vec<&str> = selected.iter().map(|m| self.cell(rec, m)).collect::<Result<_>>()?;
        Ok(RoutedAnswer {
            answer: plurality(&answers).to_string(),
            selected,
        })
    }
}

impl Router for StaticRouter {
    fn answer(&self, record: &QueryRecord) -> Result<RoutedAnswer> {
        self.route(record, record.gold.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvengersCluster {
    pub centroid: Vec<f64>,
    /// Accuracy of every pool model on the cluster's training queries.
    pub accuracy: Vec<f64>,
    /// Up to three models, best first.
    pub top: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvengersRouter {
    pub model_pool: Vec<String>,
    pub clusters: Vec<AvengersCluster>,
    pub seed: u64,
}

/// k-means with `k = min(AVENGERS_K, n)` over the training embeddings.
pub fn fit_avengers(train: &Dataset, labels: &[&str], seed: u64) -> Result<AvengersRouter> {
    fit_avengers_with_k(train, labels, AVENGERS_K, seed)
}

pub fn fit_avengers_with_k(train: &Dataset, labels: &[&str], k: usize, seed: u64) -> Result<AvengersRouter> {
    if labels.len() != train.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} records",
            labels.len(),
            train.len()
        )));
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument("cannot fit on an empty dataset".into()));
    }
    let vectors: Vec<&[f64]> = train.records().iter().map(|r| r.embedding.as_slice()).collect();
    let run = kmeans(&vectors, k.min(vectors.len()), seed)?;
    let clusters = run
        .centroids
        .iter()
        .enumerate()
        .map(|(c, centroid)| {
            let rows: Vec<usize> = (0..vectors.len()).filter(|&i| run.assignment[i] == c).collect();
            let ranked = rank_by_label_accuracy(train, &rows, labels);
            let mut accuracy = vec![0.0; train.n_models()];
            for &(j, a) in &ranked {
                accuracy[j] = a;
            }
            AvengersCluster {
                centroid: centroid.clone(),
                accuracy,
                top: ranked
                    .iter()
                    .take(VOTE_SIZE)
                    .map(|&(j, _)| train.model_pool()[j].clone())
                    .collect(),
            }
        })
        .collect();
    Ok(AvengersRouter {
        model_pool: train.model_pool().to_vec(),
        clusters,
        seed,
    })
}

impl AvengersRouter {
    pub fn route(&self, embedding: &[f64], rec: &QueryRecord) -> Result<RoutedAnswer> {
        let dim = self.clusters[0].centroid.len();
        if embedding.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: embedding.len(),
            });
        }
        let (c, _) = vector::nearest_by_dot(
            embedding,
            self.clusters.iter().enumerate().map(|(i, c)| (i, &c.centroid)),
        )
        .expect("at least one cluster");
        let top = &self.clusters[c].top;
        let answers: Vec<&str> = top
            .iter()
            .map(|m| {
                rec.responses
                    .iter()
                    .find(|cell| &cell.model == m)
                    .map(|cell| cell.answer.as_str())
                    .ok_or_else(|| Error::UnknownModel(m.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(RoutedAnswer {
            answer: plurality(&answers).to_string(),
            selected: top.clone(),
        })
    }
}

impl Router for AvengersRouter {
    fn answer(&self, record: &QueryRecord) -> Result<RoutedAnswer> {
        self.route(&record.embedding, record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests::record;

    fn pool() -> Vec<String> {
        vec!["m1".into(), "m2".into(), "m3".into()]
    }

    /// Ten queries; m1 is right on 9, m2 on 5, m3 on 7.
    fn validation() -> Dataset {
        let recs = (0..10)
            .map(|i| {
                let ans = |ok: bool| if ok { "g" } else { "w" };
                let mut r = record(
                    &format!("q{i}"),
                    "t",
                    &[1.0, 0.1 * i as f64],
                    &[
                        ("m1", ans(i < 9), -1.0),
                        ("m2", ans(i < 5), -1.0),
                        ("m3", ans(i < 7), -1.0),
                    ],
                );
                r.gold = Some("g".into());
                r
            })
            .collect();
        Dataset::new(pool(), 2, recs).unwrap()
    }

    #[test]
    fn plurality_tie_rules() {
        assert_eq!(plurality(&["a", "a", "b"]), "a");
        assert_eq!(plurality(&["b", "a", "a"]), "a");
        assert_eq!(plurality(&["a", "b", "c"]), "a");
        assert_eq!(plurality(&["c", "b", "a"]), "c");
    }

    #[test]
    fn static_ranking_by_recounted_accuracy() {
        let d = validation();
        let top1 = fit_static(&d, StaticKind::Top1, 0).unwrap();
        assert_eq!(top1.ranking, ["m1", "m3", "m2"]);
        let rec = &d.records()[9];
        assert_eq!(top1.route(rec, None).unwrap().selected, ["m1"]);
        let top3 = fit_static(&d, StaticKind::Top3Vote, 0).unwrap();
        assert_eq!(top3.route(rec, None).unwrap().selected, ["m1", "m3", "m2"]);
    }

    #[test]
    fn top_kinds_need_gold() {
        let d = validation().with_gold(&vec![None; 10]).unwrap();
        assert!(matches!(
            fit_static(&d, StaticKind::Top1, 0),
            Err(Error::MissingGold(_))
        ));
        assert!(fit_static(&d, StaticKind::Random1, 0).is_ok());
        assert!(fit_static(&d, StaticKind::Oracle, 0).is_ok());
    }

    #[test]
    fn random_routers_replay() {
        let d = validation();
        let r = fit_static(&d, StaticKind::Random1, 9).unwrap();
        let a: Vec<_> = d.records().iter().map(|x| r.route(x, None).unwrap()).collect();
        let b: Vec<_> = d.records().iter().map(|x| r.route(x, None).unwrap()).collect();
        assert_eq!(a, b);
        let r3 = fit_static(&d, StaticKind::Random3Vote, 9).unwrap();
        let sel = r3.route(&d.records()[0], None).unwrap().selected;
        assert_eq!(sel.len(), 3);
    }

    #[test]
    fn oracle_uses_gold_when_available() {
        let d = validation();
        let o = fit_static(&d, StaticKind::Oracle, 0).unwrap();
        assert_eq!(o.route(&d.records()[8], Some("g")).unwrap().answer, "g");
        assert_eq!(o.route(&d.records()[8], Some("zz")).unwrap().answer, "g");
        assert!(o.route(&d.records()[8], None).is_err());
    }

    #[test]
    fn avengers_single_cluster_ranking() {
        // Accuracies 0.9, 0.8, 0.7, 0.1 over ten queries in one cluster.
        let models = ["m1", "m2", "m3", "m4"];
        let right = [9, 8, 7, 1];
        let recs = (0..10)
            .map(|i| {
                let cells: Vec<(&str, &str, f64)> = models
                    .iter()
                    .zip(right)
                    .map(|(m, r)| (*m, if i < r { "g" } else { "w" }, -1.0))
                    .collect();
                record(&format!("q{i}"), "t", &[1.0, 0.01 * i as f64], &cells)
            })
            .collect();
        let d = Dataset::new(models.map(String::from).to_vec(), 2, recs).unwrap();
        let labels = vec!["g"; 10];
        let r = fit_avengers_with_k(&d, &labels, 1, 0).unwrap();
        assert_eq!(r.clusters[0].top, ["m1", "m2", "m3"]);
        assert_eq!(r.clusters[0].accuracy, vec![0.9, 0.8, 0.7, 0.1]);

        let capped = fit_avengers(&d, &labels, 0).unwrap();
        assert_eq!(capped.clusters.len(), 10);
        assert_eq!(capped, fit_avengers(&d, &labels, 0).unwrap());
        assert!(matches!(
            capped.route(&[1.0, 0.0, 0.0], &d.records()[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
