//! Accuracy evaluation shared by every router.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, QueryRecord};
use crate::Result;

/// The answer a router produced for one query, and which models it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedAnswer {
    pub answer: String,
    pub selected: Vec<String>,
}

pub trait Router {
    fn answer(&self, record: &QueryRecord) -> Result<RoutedAnswer>;
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl Accuracy {
    fn add(&mut self, hit: bool) {
        self.total += 1;
        self.correct += usize::from(hit);
        self.accuracy = self.correct as f64 / self.total as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub task: String,
    pub selected: Vec<String>,
    pub answer: String,
    pub gold: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: Accuracy,
    pub per_task: BTreeMap<String, Accuracy>,
    pub queries: Vec<QueryOutcome>,
}

/// Fraction of `test` queries on which `router` returns the gold answer.
pub fn evaluate(router: &impl Router, test: &Dataset) -> Result<EvalReport> {
    let gold = test.gold_labels()?;
    let mut overall = Accuracy::default();
    let mut per_task: BTreeMap<String, Accuracy> = BTreeMap::new();
    let mut queries = Vec::with_capacity(test.len());
    for (rec, gold) in test.records().iter().zip(gold) {
        let routed = router.answer(rec)?;
        let correct = routed.answer == gold;
        overall.add(correct);
        per_task.entry(rec.task.clone()).or_default().add(correct);
        queries.push(QueryOutcome {
            query_id: rec.query_id.clone(),
            task: rec.task.clone(),
            selected: routed.selected,
            answer: routed.answer,
            gold: gold.to_string(),
            correct,
        });
    }
    Ok(EvalReport {
        overall,
        per_task,
        queries,
    })
}

/// Accuracy of every pool model answering on its own, in pool order.
pub fn single_model_accuracies(d: &Dataset) -> Result<Vec<f64>> {
    let gold = d.gold_labels()?;
    let mut hits = vec![0usize; d.n_models()];
    for (rec, g) in d.records().iter().zip(&gold) {
        for (h, a) in hits.iter_mut().zip(rec.answers()) {
            *h += usize::from(a == *g);
        }
    }
    let n = d.len().max(1) as f64;
    Ok(hits.into_iter().map(|h| h as f64 / n).collect())
}
