//! Analyses of generated training data: the consensus filter that keeps
//! queries on which the strongest models agree and most others do not, and
//! Kendall's tau between model rankings derived from two datasets.

use serde::{Deserialize, Serialize};

use crate::consensus::ConsensusMatrix;
use crate::dataset::Dataset;
use crate::{Error, Result};

/// The two models with the highest mean consensus score; ties in pool order.
pub fn top2_models(consensus: &ConsensusMatrix) -> Result<[String; 2]> {
    if consensus.models.len() < 2 {
        return Err(Error::InvalidArgument("top-2 needs at least two models".into()));
    }
    let rv = ranking_vector(consensus);
    Ok([rv.models[0].model.clone(), rv.models[1].model.clone()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDiagnostic {
    pub query_id: String,
    pub majority: String,
    pub top2_aligned: bool,
    /// Models outside the top-2 that also gave the majority answer.
    pub other_supporters: usize,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub top2: [String; 2],
    pub max_other_supporters: usize,
    pub retained: Vec<String>,
    pub diagnostics: Vec<FilterDiagnostic>,
}

impl FilterReport {
    pub fn retained_indices(&self) -> Vec<usize> {
        self.diagnostics
            .iter()
            .enumerate()
            .filter(|(_, d)| d.retained)
            .map(|(i, _)| i)
            .collect()
    }
}

/// At most this many models outside the top-2 may share the majority answer.
pub const MAX_OTHER_SUPPORTERS: usize = 2;

/// Keeps a query when both top-2 models give the majority answer and at most
/// [`MAX_OTHER_SUPPORTERS`] other models do.
pub fn filter_generated(d: &Dataset, consensus: &ConsensusMatrix, top2: &[String; 2]) -> Result<FilterReport> {
    let slots = top2
        .iter()
        .map(|m| d.model_index(m).ok_or_else(|| Error::UnknownModel(m.clone())))
        .collect::<Result<Vec<_>>>()?;
    let mut diagnostics = Vec::with_capacity(d.len());
    let mut retained = Vec::new();
    for (i, rec) in d.records().iter().enumerate() {
        let majority = &consensus.majority[i];
        let agrees: Vec<bool> = rec.answers().map(|a| a == majority).collect();
        let top2_aligned = slots.iter().all(|&j| agrees[j]);
        let other_supporters = agrees
            .iter()
            .enumerate()
            .filter(|(j, a)| **a && !slots.contains(j))
            .count();
        let keep = top2_aligned && other_supporters <= MAX_OTHER_SUPPORTERS;
        if keep {
            retained.push(rec.query_id.clone());
        }
        diagnostics.push(FilterDiagnostic {
            query_id: rec.query_id.clone(),
            majority: majority.clone(),
            top2_aligned,
            other_supporters,
            retained: keep,
        });
    }
    Ok(FilterReport {
        top2: top2.clone(),
        max_other_supporters: MAX_OTHER_SUPPORTERS,
        retained,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedScore {
    pub model: String,
    pub score: f64,
}

/// Pool ordered by mean consensus score, best first, ties in pool order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingVector {
    pub models: Vec<RankedScore>,
}

impl RankingVector {
    pub fn from_order(models: &[&str]) -> Self {
        Self {
            models: models
                .iter()
                .enumerate()
                .map(|(i, m)| RankedScore {
                    model: m.to_string(),
                    score: -(i as f64),
                })
                .collect(),
        }
    }

    pub fn order(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.model.as_str()).collect()
    }

    pub fn reversed(&self) -> Self {
        Self {
            models: self.models.iter().rev().cloned().collect(),
        }
    }
}

pub fn ranking_vector(consensus: &ConsensusMatrix) -> RankingVector {
    let means = consensus.mean_scores_all();
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
    RankingVector {
        models: order
            .into_iter()
            .map(|j| RankedScore {
                model: consensus.models[j].clone(),
                score: means[j],
            })
            .collect(),
    }
}

/// Kendall's tau-a between two strict rankings of the same pool.
///
/// With the models of `a` relabelled by their position, `b` becomes a
/// permutation; tau is `(pairs - 2 * inversions) / pairs`, rounded once.
pub fn kendall_tau(a: &RankingVector, b: &RankingVector) -> Result<f64> {
    let n = a.models.len();
    if n != b.models.len() {
        return Err(Error::InvalidArgument(format!(
            "rankings cover {} and {} models",
            n,
            b.models.len()
        )));
    }
    let position_in_a = |m: &str| {
        a.models
            .iter()
            .position(|x| x.model == m)
            .ok_or_else(|| Error::UnknownModel(m.to_string()))
    };
    let perm: Vec<usize> = b
        .models
        .iter()
        .map(|m| position_in_a(&m.model))
        .collect::<Result<_>>()?;
    let mut seen = vec![false; n];
    for &p in &perm {
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument(format!(
                "model {} ranked twice",
                a.models[p].model
            )));
        }
    }
    if n < 2 {
        return Ok(1.0);
    }
    let inversions: usize = (0..n)
        .map(|i| perm[i + 1..].iter().filter(|&&q| q < perm[i]).count())
        .sum();
    let pairs = n * (n - 1) / 2;
    Ok((pairs as f64 - 2.0 * inversions as f64) / pairs as f64)
}


#[cfg(test)]
mod properties {
    use proptest::prelude::*;

    use super::*;
    use crate::consensus::{consensus_scores, fit_norm_stats};
    use crate::dataset::tests::arb_dataset;
    use crate::dataset::ResponseCell;

    fn ranking(order: &[usize]) -> RankingVector {
        let names: Vec<String> = order.iter().map(|j| format!("m{j}")).collect();
        RankingVector::from_order(&names.iter().map(String::as_str).collect::<Vec<_>>())
    }

    fn perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
        Just((0..n).collect::<Vec<_>>()).prop_shuffle()
    }

    proptest! {
        #[test]
        fn tau_is_symmetric_and_bounded((a, b) in (2..9usize).prop_flat_map(|n| (perm(n), perm(n)))) {
            let (ra, rb) = (ranking(&a), ranking(&b));
            let t = kendall_tau(&ra, &rb).unwrap();
            prop_assert_eq!(t, kendall_tau(&rb, &ra).unwrap());
            prop_assert!((-1.0..=1.0).contains(&t));
            prop_assert_eq!(kendall_tau(&ra, &ra).unwrap(), 1.0);
            prop_assert_eq!(kendall_tau(&ra, &ra.reversed()).unwrap(), -1.0);
        }

        #[test]
        fn filter_decisions_recount(d in arb_dataset(3..=7, 1..=20)) {
            let cm = consensus_scores(&d, &fit_norm_stats(&d).unwrap()).unwrap();
            let top2 = top2_models(&cm).unwrap();
            let rep = filter_generated(&d, &cm, &top2).unwrap();
            for (i, rec) in d.records().iter().enumerate() {
                let maj = &cm.majority[i];
                let mut top_ok = 0;
                let mut others = 0;
                for c in &rec.responses {
                    if &c.answer == maj {
                        if top2.contains(&c.model) { top_ok += 1 } else { others += 1 }
                    }
                }
                prop_assert_eq!(rep.diagnostics[i].retained, top_ok == 2 && others <= MAX_OTHER_SUPPORTERS);
            }
        }

        #[test]
        fn abstaining_model_never_rescues(d in arb_dataset(3..=6, 1..=15), lp in -6.0..0.0f64) {
            let cm = consensus_scores(&d, &fit_norm_stats(&d).unwrap()).unwrap();
            let top2 = top2_models(&cm).unwrap();
            let before = filter_generated(&d, &cm, &top2).unwrap();

            let extra = format!("m{}", d.n_models() + 1);
            let mut pool = d.model_pool().to_vec();
            pool.push(extra.clone());
            let records = d
                .records()
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.responses.push(ResponseCell::new(extra.clone(), "abstain", lp));
                    r
                })
                .collect();
            let wider = Dataset::new(pool, d.dim(), records).unwrap();
            let cm2 = consensus_scores(&wider, &fit_norm_stats(&wider).unwrap()).unwrap();
            let after = filter_generated(&wider, &cm2, &top2).unwrap();
            for (b, a) in before.diagnostics.iter().zip(&after.diagnostics) {
                prop_assert!(b.retained || !a.retained);
            }
        }
    }
}
