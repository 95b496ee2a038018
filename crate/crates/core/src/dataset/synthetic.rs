//! Planted-skill scenarios: queries scattered around per-task cluster
//! directions, with one designated expert model per cluster.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, QueryRecord, ResponseCell};
use crate::{seed, vector, Error, Result};

/// The answer alphabet. Every gold answer is one of these and every wrong
/// answer is one of the remaining distractors.
pub const ANSWER_OPTIONS: [&str; 5] = ["a", "b", "c", "d", "e"];

/// Norm of the isotropic jitter added to a cluster direction.
const CLUSTER_SPREAD: f64 = 0.5;
/// Per-model logprob offset; z-normalization has to undo it.
const MODEL_OFFSET_STEP: f64 = -0.25;
const CORRECT_LOGPROB: (f64, f64) = (-0.5, 0.25);
const WRONG_LOGPROB: (f64, f64) = (-1.5, 0.5);

// Independent RNG streams, so flipping labels never perturbs the dataset.
const STREAM_DIRECTIONS: u64 = 1;
const STREAM_QUERIES: u64 = 2;
const STREAM_FLIPS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_tasks: usize,
    pub n_clusters_per_task: usize,
    pub n_models: usize,
    pub n_queries: usize,
    pub embedding_dim: usize,
    pub expert_accuracy: f64,
    pub background_accuracy: f64,
    #[serde(default)]
    pub label_flip_rate: f64,
    /// Fraction of queries on which every model answers uniformly at random.
    #[serde(default)]
    pub noise_query_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_tasks", self.n_tasks),
            ("n_clusters_per_task", self.n_clusters_per_task),
            ("n_models", self.n_models),
            ("n_queries", self.n_queries),
            ("embedding_dim", self.embedding_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.n_models < 3 {
            return Err(Error::InvalidArgument("n_models must be at least 3".into()));
        }
        let probs = [
            ("expert_accuracy", self.expert_accuracy),
            ("background_accuracy", self.background_accuracy),
            ("label_flip_rate", self.label_flip_rate),
            ("noise_query_rate", self.noise_query_rate),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.expert_accuracy <= self.background_accuracy {
            return Err(Error::InvalidArgument(
                "expert_accuracy must exceed background_accuracy".into(),
            ));
        }
        Ok(())
    }

    pub fn n_regions(&self) -> usize {
        self.n_tasks * self.n_clusters_per_task
    }
}

/// One planted cluster: its direction and the model that excels on it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedRegion {
    pub task: String,
    pub cluster: usize,
    pub direction: Vec<f64>,
    pub expert: String,
}

/// A generated dataset together with the ground truth it was planted from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario {
    pub dataset: Dataset,
    pub regions: Vec<PlantedRegion>,
    /// Region index of every record.
    pub region_of: Vec<usize>,
    /// Whether every model answered the record at random.
    pub noisy: Vec<bool>,
    /// Gold labels with `label_flip_rate` of them replaced by a distractor;
    /// `None` when the flip rate is zero.
    pub flipped_gold: Option<Vec<String>>,
}

impl SyntheticScenario {
    /// The dataset with its gold answers swapped for the flipped copy.
    pub fn dataset_with_flipped_gold(&self) -> Option<Dataset> {
        let labels: Vec<Option<String>> = self.flipped_gold.as_ref()?.iter().cloned().map(Some).collect();
        Some(self.dataset.with_gold(&labels).expect("one label per record"))
    }

    pub fn expert_of_record(&self, i: usize) -> &str {
        &self.regions[self.region_of[i]].expert
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    generate_scenario(spec).map(|s| s.dataset)
}

pub fn generate_scenario(spec: &SyntheticSpec) -> Result<SyntheticScenario> {
    spec.validate()?;
    let dim = spec.embedding_dim;
    let pool: Vec<String> = (0..spec.n_models).map(|j| format!("m{j}")).collect();

    let mut dir_rng = seed::rng(seed::derive(spec.seed, &[STREAM_DIRECTIONS]));
    let regions: Vec<PlantedRegion> = (0..spec.n_regions())
        .map(|g| PlantedRegion {
            task: format!("t{}", g / spec.n_clusters_per_task),
            cluster: g % spec.n_clusters_per_task,
            direction: random_unit(&mut dir_rng, dim),
            expert: pool[g % spec.n_models].clone(),
        })
        .collect();

    let correct_lp = Normal::new(CORRECT_LOGPROB.0, CORRECT_LOGPROB.1).expect("valid normal");
    let wrong_lp = Normal::new(WRONG_LOGPROB.0, WRONG_LOGPROB.1).expect("valid normal");
    let jitter = CLUSTER_SPREAD / (dim as f64).sqrt();

    let mut rng = seed::rng(seed::derive(spec.seed, &[STREAM_QUERIES]));
    let width = spec.n_queries.to_string().len();
    let mut records = Vec::with_capacity(spec.n_queries);
    let mut region_of = Vec::with_capacity(spec.n_queries);
    let mut noisy = Vec::with_capacity(spec.n_queries);
    for i in 0..spec.n_queries {
        let g = i % regions.len();
        let region = &regions[g];
        let raw: Vec<f64> = region
            .direction
            .iter()
            .map(|c| c + jitter * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let embedding = vector::normalized(&raw).unwrap_or_else(|| region.direction.clone());

        let gold = rng.random_range(0..ANSWER_OPTIONS.len());
        let is_noise = rng.random_bool(spec.noise_query_rate);
        let responses = pool
            .iter()
            .enumerate()
            .map(|(j, model)| {
                let answer = if is_noise {
                    rng.random_range(0..ANSWER_OPTIONS.len())
                } else {
                    let p = if *model == region.expert {
                        spec.expert_accuracy
                    } else {
                        spec.background_accuracy
                    };
                    if rng.random_bool(p) {
                        gold
                    } else {
                        distractor(&mut rng, gold)
                    }
                };
                let dist = if answer == gold && !is_noise {
                    &correct_lp
                } else {
                    &wrong_lp
                };
                let logprob = dist.sample(&mut rng) + MODEL_OFFSET_STEP * j as f64;
                ResponseCell::new(model.clone(), ANSWER_OPTIONS[answer], logprob)
            })
            .collect();

        records.push(QueryRecord {
            query_id: format!("q{i:0width$}"),
            task: region.task.clone(),
            text: format!("synthetic query {i} ({} cluster {})", region.task, region.cluster),
            embedding,
            gold: Some(ANSWER_OPTIONS[gold].to_string()),
            responses,
        });
        region_of.push(g);
        noisy.push(is_noise);
    }

    let flipped_gold = (spec.label_flip_rate > 0.0).then(|| {
        let mut flip_rng = seed::rng(seed::derive(spec.seed, &[STREAM_FLIPS]));
        records
            .iter()
            .map(|r| {
                let gold = r.gold.as_deref().expect("synthetic records carry gold");
                let g = ANSWER_OPTIONS
                    .iter()
                    .position(|o| *o == gold)
                    .expect("gold in alphabet");
                if flip_rng.random_bool(spec.label_flip_rate) {
                    ANSWER_OPTIONS[distractor(&mut flip_rng, g)].to_string()
                } else {
                    gold.to_string()
                }
            })
            .collect()
    });

    Ok(SyntheticScenario {
        dataset: Dataset::new(pool, dim, records)?,
        regions,
        region_of,
        noisy,
        flipped_gold,
    })
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = vector::normalized(&v) {
            return u;
        }
    }
}

/// Uniform draw from the options other than `gold`.
fn distractor(rng: &mut ChaCha8Rng, gold: usize) -> usize {
    let k = rng.random_range(0..ANSWER_OPTIONS.len() - 1);
    if k >= gold {
        k + 1
    } else {
        k
    }
}
