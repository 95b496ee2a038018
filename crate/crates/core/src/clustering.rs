//! Skill-centroid geometry on the unit sphere.
//!
//! All vectors here are unit-norm query embeddings, so cosine similarity is a
//! plain dot product and Euclidean nearest-centroid coincides with cosine
//! nearest-centroid.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seed, vector, Error, Result};

pub type ClusterId = u32;

pub const MAX_KMEANS_ITERATIONS: usize = 100;
pub const DEFAULT_K_RANGE: RangeInclusive<usize> = 2..=5;
pub const DEFAULT_SILHOUETTE_THRESHOLD: f64 = 0.05;
pub const DEFAULT_MERGE_TAU: f64 = 0.15;
pub const DEFAULT_JACCARD_THRESHOLD: f64 = 0.95;
/// Size of the expert sets compared when pruning.
pub const PRUNE_TOP_N: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub cluster_id: ClusterId,
    pub task: String,
    pub vector: Vec<f64>,
    pub seed_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    /// Centroid index of every input vector.
    pub assignment: Vec<usize>,
    pub iterations: usize,
    /// Sum of cosine distances to the assigned centroid, recorded after the
    /// initial assignment and after every Lloyd iteration.
    pub objective: Vec<f64>,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Spherical k-means: k-means++ seeding, Lloyd iterations with centroids
/// renormalized after every update, stop on stable assignments or after
/// [`MAX_KMEANS_ITERATIONS`].
pub fn kmeans<V: AsRef<[f64]>>(vectors: &[V], k: usize, seed: u64) -> Result<KMeansResult> {
    let n = vectors.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} with {n} vectors")));
    }
    let dim = vectors[0].as_ref().len();
    let mut rng = seed::rng(seed);
    let mut centroids = plus_plus_init(vectors, k, &mut rng);
    let mut assignment = nearest_all(vectors, &centroids);
    let mut objective = vec![total_distance(vectors, &centroids, &assignment)];
    let mut iterations = 0;

    while iterations < MAX_KMEANS_ITERATIONS {
        iterations += 1;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &a) in assignment.iter().enumerate() {
            members[a].push(i);
        }
        for (c, idx) in members.iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let sum = vector::weighted_sum(dim, idx.iter().map(|&i| (1.0, vectors[i].as_ref())));
            if let Some(u) = vector::normalized(&sum) {
                centroids[c] = u;
            }
        }
        reseed_empty(vectors, &mut centroids, &mut assignment, &mut members);

        let next = nearest_all(vectors, &centroids);
        let stable = next == assignment;
        assignment = next;
        objective.push(total_distance(vectors, &centroids, &assignment));
        if stable {
            break;
        }
    }

    Ok(KMeansResult {
        centroids,
        assignment,
        iterations,
        objective,
    })
}

fn plus_plus_init<V: AsRef<[f64]>>(vectors: &[V], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![vectors[first].as_ref().to_vec()];
    let mut d2: Vec<f64> = vectors
        .iter()
        .map(|v| vector::squared_euclidean(v.as_ref(), &centroids[0]))
        .collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if *w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` a hair below `target`.
            pick.unwrap_or_else(|| d2.iter().rposition(|w| *w > 0.0).expect("positive total"))
        } else {
            // Every remaining point duplicates a chosen one.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        let c = vectors[pick].as_ref().to_vec();
        for (w, v) in d2.iter_mut().zip(vectors) {
            *w = w.min(vector::squared_euclidean(v.as_ref(), &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Moves every empty centroid onto the point farthest from its own centroid,
/// taking points only from clusters that can spare one.
fn reseed_empty<V: AsRef<[f64]>>(
    vectors: &[V],
    centroids: &mut [Vec<f64>],
    assignment: &mut [usize],
    members: &mut [Vec<usize>],
) {
    for c in 0..centroids.len() {
        if !members[c].is_empty() {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, v) in vectors.iter().enumerate() {
            let a = assignment[i];
            if members[a].len() < 2 {
                continue;
            }
            let d = vector::cosine_distance(v.as_ref(), &centroids[a]);
            if far.is_none_or(|(_, fd)| d > fd) {
                far = Some((i, d));
            }
        }
        let Some((p, _)) = far else { return };
        let from = assignment[p];
        members[from].retain(|&i| i != p);
        members[c].push(p);
        assignment[p] = c;
        centroids[c] = vectors[p].as_ref().to_vec();
    }
}

fn nearest_all<V: AsRef<[f64]>>(vectors: &[V], centroids: &[Vec<f64>]) -> Vec<usize> {
    vectors
        .iter()
        .map(|v| {
            vector::nearest_by_dot(v.as_ref(), centroids.iter().enumerate())
                .expect("at least one centroid")
                .0
        })
        .collect()
}

fn total_distance<V: AsRef<[f64]>>(vectors: &[V], centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    vectors
        .iter()
        .zip(assignment)
        .map(|(v, &a)| vector::cosine_distance(v.as_ref(), &centroids[a]))
        .sum()
}

/// Mean silhouette under cosine distance. Points in singleton clusters score
/// 0, as do all points when fewer than two clusters are populated.
pub fn silhouette<V: AsRef<[f64]>>(vectors: &[V], assignment: &[usize], k: usize) -> f64 {
    let n = vectors.len();
    if n == 0 {
        return 0.0;
    }
    let mut sizes = vec![0usize; k];
    for &a in assignment {
        sizes[a] += 1;
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        let own = assignment[i];
        if sizes[own] < 2 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[assignment[j]] += vector::cosine_distance(vectors[i].as_ref(), vectors[j].as_ref());
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            let denom = a.max(b);
            if denom > 0.0 {
                total += (b - a) / denom;
            }
        }
    }
    total / n as f64
}

/// Outcome of silhouette-driven K selection.
#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Mean silhouette of every K that was tried.
    pub silhouettes: Vec<(usize, f64)>,
}

impl KSelection {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Picks the K in `k_range` with the highest mean silhouette, falling back to
/// a single centroid unless that silhouette exceeds `threshold`.
pub fn select_k<V: AsRef<[f64]>>(
    vectors: &[V],
    k_range: RangeInclusive<usize>,
    threshold: f64,
    seed: u64,
) -> Result<KSelection> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::InvalidArgument("select_k on an empty set".into()));
    }
    let mut silhouettes = Vec::new();
    let mut best: Option<(f64, KMeansResult)> = None;
    if n >= 2 {
        for k in k_range.filter(|&k| k >= 2 && k <= n) {
            let run = kmeans(vectors, k, seed)?;
            let s = silhouette(vectors, &run.assignment, k);
            silhouettes.push((k, s));
            if best.as_ref().is_none_or(|(bs, _)| s > *bs) {
                best = Some((s, run));
            }
        }
    }
    let run = match best {
        Some((s, run)) if s > threshold => run,
        _ => kmeans(vectors, 1, seed)?,
    };
    Ok(KSelection {
        k: run.centroids.len(),
        centroids: run.centroids,
        assignment: run.assignment,
        silhouettes,
    })
}

/// Greedy agglomeration: the closest pair under cosine distance `tau` is
/// merged first, until no pair qualifies. A merged centroid is the
/// renormalized seed-count-weighted mean of all centroids folded into it and
/// keeps the lower cluster id.
pub fn merge_centroids(centroids: Vec<Centroid>, tau: f64) -> Vec<Centroid> {
    let mut items: Vec<(Centroid, Vec<f64>)> = centroids
        .into_iter()
        .map(|c| {
            let w = c.seed_count as f64;
            let sum = c.vector.iter().map(|x| w * x).collect();
            (c, sum)
        })
        .collect();

    loop {
        let mut best: Option<(f64, (ClusterId, ClusterId), usize, usize)> = None;
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                let d = vector::cosine_distance(&items[i].0.vector, &items[j].0.vector);
                if d >= tau {
                    continue;
                }
                let (a, b) = (items[i].0.cluster_id, items[j].0.cluster_id);
                let key = (a.min(b), a.max(b));
                let better = match &best {
                    None => true,
                    Some((bd, bk, _, _)) => d < *bd || (d == *bd && key < *bk),
                };
                if better {
                    best = Some((d, key, i, j));
                }
            }
        }
        let Some((_, _, i, j)) = best else { break };
        let (other, other_sum) = items.remove(j);
        let (keep, sum) = &mut items[i];
        for (s, o) in sum.iter_mut().zip(&other_sum) {
            *s += o;
        }
        keep.seed_count += other.seed_count;
        keep.cluster_id = keep.cluster_id.min(other.cluster_id);
        if let Some(u) = vector::normalized(sum) {
            keep.vector = u;
        }
    }
    items.into_iter().map(|(c, _)| c).collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterAssignment {
    /// Cluster of every query, by position.
    pub cluster_of: Vec<ClusterId>,
    pub members: BTreeMap<ClusterId, Vec<usize>>,
}

impl ClusterAssignment {
    pub fn size(&self, id: ClusterId) -> usize {
        self.members.get(&id).map_or(0, Vec::len)
    }
}

/// Nearest centroid by cosine similarity, ties to the lowest cluster id.
pub fn nearest_centroid<'a>(query: &[f64], centroids: &'a [Centroid]) -> Option<&'a Centroid> {
    let (id, _) = vector::nearest_by_dot(query, centroids.iter().map(|c| (c.cluster_id, &c.vector)))?;
    centroids.iter().find(|c| c.cluster_id == id)
}

pub fn assign_queries<V: AsRef<[f64]>>(vectors: &[V], centroids: &[Centroid]) -> Result<ClusterAssignment> {
    if centroids.is_empty() {
        return Err(Error::InvalidArgument("no centroids to assign to".into()));
    }
    let mut out = ClusterAssignment::default();
    for (i, v) in vectors.iter().enumerate() {
        let c = nearest_centroid(v.as_ref(), centroids).expect("non-empty");
        out.cluster_of.push(c.cluster_id);
        out.members.entry(c.cluster_id).or_default().push(i);
    }
    Ok(out)
}

pub fn jaccard<T: Ord>(a: &[T], b: &[T]) -> f64 {
    let sa: std::collections::BTreeSet<&T> = a.iter().collect();
    let sb: std::collections::BTreeSet<&T> = b.iter().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub centroids: Vec<Centroid>,
    pub assignment: ClusterAssignment,
    pub dropped: Vec<ClusterId>,
}

/// Drops centroids whose top-[`PRUNE_TOP_N`] expert sets are near-duplicates
/// of a larger centroid's, then reassigns every query to the survivors and
/// recenters each survivor on its members. Centroids left empty are dropped.
pub fn prune_centroids<V: AsRef<[f64]>>(
    vectors: &[V],
    centroids: &[Centroid],
    assignment: &ClusterAssignment,
    rankings: &BTreeMap<ClusterId, Vec<String>>,
    jaccard_threshold: f64,
) -> Result<PruneOutcome> {
    let top = |id: ClusterId| -> Result<&[String]> {
        let r = rankings
            .get(&id)
            .ok_or_else(|| Error::InvalidArgument(format!("no ranking for cluster {id}")))?;
        Ok(&r[..r.len().min(PRUNE_TOP_N)])
    };

    let mut order: Vec<&Centroid> = centroids.iter().collect();
    order.sort_by_key(|c| (std::cmp::Reverse(assignment.size(c.cluster_id)), c.cluster_id));
    let mut kept: Vec<ClusterId> = Vec::new();
    let mut dropped = Vec::new();
    for c in order {
        let mine = top(c.cluster_id)?;
        let mut redundant = false;
        for &k in &kept {
            if jaccard(mine, top(k)?) >= jaccard_threshold {
                redundant = true;
                break;
            }
        }
        if redundant {
            dropped.push(c.cluster_id);
        } else {
            kept.push(c.cluster_id);
        }
    }

    let survivors: Vec<Centroid> = centroids
        .iter()
        .filter(|c| kept.contains(&c.cluster_id))
        .cloned()
        .collect();
    if survivors.is_empty() {
        return Err(Error::InvalidArgument("no centroids to prune".into()));
    }
    let reassigned = assign_queries(vectors, &survivors)?;
    let dim = survivors[0].vector.len();
    let mut out = Vec::with_capacity(survivors.len());
    for mut c in survivors {
        let Some(idx) = reassigned.members.get(&c.cluster_id) else {
            dropped.push(c.cluster_id);
            continue;
        };
        let sum = vector::weighted_sum(dim, idx.iter().map(|&i| (1.0, vectors[i].as_ref())));
        if let Some(u) = vector::normalized(&sum) {
            c.vector = u;
        }
        c.seed_count = idx.len();
        out.push(c);
    }
    Ok(PruneOutcome {
        centroids: out,
        assignment: reassigned,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[f64]) -> Vec<f64> {
        vector::normalized(v).unwrap()
    }

    fn centroid(id: ClusterId, v: &[f64], seed_count: usize) -> Centroid {
        Centroid {
            cluster_id: id,
            task: "t".into(),
            vector: unit(v),
            seed_count,
        }
    }

    /// Two tight groups of `per` points around +x and -x in 3 dimensions.
    fn antipodal(per: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for s in [1.0, -1.0] {
            for i in 0..per {
                let t = i as f64 * 0.01;
                out.push(unit(&[s, t, -t / 2.0]));
            }
        }
        out
    }

    fn all_two_partitions_best(vs: &[Vec<f64>]) -> (f64, Vec<usize>) {
        // Exhaustive over labelings with point 0 fixed to cluster 0.
        let n = vs.len();
        let mut best = (f64::INFINITY, Vec::new());
        for mask in 0u32..(1 << (n - 1)) {
            let labels: Vec<usize> = (0..n)
                .map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as usize })
                .collect();
            if labels.iter().all(|&l| l == 0) {
                continue;
            }
            let mut cost = 0.0;
            for c in 0..2 {
                let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                let sum = vector::weighted_sum(3, idx.iter().map(|&i| (1.0, vs[i].as_slice())));
                // Best unit centroid is sum/|sum|, giving cost n - |sum|.
                cost += idx.len() as f64 - vector::norm(&sum);
            }
            if cost < best.0 {
                best = (cost, labels);
            }
        }
        best
    }

    #[test]
    fn antipodal_groups_split_like_brute_force() {
        let vs = antipodal(10);
        let (_, best) = all_two_partitions_best(&vs);
        let run = kmeans(&vs, 2, 11).unwrap();
        let same = |i: usize, j: usize| run.assignment[i] == run.assignment[j];
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                assert_eq!(same(i, j), best[i] == best[j]);
            }
        }
    }

    #[test]
    fn k1_is_normalized_mean() {
        let vs = vec![unit(&[1.0, 0.0]), unit(&[0.0, 1.0]), unit(&[1.0, 1.0])];
        let run = kmeans(&vs, 1, 0).unwrap();
        let mean = unit(&vector::weighted_sum(2, vs.iter().map(|v| (1.0, v.as_slice()))));
        for (a, b) in run.centroids[0].iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn k_equal_n_gives_singletons() {
        let vs = vec![
            unit(&[1.0, 0.0]),
            unit(&[0.0, 1.0]),
            unit(&[-1.0, 0.2]),
            unit(&[0.3, -1.0]),
        ];
        let run = kmeans(&vs, 4, 5).unwrap();
        let mut seen = run.assignment.clone();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        for (i, v) in vs.iter().enumerate() {
            let c = &run.centroids[run.assignment[i]];
            assert!(c.iter().zip(v).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn k_larger_than_n_is_an_error() {
        let vs = vec![unit(&[1.0, 0.0])];
        assert!(kmeans(&vs, 2, 0).is_err());
        assert!(kmeans(&vs, 0, 0).is_err());
    }

    #[test]
    fn duplicate_points_still_seed() {
        let vs = vec![unit(&[1.0, 0.0]); 4];
        let run = kmeans(&vs, 3, 1).unwrap();
        assert_eq!(run.centroids.len(), 3);
    }

    #[test]
    fn select_k_prefers_two_for_antipodal_blobs() {
        let sel = select_k(&antipodal(10), DEFAULT_K_RANGE, DEFAULT_SILHOUETTE_THRESHOLD, 3).unwrap();
        assert_eq!(sel.k, 2);
        let s2 = sel.silhouettes.iter().find(|(k, _)| *k == 2).unwrap().1;
        assert!(s2 > 0.95, "{s2}");
    }

    #[test]
    fn select_k_single_vector() {
        let v = unit(&[0.2, 0.3, 0.9]);
        let sel = select_k(
            std::slice::from_ref(&v),
            DEFAULT_K_RANGE,
            DEFAULT_SILHOUETTE_THRESHOLD,
            0,
        )
        .unwrap();
        assert_eq!(sel.k, 1);
        assert_eq!(sel.centroids[0], v);
        assert!(sel.silhouettes.is_empty());
    }

    #[test]
    fn merge_identical() {
        let out = merge_centroids(vec![centroid(0, &[1.0, 2.0], 3), centroid(1, &[1.0, 2.0], 1)], 0.15);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].seed_count, 4);
        assert_eq!(out[0].cluster_id, 0);
        for (a, b) in out[0].vector.iter().zip(unit(&[1.0, 2.0])) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_respects_threshold() {
        // cos(theta) = 0.8 -> distance 0.2
        let a = centroid(0, &[1.0, 0.0], 1);
        let b = centroid(1, &[0.8, 0.6], 1);
        let out = merge_centroids(vec![a.clone(), b.clone()], 0.15);
        assert_eq!(out, vec![a, b]);
    }

    /// Three unit vectors with pairwise dot product 0.9, i.e. pairwise
    /// cosine distance 0.1.
    fn equiangular() -> [Vec<f64>; 3] {
        let along = (14.0f64 / 15.0).sqrt();
        let across = (1.0f64 / 15.0).sqrt();
        let u = 1.0 / 3f64.sqrt();
        let w = 1.0 / 6f64.sqrt();
        let spokes = [[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
        spokes.map(|sp| sp.iter().map(|x| along * u + across * w * x).collect())
    }

    #[test]
    fn merge_three_close_centroids_to_weighted_mean() {
        let [a, b, c] = equiangular();
        for (x, y) in [(&a, &b), (&a, &c), (&b, &c)] {
            assert!((vector::cosine_distance(x, y) - 0.1).abs() < 1e-12);
        }
        let inputs = vec![centroid(0, &a, 2), centroid(1, &b, 3), centroid(2, &c, 5)];
        let out = merge_centroids(inputs, 0.15);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].seed_count, 10);
        assert_eq!(out[0].cluster_id, 0);
        let expected = unit(&[0, 1, 2].map(|i| 2.0 * a[i] + 3.0 * b[i] + 5.0 * c[i]));
        for (x, y) in out[0].vector.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(merge_centroids(out.clone(), 0.15), out);
    }

    #[test]
    fn assignment_ties_to_lower_id() {
        let cs = vec![centroid(7, &[1.0, 1.0], 1), centroid(3, &[1.0, -1.0], 1)];
        let a = assign_queries(&[vec![1.0, 0.0]], &cs).unwrap();
        assert_eq!(a.cluster_of, vec![3]);
        let a = assign_queries(&[unit(&[1.0, 1.0])], &cs).unwrap();
        assert_eq!(a.cluster_of, vec![7]);
    }

    fn rankings(entries: &[(ClusterId, [&str; 3])]) -> BTreeMap<ClusterId, Vec<String>> {
        entries
            .iter()
            .map(|(id, r)| (*id, r.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    #[test]
    fn prune_drops_smaller_identical_cluster() {
        let mut vs = Vec::new();
        for i in 0..10 {
            vs.push(unit(&[1.0, 0.01 * i as f64]));
        }
        for i in 0..4 {
            vs.push(unit(&[0.01 * i as f64, 1.0]));
        }
        let cs = vec![centroid(0, &[1.0, 0.0], 10), centroid(1, &[0.0, 1.0], 4)];
        let asg = assign_queries(&vs, &cs).unwrap();
        let r = rankings(&[(0, ["m1", "m2", "m3"]), (1, ["m3", "m1", "m2"])]);
        let out = prune_centroids(&vs, &cs, &asg, &r, 0.95).unwrap();
        assert_eq!(out.dropped, vec![1]);
        assert_eq!(out.centroids.len(), 1);
        assert_eq!(out.assignment.size(0), 14);
        let mean = unit(&vector::weighted_sum(2, vs.iter().map(|v| (1.0, v.as_slice()))));
        for (a, b) in out.centroids[0].vector.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn prune_keeps_partially_overlapping_sets() {
        assert_eq!(jaccard(&["m1", "m2", "m3"], &["m1", "m2", "m4"]), 0.5);
        let vs = vec![unit(&[1.0, 0.0]), unit(&[0.0, 1.0])];
        let cs = vec![centroid(0, &[1.0, 0.0], 1), centroid(1, &[0.0, 1.0], 1)];
        let asg = assign_queries(&vs, &cs).unwrap();
        let r = rankings(&[(0, ["m1", "m2", "m3"]), (1, ["m1", "m2", "m4"])]);
        let out = prune_centroids(&vs, &cs, &asg, &r, 0.95).unwrap();
        assert!(out.dropped.is_empty());
        assert_eq!(out.centroids.len(), 2);
    }

    #[test]
    fn prune_size_tie_keeps_lower_id() {
        let vs = vec![unit(&[1.0, 0.0]), unit(&[0.0, 1.0])];
        let cs = vec![centroid(5, &[1.0, 0.0], 1), centroid(2, &[0.0, 1.0], 1)];
        let asg = assign_queries(&vs, &cs).unwrap();
        let r = rankings(&[(5, ["m1", "m2", "m3"]), (2, ["m2", "m3", "m1"])]);
        let out = prune_centroids(&vs, &cs, &asg, &r, 0.95).unwrap();
        assert_eq!(out.dropped, vec![5]);
    }

    #[test]
    fn prune_requires_rankings() {
        let vs = vec![unit(&[1.0, 0.0])];
        let cs = vec![centroid(0, &[1.0, 0.0], 1)];
        let asg = assign_queries(&vs, &cs).unwrap();
        assert!(prune_centroids(&vs, &cs, &asg, &BTreeMap::new(), 0.95).is_err());
    }
}
