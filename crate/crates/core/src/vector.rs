//! Small dense-vector helpers shared by the geometry code.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine distance between two unit vectors.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - dot(a, b)
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Returns `a / |a|`, or `None` for a zero (or non-finite) vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(a.iter().map(|x| x / n).collect())
    } else {
        None
    }
}

/// Component-wise sum of `weight * v` over the given rows.
pub fn weighted_sum<'a>(dim: usize, rows: impl IntoIterator<Item = (f64, &'a [f64])>) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    for (w, v) in rows {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    acc
}

/// Index of the row with the highest dot product against `query`; ties go to
/// the row with the smallest `key`.
pub fn nearest_by_dot<K: Ord + Copy>(
    query: &[f64],
    rows: impl IntoIterator<Item = (K, impl AsRef<[f64]>)>,
) -> Option<(K, f64)> {
    let mut best: Option<(K, f64)> = None;
    for (key, row) in rows {
        let sim = dot(query, row.as_ref());
        best = match best {
            Some((bk, bs)) if bs > sim || (bs == sim && bk <= key) => Some((bk, bs)),
            _ => Some((key, sim)),
        };
    }
    best
}
