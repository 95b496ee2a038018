use rand::seq::SliceRandom;

use super::Dataset;
use crate::{seed, Error, Result};

/// Guards `ceil` against representation error, e.g. 0.7 * 10 = 7.000000000000001.
const CEIL_SLACK: f64 = 1e-9;

/// Task-stratified split. Each task sends `ceil(train_fraction * n_task)` of
/// its records to the training side; both halves keep dataset order.
pub fn split_dataset(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut in_train = vec![false; d.len()];
    for (t, task) in d.tasks().iter().enumerate() {
        let mut idx = d.task_indices(task);
        if idx.len() < 2 {
            return Err(Error::TaskTooSmall {
                task: task.clone(),
                count: idx.len(),
                required: 2,
            });
        }
        let n_train = train_count(idx.len(), train_fraction);
        let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
        idx.shuffle(&mut rng);
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    let (train, test): (Vec<usize>, Vec<usize>) = (0..d.len()).partition(|&i| in_train[i]);
    Ok((d.subset(&train), d.subset(&test)))
}

pub(crate) fn train_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 - CEIL_SLACK).ceil() as usize).min(n)
}


#[cfg(test)]
mod properties {
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::tests::arb_dataset;

    proptest! {
        #[test]
        fn split_partitions_every_task(d in arb_dataset(2..=3, 2..=30), frac in 0.05..0.95f64, seed in any::<u64>()) {
            let (train, test) = split_dataset(&d, frac, seed).unwrap();
            let mut ids: Vec<&str> = train.records().iter().chain(test.records()).map(|r| r.query_id.as_str()).collect();
            ids.sort();
            let mut all: Vec<&str> = d.records().iter().map(|r| r.query_id.as_str()).collect();
            all.sort();
            prop_assert_eq!(ids, all);
            let n = d.len() as f64;
            prop_assert_eq!(train.len(), ((frac * n - 1e-9).ceil() as usize).min(d.len()));
        }
    }
}
