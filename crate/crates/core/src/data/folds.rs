use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::ChoiceDataset;
use crate::error::{Error, Result};

/// Fold index per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold: Vec<usize>,
}

impl FoldAssignment {
    pub fn new(k: usize, fold: Vec<usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument("fold count must be at least 2".into()));
        }
        if let Some(&f) = fold.iter().find(|&&f| f >= k) {
            return Err(Error::InvalidArgument(format!("fold index {f} outside 0..{k}")));
        }
        for f in 0..k {
            if !fold.contains(&f) {
                return Err(Error::InvalidArgument(format!("fold {f} is empty")));
            }
        }
        Ok(FoldAssignment { k, fold })
    }

    /// (training rows, held-out rows) for fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.fold.len()).partition(|&i| self.fold[i] != f)
    }
}

/// Assigns whole groups to `k` folds: groups are shuffled with `seed` and dealt
/// round-robin, so fold group counts differ by at most one.
pub fn grouped_kfold(ds: &ChoiceDataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be at least 2".into()));
    }
    let labels = ds.group_labels();
    // BTreeMap keeps group order independent of hashing
    let group_ids: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    let n_groups = group_ids.len();
    if n_groups < k {
        return Err(Error::InvalidArgument(format!(
            "{n_groups} distinct groups cannot fill {k} folds"
        )));
    }
    let mut order: Vec<&str> = group_ids.into_iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, g)| (*g, i % k)).collect();
    let fold = labels.iter().map(|l| fold_of[l.as_str()]).collect();
    FoldAssignment::new(k, fold)
}

/// Group-aware holdout split: roughly `valid_share` of the groups go to the
/// validation side. Returns (training rows, validation rows).
pub fn group_holdout_split(ds: &ChoiceDataset, valid_share: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0 < valid_share && valid_share < 1.0) {
        return Err(Error::InvalidArgument("validation share must lie in (0, 1)".into()));
    }
    let k = (1.0 / valid_share).round().max(2.0) as usize;
    let folds = grouped_kfold(ds, k, seed)?;
    Ok(folds.split(0))
}

/// N rows drawn with replacement.
pub fn bootstrap_sample(ds: &ChoiceDataset, seed: u64) -> Result<ChoiceDataset> {
    let n = ds.n_rows();
    if n == 0 {
        return Err(Error::InvalidArgument("cannot resample an empty dataset".into()));
    }
    Ok(ds.subset(&bootstrap_rows(n, seed)))
}

/// Row indices of a bootstrap draw, exposed for callers that keep their own row store.
pub fn bootstrap_rows(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}
