use rand::seq::SliceRandom;

use crate::rng::{stream_rng, streams};
use crate::{Error, Result};

/// Disjoint folds covering `0..n`, sizes differing by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KFoldPlan {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl KFoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Indices of every fold except `fold`, in fold order.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect()
    }
}

/// Seeded shuffle of `0..n`, then contiguous slices; the first `n % k`
/// folds get one extra index.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<KFoldPlan> {
    if k < 2 || k > n {
        return Err(Error::Argument(format!(
            "fold count must satisfy 2 <= k <= n (k = {k}, n = {n})"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, streams::KFOLD));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(KFoldPlan { folds, seed })
}
