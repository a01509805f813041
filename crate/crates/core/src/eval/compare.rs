use std::hash::Hash;

use super::kmeans::{kmeans, DEFAULT_MAX_ITERS, DEFAULT_RESTARTS};
use super::nmi::nmi;
use super::recon::evaluate_reconstruction;
use super::report::{FoldMetrics, MetricsReport};
use crate::data::{kfold_split, OccurrenceMatrix};
use crate::kernel::Matrix;
use crate::vae::{train, VaeConfig};
use crate::Result;

/// Trains one model per fold and scores reconstruction of the held-out rows.
/// Fold assignment uses `config.seed`.
pub fn cross_validate(matrix: &OccurrenceMatrix, config: &VaeConfig, k: usize) -> Result<MetricsReport> {
    let plan = kfold_split(matrix.n_samples(), k, config.seed)?;
    let mut per_fold = Vec::with_capacity(k);
    for (fold, held_out) in plan.folds.iter().enumerate() {
        let (model, _) = train(matrix, config, Some(held_out))?;
        let s = evaluate_reconstruction(&model, matrix, held_out)?;
        per_fold.push(FoldMetrics {
            fold,
            f1: s.f1,
            precision: s.precision,
            recall: s.recall,
            cosine: Some(s.cosine),
        });
    }
    let mean = |f: fn(&FoldMetrics) -> f64| per_fold.iter().map(f).sum::<f64>() / per_fold.len() as f64;
    Ok(MetricsReport {
        f1: Some(mean(|m| m.f1)),
        precision: Some(mean(|m| m.precision)),
        recall: Some(mean(|m| m.recall)),
        cosine: Some(mean(|m| m.cosine.unwrap_or(0.0))),
        per_fold,
        ..Default::default()
    }
    .with_meta("folds", k)
    .with_meta("seed", config.seed)
    .with_meta("latent_dim", config.latent_dim))
}

/// NMI of k-means clusters against reference labels.
pub fn cluster_nmi<L: Hash + Eq>(points: &Matrix, labels: &[L], k: usize, seed: u64) -> Result<f64> {
    let c = kmeans(points, k, DEFAULT_RESTARTS, DEFAULT_MAX_ITERS, seed)?;
    nmi(&c.assignments, labels)
}

/// Clusters both representations with the same `k` and seed.
pub fn cluster_compare<L: Hash + Eq>(
    vae: &Matrix,
    pca: &Matrix,
    labels: &[L],
    k: usize,
    seed: u64,
) -> Result<MetricsReport> {
    Ok(MetricsReport {
        nmi_vae: Some(cluster_nmi(vae, labels, k, seed)?),
        nmi_pca: Some(cluster_nmi(pca, labels, k, seed)?),
        ..Default::default()
    }
    .with_meta("k", k)
    .with_meta("seed", seed))
}
