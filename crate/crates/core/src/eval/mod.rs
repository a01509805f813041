//! Reconstruction metrics, clustering and downstream evaluation.

mod classify;
mod compare;
mod embeddings;
mod kmeans;
mod metrics;
mod nmi;
mod pca;
mod recon;
mod report;

pub use classify::{classify_cv, fit_logistic, ClassificationReport, ClassifierParams, LogisticModel};
pub use compare::{cluster_compare, cluster_nmi, cross_validate};
pub use embeddings::{read_embeddings, write_embeddings, Embeddings};
pub use kmeans::{kmeans, Clustering, DEFAULT_MAX_ITERS, DEFAULT_RESTARTS};
pub use metrics::{binarize, confusion, cosine_similarity, micro_f1, Confusion, Scores, DEFAULT_THRESHOLD};
pub use nmi::nmi;
pub use pca::{pca_fit, pca_project, Pca};
pub use recon::{evaluate_reconstruction, ReconstructionScores};
pub use report::{FoldMetrics, MetricsReport};
