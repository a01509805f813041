use super::metrics::{binarize, confusion, cosine_similarity, Confusion, DEFAULT_THRESHOLD};
use crate::data::OccurrenceMatrix;
use crate::vae::VaeModel;
use crate::Result;

const CHUNK: usize = 512;

/// Held-out reconstruction quality of a trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionScores {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub cosine: f64,
}

/// Infer-mode reconstruction of the given rows: micro-F1 after binarizing
/// at 0.5, cosine on the raw probabilities.
pub fn evaluate_reconstruction(
    model: &VaeModel,
    matrix: &OccurrenceMatrix,
    indices: &[usize],
) -> Result<ReconstructionScores> {
    let mut counts = Confusion::default();
    let mut cosine_sum = 0.0;
    for chunk in indices.chunks(CHUNK) {
        let x = matrix.dense_rows(chunk);
        let x_hat = model.reconstruct(&x)?;
        counts.merge(confusion(&x, &binarize(&x_hat, DEFAULT_THRESHOLD))?);
        cosine_sum += cosine_similarity(&x, &x_hat)? * chunk.len() as f64;
    }
    let s = counts.scores();
    Ok(ReconstructionScores {
        f1: s.f1,
        precision: s.precision,
        recall: s.recall,
        cosine: if indices.is_empty() { 0.0 } else { cosine_sum / indices.len() as f64 },
    })
}
