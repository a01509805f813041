use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{BatchInput, Noise, VaeModel};
use super::{beta_schedule, VaeConfig};
use crate::data::OccurrenceMatrix;
use crate::eval::evaluate_reconstruction;
use crate::kernel::{Matrix, RmsPropState};
use crate::rng::{stream_rng, streams, substream};
use crate::{Error, Result};

/// One line of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Zero-based epoch index; `beta` is the schedule value for this index.
    pub epoch: usize,
    pub beta: f64,
    /// Mean over the epoch's minibatches.
    pub train_recon: f64,
    pub train_kl: f64,
    pub val_f1: Option<f64>,
    pub val_cosine: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

/// JSON lines, one record per epoch.
pub fn write_history<W: Write>(history: &TrainHistory, mut out: W) -> Result<()> {
    for record in &history.epochs {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n").map_err(|e| Error::io("<history>", e))?;
    }
    out.flush().map_err(|e| Error::io("<history>", e))
}

/// Trains on every row not listed in `validation`, scoring the validation
/// rows after each epoch.
///
/// `config.input_dim` may be 0, in which case it is taken from the matrix.
pub fn train(
    matrix: &OccurrenceMatrix,
    config: &VaeConfig,
    validation: Option<&[usize]>,
) -> Result<(VaeModel, TrainHistory)> {
    train_observed(matrix, config, validation, |_| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_observed(
    matrix: &OccurrenceMatrix,
    config: &VaeConfig,
    validation: Option<&[usize]>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(VaeModel, TrainHistory)> {
    let n = matrix.n_samples();
    if n == 0 || matrix.n_features() == 0 {
        return Err(Error::Argument("cannot train on an empty matrix".into()));
    }
    let mut config = config.clone();
    if config.input_dim == 0 {
        config.input_dim = matrix.n_features();
    } else if config.input_dim != matrix.n_features() {
        return Err(Error::shape("config input_dim", config.input_dim, matrix.n_features()));
    }
    config.validate()?;

    let val: Vec<usize> = validation.map(<[usize]>::to_vec).unwrap_or_default();
    if let Some(&bad) = val.iter().find(|&&i| i >= n) {
        return Err(Error::Argument(format!("validation index {bad} out of range for {n} samples")));
    }
    let mut held_out = vec![false; n];
    val.iter().for_each(|&i| held_out[i] = true);
    let train_rows: Vec<usize> = (0..n).filter(|&i| !held_out[i]).collect();
    if config.batch_size > train_rows.len() {
        return Err(Error::Argument(format!(
            "batch_size {} exceeds the {} training samples",
            config.batch_size,
            train_rows.len()
        )));
    }

    let mut model = VaeModel::new(config.clone())?;
    let mut optim: Vec<RmsPropState> = model
        .parameters()
        .iter()
        .map(|p| RmsPropState::new(p.len(), config.learning_rate, config.rho, config.rms_eps))
        .collect::<Result<_>>()?;
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        let beta = beta_schedule(epoch, &config);
        let mut order = train_rows.clone();
        order.shuffle(&mut stream_rng(config.seed, substream(streams::SHUFFLE, epoch as u64)));
        let mut noise_rng = stream_rng(config.seed, substream(streams::NOISE, epoch as u64));

        let (mut recon_sum, mut kl_sum, mut batches) = (0.0, 0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            // A trailing single row cannot be batch-normalized; it is
            // reshuffled into a full batch next epoch.
            if batch.len() < 2 {
                continue;
            }
            let input = BatchInput::from_rows(matrix, batch);
            let noise = Noise::sample(batch.len(), &config, &mut noise_rng)?;
            let (parts, grads, stats) = model.loss_and_gradients(&input, beta, &noise)?;
            if !parts.total.is_finite() {
                return Err(Error::Argument(format!("loss diverged at epoch {epoch}")));
            }
            for ((p, g), state) in model.parameters_mut().into_iter().zip(&grads.0).zip(&mut optim) {
                state.step(p, g)?;
            }
            model.update_running_stats(&stats);
            recon_sum += parts.recon;
            kl_sum += parts.kl;
            batches += 1;
        }

        let (val_f1, val_cosine) = if val.is_empty() {
            (None, None)
        } else {
            let s = evaluate_reconstruction(&model, matrix, &val)?;
            (Some(s.f1), Some(s.cosine))
        };
        let record = EpochRecord {
            epoch,
            beta,
            train_recon: recon_sum / batches.max(1) as f64,
            train_kl: kl_sum / batches.max(1) as f64,
            val_f1,
            val_cosine,
        };
        on_epoch(&record);
        history.epochs.push(record);
    }
    Ok((model, history))
}

/// Posterior means of every row, in matrix order (infer mode, no sampling).
pub fn embed(model: &VaeModel, matrix: &OccurrenceMatrix) -> Result<Matrix> {
    if matrix.n_features() != model.config().input_dim {
        return Err(Error::shape("matrix columns", model.config().input_dim, matrix.n_features()));
    }
    let d = model.config().latent_dim;
    let mut out = Vec::with_capacity(matrix.n_samples() * d);
    let all: Vec<usize> = (0..matrix.n_samples()).collect();
    for chunk in all.chunks(512) {
        let enc = model.encode(&matrix.dense_rows(chunk))?;
        out.extend_from_slice(enc.mu.data());
    }
    Matrix::from_vec(matrix.n_samples(), d, out)
}
