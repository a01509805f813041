use super::EncoderOutput;
use crate::kernel::Matrix;
use crate::Result;

/// Predictions are clamped to `[BCE_CLAMP, 1 − BCE_CLAMP]` before logs.
pub const BCE_CLAMP: f64 = 1e-7;

fn check(x: &Matrix, x_hat: &Matrix, context: &'static str) -> Result<()> {
    x_hat.expect_shape(x.shape(), context)
}

/// Binary cross-entropy summed over features and averaged over rows.
///
/// The gradient is that of the clamped expression, so it is zero wherever
/// the clamp is active.
pub fn bce_loss(x: &Matrix, x_hat: &Matrix) -> Result<(f64, Matrix)> {
    check(x, x_hat, "bce_loss")?;
    let batch = x.rows().max(1) as f64;
    let (lo, hi) = (BCE_CLAMP, 1.0 - BCE_CLAMP);
    let mut total = 0.0;
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for ((g, &t), &p) in grad.data_mut().iter_mut().zip(x.data()).zip(x_hat.data()) {
        let pc = p.clamp(lo, hi);
        total -= t * pc.ln() + (1.0 - t) * (1.0 - pc).ln();
        if p > lo && p < hi {
            *g = (-t / pc + (1.0 - t) / (1.0 - pc)) / batch;
        }
    }
    Ok((total / batch, grad))
}

/// `1 − softF1` with soft counts pooled over the whole minibatch:
/// `TP = Σ x·x̂`, `FP = Σ (1−x)·x̂`, `FN = Σ x·(1−x̂)`,
/// `softF1 = 2TP / (2TP + FP + FN)`, taken as 1 when the denominator is 0.
pub fn soft_f1_loss(x: &Matrix, x_hat: &Matrix) -> Result<(f64, Matrix)> {
    check(x, x_hat, "soft_f1_loss")?;
    // 2TP + FP + FN = Σx̂ + Σx.
    let (mut tp, mut sum_pred, mut sum_true) = (0.0, 0.0, 0.0);
    for (&t, &p) in x.data().iter().zip(x_hat.data()) {
        tp += t * p;
        sum_pred += p;
        sum_true += t;
    }
    let denom = sum_pred + sum_true;
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    if denom == 0.0 {
        return Ok((0.0, grad));
    }
    let f1 = 2.0 * tp / denom;
    // ∂F1/∂x̂ = (2x·D − 2TP) / D²
    let d2 = denom * denom;
    for (g, &t) in grad.data_mut().iter_mut().zip(x.data()) {
        *g = -(2.0 * t * denom - 2.0 * tp) / d2;
    }
    Ok((1.0 - f1, grad))
}

/// Batch mean of `½·Σ_j (exp(logvar_j) + mu_j² − 1 − logvar_j)`.
pub fn kl_divergence(enc: &EncoderOutput) -> f64 {
    let batch = enc.mu.rows().max(1) as f64;
    let total: f64 = enc
        .mu
        .data()
        .iter()
        .zip(enc.logvar.data())
        .map(|(&m, &lv)| 0.5 * (lv.exp() + m * m - 1.0 - lv))
        .sum();
    total / batch
}

/// Gradients of [`kl_divergence`] with respect to `(mu, logvar)`.
pub fn kl_gradient(enc: &EncoderOutput) -> (Matrix, Matrix) {
    let batch = enc.mu.rows().max(1) as f64;
    (
        enc.mu.map(|m| m / batch),
        enc.logvar.map(|lv| 0.5 * (lv.exp() - 1.0) / batch),
    )
}
