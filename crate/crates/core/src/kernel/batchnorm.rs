use super::{Matrix, Mode};
use crate::{Error, Result};

pub const DEFAULT_BN_MOMENTUM: f64 = 0.99;
pub const DEFAULT_BN_EPS: f64 = 1e-3;

/// Per-feature batch normalization with learned scale and shift.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub shift: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

/// Everything the backward pass and the running-stat update need.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub x_hat: Matrix,
    pub inv_std: Vec<f64>,
    pub batch_mean: Vec<f64>,
    /// Biased (population) variance of the batch.
    pub batch_var: Vec<f64>,
    gamma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads {
    pub dx: Matrix,
    pub dgamma: Vec<f64>,
    pub dshift: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(features: usize, momentum: f64, eps: f64) -> Result<Self> {
        if !(momentum > 0.0 && momentum < 1.0) {
            return Err(Error::Argument(format!("batch-norm momentum {momentum} not in (0, 1)")));
        }
        if !(eps > 0.0) {
            return Err(Error::Argument(format!("batch-norm eps {eps} must be positive")));
        }
        Ok(BatchNormLayer {
            gamma: vec![1.0; features],
            shift: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum,
            eps,
        })
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.features() {
            return Err(Error::shape("batch-norm input columns", self.features(), x.cols()));
        }
        Ok(())
    }

    /// Normalizes with batch statistics. Does not touch running statistics.
    pub fn forward_train(&self, x: &Matrix) -> Result<(Matrix, BatchNormCache)> {
        self.check_input(x)?;
        let n = x.rows();
        if n < 2 {
            return Err(Error::Argument("batch too small for batch norm".into()));
        }
        let nf = n as f64;
        let mean: Vec<f64> = x.column_sums().into_iter().map(|s| s / nf).collect();
        let mut var = vec![0.0; self.features()];
        for r in 0..n {
            for ((v, &xv), &m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *v += (xv - m) * (xv - m);
            }
        }
        var.iter_mut().for_each(|v| *v /= nf);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();

        let mut x_hat = Matrix::zeros(n, self.features());
        let mut y = Matrix::zeros(n, self.features());
        for r in 0..n {
            let xr = x.row(r);
            let hr = x_hat.row_mut(r);
            for j in 0..xr.len() {
                hr[j] = (xr[j] - mean[j]) * inv_std[j];
            }
            let yr = y.row_mut(r);
            for j in 0..yr.len() {
                yr[j] = self.gamma[j] * x_hat.get(r, j) + self.shift[j];
            }
        }
        Ok((
            y,
            BatchNormCache {
                x_hat,
                inv_std,
                batch_mean: mean,
                batch_var: var,
                gamma: self.gamma.clone(),
            },
        ))
    }

    pub fn forward_infer(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let scale: Vec<f64> = self
            .running_var
            .iter()
            .zip(&self.gamma)
            .map(|(v, g)| g / (v + self.eps).sqrt())
            .collect();
        let mut y = x.clone();
        for r in 0..y.rows() {
            for (j, v) in y.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.running_mean[j]) * scale[j] + self.shift[j];
            }
        }
        Ok(y)
    }

    /// `running ← momentum·running + (1 − momentum)·batch`.
    pub fn update_running(&mut self, cache: &BatchNormCache) {
        let m = self.momentum;
        for (r, b) in self.running_mean.iter_mut().zip(&cache.batch_mean) {
            *r = m * *r + (1.0 - m) * b;
        }
        for (r, b) in self.running_var.iter_mut().zip(&cache.batch_var) {
            *r = m * *r + (1.0 - m) * b;
        }
    }
}

impl BatchNormCache {
    /// Exact gradients of the train-mode expression.
    pub fn backward(&self, dy: &Matrix) -> Result<BatchNormGrads> {
        dy.expect_shape(self.x_hat.shape(), "batch-norm upstream gradient")?;
        let (n, f) = dy.shape();
        let nf = n as f64;
        let mut dgamma = vec![0.0; f];
        let mut dshift = vec![0.0; f];
        for r in 0..n {
            for j in 0..f {
                let g = dy.get(r, j);
                dshift[j] += g;
                dgamma[j] += g * self.x_hat.get(r, j);
            }
        }
        // With dx̂ = γ·dy:  dx = inv_std/N · (N·dx̂ − Σdx̂ − x̂·Σ(dx̂·x̂)),
        // and Σdx̂ = γ·dshift, Σ(dx̂·x̂) = γ·dgamma.
        let mut dx = Matrix::zeros(n, f);
        for r in 0..n {
            let row = dx.row_mut(r);
            for j in 0..f {
                let g = self.gamma[j];
                let dxh = g * dy.get(r, j);
                row[j] = self.inv_std[j] / nf
                    * (nf * dxh - g * dshift[j] - self.x_hat.get(r, j) * g * dgamma[j]);
            }
        }
        Ok(BatchNormGrads { dx, dgamma, dshift })
    }
}

/// Train mode normalizes with batch statistics and folds them into the
/// running statistics; infer mode uses the running statistics only.
pub fn batchnorm_forward(
    x: &Matrix,
    layer: &mut BatchNormLayer,
    mode: Mode,
) -> Result<(Matrix, Option<BatchNormCache>)> {
    match mode {
        Mode::Train => {
            let (y, cache) = layer.forward_train(x)?;
            layer.update_running(&cache);
            Ok((y, Some(cache)))
        }
        Mode::Infer => Ok((layer.forward_infer(x)?, None)),
    }
}

pub fn batchnorm_backward(cache: &BatchNormCache, dy: &Matrix) -> Result<BatchNormGrads> {
    cache.backward(dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::finite_diff_check;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn col(values: &[f64]) -> Matrix {
        Matrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn train_normalizes_batch() {
        let mut layer = BatchNormLayer::new(1, 0.99, 1e-12).unwrap();
        let (y, _) = batchnorm_forward(&col(&[1.0, 3.0]), &mut layer, Mode::Train).unwrap();
        assert!((y.get(0, 0) + 1.0).abs() < 1e-9 && (y.get(1, 0) - 1.0).abs() < 1e-9);
        // mean 2, biased variance 1
        assert!((layer.running_mean[0] - 0.02).abs() < 1e-15);
        assert!((layer.running_var[0] - (0.99 + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn infer_with_identity_statistics() {
        let mut layer = BatchNormLayer::new(1, 0.9, 1e-300).unwrap();
        let x = col(&[-2.0, 0.5, 7.0]);
        let before = layer.clone();
        let (y, cache) = batchnorm_forward(&x, &mut layer, Mode::Infer).unwrap();
        assert!(cache.is_none());
        assert_eq!(layer, before);
        assert_eq!(y, x);
    }

    #[test]
    fn constant_batch_maps_to_shift() {
        let mut layer = BatchNormLayer::new(1, 0.99, 1e-5).unwrap();
        let (y, _) = batchnorm_forward(&col(&[5.0, 5.0]), &mut layer, Mode::Train).unwrap();
        assert!(y.data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_single_row_and_bad_params() {
        let mut layer = BatchNormLayer::new(1, 0.99, 1e-5).unwrap();
        let err = batchnorm_forward(&col(&[1.0]), &mut layer, Mode::Train).unwrap_err();
        assert!(err.to_string().contains("batch too small for batch norm"));
        assert!(BatchNormLayer::new(1, 1.0, 1e-5).is_err());
        assert!(BatchNormLayer::new(1, 0.5, 0.0).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let layer = BatchNormLayer::new(2, 0.99, 1e-5).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 5.0], vec![3.0, -1.0]]).unwrap();
        let (_, cache) = layer.forward_train(&x).unwrap();
        let g = batchnorm_backward(&cache, &Matrix::zeros(3, 2)).unwrap();
        assert!(g.dx.data().iter().chain(&g.dgamma).chain(&g.dshift).all(|&v| v == 0.0));
    }

    #[test]
    fn dgamma_closed_form() {
        let layer = BatchNormLayer::new(2, 0.99, 1e-5).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 5.0], vec![3.0, -1.0]]).unwrap();
        let dy = Matrix::from_rows(&[vec![0.5, -1.0], vec![2.0, 0.25], vec![-0.3, 1.0]]).unwrap();
        let (_, cache) = layer.forward_train(&x).unwrap();
        let g = cache.backward(&dy).unwrap();
        for j in 0..2 {
            let mean = (0..3).map(|r| x.get(r, j)).sum::<f64>() / 3.0;
            let var = (0..3).map(|r| (x.get(r, j) - mean).powi(2)).sum::<f64>() / 3.0;
            let expect: f64 = (0..3)
                .map(|r| dy.get(r, j) * (x.get(r, j) - mean) / (var + 1e-5).sqrt())
                .sum();
            assert!((g.dgamma[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = stream_rng(11, 0);
        for trial in 0..20 {
            let (n, f) = (rng.random_range(3..9), rng.random_range(1..5));
            let x: Vec<f64> = (0..n * f).map(|_| rng.random_range(-2.0..2.0)).collect();
            let dy: Vec<f64> = (0..n * f).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dy = Matrix::from_vec(n, f, dy).unwrap();
            let mut layer = BatchNormLayer::new(f, 0.9, 1e-5).unwrap();
            for j in 0..f {
                layer.gamma[j] = rng.random_range(0.5..1.5);
                layer.shift[j] = rng.random_range(-0.5..0.5);
            }
            // Parameter vector: [x, gamma, shift]; loss = Σ dy ⊙ y.
            let pack = |x: &[f64], l: &BatchNormLayer| {
                let mut p = x.to_vec();
                p.extend(&l.gamma);
                p.extend(&l.shift);
                p
            };
            let loss = |p: &[f64]| {
                let mut l = layer.clone();
                l.gamma = p[n * f..n * f + f].to_vec();
                l.shift = p[n * f + f..].to_vec();
                let xm = Matrix::from_vec(n, f, p[..n * f].to_vec()).unwrap();
                let (y, cache) = l.forward_train(&xm).unwrap();
                let value: f64 = y.data().iter().zip(dy.data()).map(|(a, b)| a * b).sum();
                let g = cache.backward(&dy).unwrap();
                let mut grad = g.dx.into_vec();
                grad.extend(g.dgamma);
                grad.extend(g.dshift);
                (value, grad)
            };
            let report = finite_diff_check(loss, &pack(&x, &layer), 1e-5, 1e-5);
            assert!(report.passed, "trial {trial}: {report:?}");
        }
    }

    #[test]
    fn output_moments_match_scale_and_shift() {
        let mut layer = BatchNormLayer::new(1, 0.99, 1e-8).unwrap();
        layer.gamma[0] = 2.0;
        layer.shift[0] = 0.5;
        let x = col(&[0.1, 4.0, -3.0, 2.2, 9.0]);
        let (y, _) = layer.forward_train(&x).unwrap();
        let mean = y.sum() / 5.0;
        let var = y.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((mean - 0.5).abs() < 1e-6);
        assert!((var - 4.0).abs() < 1e-6);
    }
}
