use serde::{Deserialize, Serialize};

use super::metrics::Confusion;
use crate::data::kfold_split;
use crate::kernel::Matrix;
use crate::{Error, Result};

/// L2-regularized logistic regression fitted by gradient descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    /// Weight on `‖w‖²`; the bias is not penalized.
    pub l2: f64,
    pub iterations: usize,
    pub folds: usize,
    pub seed: u64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            iterations: 500,
            folds: 5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn decision(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| self.bias + x.row(i).iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Positive when the predicted probability is at least 0.5.
    pub fn predict(&self, x: &Matrix) -> Vec<bool> {
        self.decision(x).into_iter().map(|s| s >= 0.0).collect()
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Largest eigenvalue of `XᵀX` by power iteration from the all-ones vector.
fn top_eigenvalue(x: &Matrix) -> f64 {
    let m = x.cols();
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let xv: Vec<f64> = (0..x.rows())
            .map(|i| x.row(i).iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let mut w = vec![0.0; m];
        for (i, s) in xv.iter().enumerate() {
            for (wj, xj) in w.iter_mut().zip(x.row(i)) {
                *wj += s * xj;
            }
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w.into_iter().map(|a| a / norm).collect();
    }
    lambda
}

/// Minimizes `mean(logloss) + l2·‖w‖²`. Weights and bias take separate step
/// sizes from their own curvature bounds, halved so the joint step is safe.
pub fn fit_logistic(x: &Matrix, y: &[bool], l2: f64, iterations: usize) -> Result<LogisticModel> {
    let (n, m) = x.shape();
    if y.len() != n {
        return Err(Error::shape("classifier labels", n, y.len()));
    }
    if n == 0 {
        return Err(Error::Argument("no training rows".into()));
    }
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::Argument(format!("l2 must be finite and >= 0, got {l2}")));
    }
    x.ensure_finite()?;
    let nf = n as f64;
    let lip_w = 0.25 * top_eigenvalue(x) / nf + 2.0 * l2;
    let step_w = if lip_w > 0.0 { 0.5 / lip_w } else { 0.0 };
    let step_b = 0.5 / 0.25;
    let mut w = vec![0.0; m];
    let mut b = 0.0;
    let targets: Vec<f64> = y.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    for _ in 0..iterations {
        let mut gw: Vec<f64> = w.iter().map(|wj| 2.0 * l2 * wj).collect();
        let mut gb = 0.0;
        for i in 0..n {
            let row = x.row(i);
            let s = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
            let r = (sigmoid(s) - targets[i]) / nf;
            gb += r;
            for (g, a) in gw.iter_mut().zip(row) {
                *g += r * a;
            }
        }
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= step_w * g;
        }
        b -= step_b * gb;
    }
    Ok(LogisticModel { weights: w, bias: b })
}

/// Cross-validated binary classification scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_fold: Vec<Confusion>,
}

/// k-fold evaluation; counts are pooled over the held-out folds before the
/// scores are taken.
pub fn classify_cv(x: &Matrix, y: &[bool], params: &ClassifierParams) -> Result<ClassificationReport> {
    if y.len() != x.rows() {
        return Err(Error::shape("classifier labels", x.rows(), y.len()));
    }
    let positives = y.iter().filter(|&&t| t).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::Argument("labels contain a single class".into()));
    }
    let plan = kfold_split(x.rows(), params.folds, params.seed)?;
    let mut total = Confusion::default();
    let mut per_fold = Vec::with_capacity(plan.k());
    for fold in 0..plan.k() {
        let train = plan.train_indices(fold);
        let test = &plan.folds[fold];
        let y_train: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let model = fit_logistic(&x.select_rows(&train), &y_train, params.l2, params.iterations)?;
        let mut c = Confusion::default();
        for (&i, p) in test.iter().zip(model.predict(&x.select_rows(test))) {
            c.add(y[i], p);
        }
        total.merge(c);
        per_fold.push(c);
    }
    let s = total.scores();
    Ok(ClassificationReport {
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
        per_fold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn separable(n: usize, seed: u64) -> (Matrix, Vec<bool>) {
        let mut rng = stream_rng(seed, 0);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            data.extend([a, b, rng.random_range(-1.0..1.0)]);
            y.push(a + 0.5 * b > 0.1);
        }
        (Matrix::from_vec(n, 3, data).unwrap(), y)
    }

    #[test]
    fn learns_a_linear_rule() {
        let (x, y) = separable(300, 1);
        let r = classify_cv(&x, &y, &ClassifierParams::default()).unwrap();
        assert!(r.f1 > 0.9, "{r:?}");
        assert_eq!(r.per_fold.len(), 5);
    }

    #[test]
    fn decision_rule_invariant_to_feature_scale() {
        // Scaling features by c and l2 by c² leaves the optimum unchanged;
        // with c a power of two the descent iterates match exactly.
        let (x, y) = separable(80, 2);
        let a = fit_logistic(&x, &y, 1.0 / 64.0, 300).unwrap();
        let b = fit_logistic(&x.map(|v| v * 4.0), &y, 0.25, 300).unwrap();
        assert_eq!(a.predict(&x), b.predict(&x.map(|v| v * 4.0)));
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wa - 4.0 * wb).abs() < 1e-9);
        }
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = separable(20, 3);
        assert!(classify_cv(&x, &[true; 20], &ClassifierParams::default()).is_err());
        assert!(classify_cv(&x, &[false; 19], &ClassifierParams::default()).is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
