use rand::Rng;

use super::Matrix;
use crate::{Error, Result};

/// Dense layer `y = x·W + b` with an L1 penalty on `W`.
///
/// Layers that feed straight into batch norm are built without a bias: the
/// normalization subtracts the batch mean, so a bias there has an
/// identically zero gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer {
    /// `in_dim × out_dim`.
    pub weights: Matrix,
    pub bias: Option<Vec<f64>>,
    pub l1_coeff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrads {
    pub dx: Option<Matrix>,
    pub dw: Matrix,
    pub db: Option<Vec<f64>>,
}

impl AffineLayer {
    pub fn new(weights: Matrix, bias: Option<Vec<f64>>, l1_coeff: f64) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weights.cols() {
                return Err(Error::shape("affine bias", weights.cols(), b.len()));
            }
        }
        if !(l1_coeff >= 0.0) {
            return Err(Error::Argument(format!("l1_coeff must be >= 0, got {l1_coeff}")));
        }
        Ok(AffineLayer {
            weights,
            bias,
            l1_coeff,
        })
    }

    /// Uniform weights in ±√(6 / (in + out)), zero bias.
    pub fn glorot<R: Rng>(in_dim: usize, out_dim: usize, with_bias: bool, l1_coeff: f64, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        AffineLayer {
            weights: Matrix::from_vec(in_dim, out_dim, data).expect("sized"),
            bias: with_bias.then(|| vec![0.0; out_dim]),
            l1_coeff,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_dim() {
            return Err(Error::shape("affine input columns", self.in_dim(), x.cols()));
        }
        let mut y = x.matmul(&self.weights)?;
        if let Some(b) = &self.bias {
            for r in 0..y.rows() {
                for (v, bv) in y.row_mut(r).iter_mut().zip(b) {
                    *v += bv;
                }
            }
        }
        Ok(y)
    }

    /// Forward pass for a binary input given as sorted column lists: each
    /// output row is the sum of the selected weight rows.
    pub fn forward_sparse(&self, rows: &[&[u32]]) -> Result<Matrix> {
        let out = self.out_dim();
        let mut y = Matrix::zeros(rows.len(), out);
        for (r, cols) in rows.iter().enumerate() {
            let yr = y.row_mut(r);
            if let Some(b) = &self.bias {
                yr.copy_from_slice(b);
            }
            for &c in *cols {
                let c = c as usize;
                if c >= self.in_dim() {
                    return Err(Error::shape("sparse affine column", self.in_dim(), c));
                }
                for (v, w) in yr.iter_mut().zip(self.weights.row(c)) {
                    *v += w;
                }
            }
        }
        Ok(y)
    }

    /// Gradients; `dx` is computed only when `need_dx`.
    pub fn backward(&self, x: &Matrix, dy: &Matrix, need_dx: bool) -> Result<AffineGrads> {
        dy.expect_shape((x.rows(), self.out_dim()), "affine upstream gradient")?;
        if x.cols() != self.in_dim() {
            return Err(Error::shape("affine input columns", self.in_dim(), x.cols()));
        }
        let mut dw = x.t_matmul(dy)?;
        self.add_l1_grad(&mut dw);
        let dx = if need_dx { Some(dy.matmul_t(&self.weights)?) } else { None };
        Ok(AffineGrads {
            dx,
            dw,
            db: self.bias.as_ref().map(|_| dy.column_sums()),
        })
    }

    /// Parameter gradients for a sparse binary input (no input gradient).
    pub fn backward_sparse(&self, rows: &[&[u32]], dy: &Matrix) -> Result<AffineGrads> {
        dy.expect_shape((rows.len(), self.out_dim()), "affine upstream gradient")?;
        let mut dw = Matrix::zeros(self.in_dim(), self.out_dim());
        // Accumulate per column in row order so the summation order is fixed.
        for (r, cols) in rows.iter().enumerate() {
            let g = dy.row(r);
            for &c in *cols {
                for (w, gv) in dw.row_mut(c as usize).iter_mut().zip(g) {
                    *w += gv;
                }
            }
        }
        self.add_l1_grad(&mut dw);
        Ok(AffineGrads {
            dx: None,
            dw,
            db: self.bias.as_ref().map(|_| dy.column_sums()),
        })
    }

    fn add_l1_grad(&self, dw: &mut Matrix) {
        if self.l1_coeff > 0.0 {
            for (g, &w) in dw.data_mut().iter_mut().zip(self.weights.data()) {
                *g += self.l1_coeff * sign(w);
            }
        }
    }

    /// `l1_coeff · ‖W‖₁`.
    pub fn l1_penalty(&self) -> f64 {
        if self.l1_coeff == 0.0 {
            return 0.0;
        }
        self.l1_coeff * self.weights.data().iter().map(|w| w.abs()).sum::<f64>()
    }
}

/// sign(0) = 0.
fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn affine_forward(x: &Matrix, layer: &AffineLayer) -> Result<Matrix> {
    layer.forward(x)
}

/// Returns `(dX, dW, dB)`; `dB` is empty for bias-free layers.
pub fn affine_backward(x: &Matrix, layer: &AffineLayer, dy: &Matrix) -> Result<(Matrix, Matrix, Vec<f64>)> {
    let g = layer.backward(x, dy, true)?;
    Ok((g.dx.expect("requested"), g.dw, g.db.unwrap_or_default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn identity2(bias: [f64; 2], l1: f64) -> AffineLayer {
        let w = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        AffineLayer::new(w, Some(bias.to_vec()), l1).unwrap()
    }

    #[test]
    fn forward_examples() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(affine_forward(&x, &identity2([1.0, 1.0], 0.0)).unwrap().data(), &[2.0, 3.0]);

        let mut rng = stream_rng(1, 1);
        let mut layer = AffineLayer::glorot(2, 2, true, 0.0, &mut rng);
        layer.bias = Some(vec![3.0, -1.0]);
        let zero = Matrix::zeros(1, 2);
        assert_eq!(layer.forward(&zero).unwrap().data(), &[3.0, -1.0]);

        let x2 = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let y = identity2([0.0, 0.0], 0.0).forward(&x2).unwrap();
        assert_eq!(y.row(0), y.row(1));
        assert!(layer.forward(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn backward_hand_chain_rule() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let dy = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let (dx, dw, db) = affine_backward(&x, &identity2([0.0, 0.0], 0.0), &dy).unwrap();
        assert_eq!(dw.data(), &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(db, vec![1.0, 1.0]);
        assert_eq!(dx.data(), &[1.0, 1.0]);

        let (dx, dw, db) = affine_backward(&x, &identity2([0.0, 0.0], 0.0), &Matrix::zeros(1, 2)).unwrap();
        assert!(dx.data().iter().chain(dw.data()).chain(&db).all(|&v| v == 0.0));
    }

    #[test]
    fn l1_subgradient() {
        let w = Matrix::from_rows(&[vec![1.0, -2.0]]).unwrap();
        let layer = AffineLayer::new(w, None, 0.01).unwrap();
        let x = Matrix::from_rows(&[vec![0.5]]).unwrap();
        let (_, dw, db) = affine_backward(&x, &layer, &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(dw.data(), &[0.01, -0.01]);
        assert!(db.is_empty());
        assert!((layer.l1_penalty() - 0.03).abs() < 1e-15);
        assert!(AffineLayer::new(Matrix::zeros(1, 1), None, -1.0).is_err());
    }

    #[test]
    fn linear_without_bias() {
        let mut rng = stream_rng(3, 1);
        let layer = AffineLayer::glorot(4, 3, false, 0.0, &mut rng);
        let x1 = Matrix::from_rows(&[vec![0.3, -1.0, 2.0, 0.5]]).unwrap();
        let x2 = Matrix::from_rows(&[vec![1.5, 0.25, -0.75, 4.0]]).unwrap();
        let (a, b) = (2.5, -0.5);
        let mix = x1.zip_map(&x2, |p, q| a * p + b * q).unwrap();
        let lhs = layer.forward(&mix).unwrap();
        let rhs = layer
            .forward(&x1)
            .unwrap()
            .zip_map(&layer.forward(&x2).unwrap(), |p, q| a * p + b * q)
            .unwrap();
        for (l, r) in lhs.data().iter().zip(rhs.data()) {
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_paths_match_dense() {
        let mut rng = stream_rng(4, 1);
        let layer = AffineLayer::glorot(6, 3, true, 0.1, &mut rng);
        let rows: Vec<&[u32]> = vec![&[0, 2, 5], &[], &[1]];
        let mut dense = Matrix::zeros(3, 6);
        for (r, cols) in rows.iter().enumerate() {
            for &c in *cols {
                dense.set(r, c as usize, 1.0);
            }
        }
        let ys = layer.forward_sparse(&rows).unwrap();
        let yd = layer.forward(&dense).unwrap();
        assert!(ys.data().iter().zip(yd.data()).all(|(a, b)| (a - b).abs() < 1e-12));
        let dy = Matrix::from_vec(3, 3, (0..9).map(|i| i as f64 - 4.0).collect()).unwrap();
        let gs = layer.backward_sparse(&rows, &dy).unwrap();
        let gd = layer.backward(&dense, &dy, false).unwrap();
        assert!(gs.dw.data().iter().zip(gd.dw.data()).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(gs.db, gd.db);
    }
}
