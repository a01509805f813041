use nalgebra::{DMatrix, SymmetricEigen};

use crate::kernel::Matrix;
use crate::{Error, Result};

/// Principal components of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `d × m`, orthonormal rows.
    pub components: Matrix,
    pub explained_variance_ratio: Vec<f64>,
}

impl Pca {
    /// Centres `x` with the fitted mean and projects onto the components.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::shape("pca input columns", self.mean.len(), x.cols()));
        }
        centred(x, &self.mean).matmul_t(&self.components)
    }
}

fn centred(x: &Matrix, mean: &[f64]) -> Matrix {
    let mut c = x.clone();
    for r in 0..c.rows() {
        for (v, m) in c.row_mut(r).iter_mut().zip(mean) {
            *v -= m;
        }
    }
    c
}

fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Fits `d` components. The eigen-decomposition runs on whichever of the
/// covariance (`m × m`) or Gram (`n × n`) matrix is smaller. Each component
/// is signed so that its largest-magnitude entry is positive.
pub fn pca_fit(x: &Matrix, d: usize) -> Result<Pca> {
    let (n, m) = x.shape();
    if n < 2 {
        return Err(Error::Argument(format!("pca needs at least 2 samples, got {n}")));
    }
    if d == 0 || d > n.min(m) {
        return Err(Error::Argument(format!(
            "pca dimension {d} outside 1..={}",
            n.min(m)
        )));
    }
    x.ensure_finite()?;
    let mean: Vec<f64> = x.column_sums().into_iter().map(|s| s / n as f64).collect();
    let xc = centred(x, &mean);

    let (values, mut vectors) = if m <= n {
        let eig = SymmetricEigen::new(to_nalgebra(&xc.t_matmul(&xc)?));
        let order = descending(&eig.eigenvalues);
        let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let mut comps = Matrix::zeros(d, m);
        for (k, &i) in order.iter().take(d).enumerate() {
            for j in 0..m {
                comps.set(k, j, eig.eigenvectors[(j, i)]);
            }
        }
        (vals, comps)
    } else {
        // v = Xcᵀ u / √λ for each Gram eigenpair (λ, u).
        let eig = SymmetricEigen::new(to_nalgebra(&xc.matmul_t(&xc)?));
        let order = descending(&eig.eigenvalues);
        let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let mut u = Matrix::zeros(d, n);
        for (k, &i) in order.iter().take(d).enumerate() {
            for r in 0..n {
                u.set(k, r, eig.eigenvectors[(r, i)]);
            }
        }
        let mut comps = u.matmul(&xc)?;
        for k in 0..d {
            let norm = comps.row(k).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                comps.row_mut(k).iter_mut().for_each(|v| *v /= norm);
            }
        }
        (vals, comps)
    };
    complete_basis(&mut vectors, &values);
    for k in 0..d {
        let row = vectors.row_mut(k);
        let pivot = row
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }

    let total: f64 = values.iter().sum();
    let explained_variance_ratio = values
        .iter()
        .take(d)
        .map(|&v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    Ok(Pca {
        mean,
        components: vectors,
        explained_variance_ratio,
    })
}

/// Convenience: fit and project the same data.
pub fn pca_project(x: &Matrix, d: usize) -> Result<(Pca, Matrix)> {
    let pca = pca_fit(x, d)?;
    let z = pca.transform(x)?;
    Ok((pca, z))
}

fn descending(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Directions with (numerically) zero variance are arbitrary; replace them
/// with an orthonormal completion from the standard basis so the component
/// rows stay orthonormal.
fn complete_basis(comps: &mut Matrix, values: &[f64]) {
    let scale = values.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let (d, m) = comps.shape();
    let mut next_basis = 0;
    for k in 0..d {
        if values[k] > scale * 1e-12 {
            continue;
        }
        while next_basis < m {
            let mut v = vec![0.0; m];
            v[next_basis] = 1.0;
            next_basis += 1;
            for p in 0..k {
                let dot: f64 = v.iter().zip(comps.row(p)).map(|(a, b)| a * b).sum();
                for (vi, pi) in v.iter_mut().zip(comps.row(p)) {
                    *vi -= dot * pi;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                comps.row_mut(k).iter_mut().zip(&v).for_each(|(c, x)| *c = x / norm);
                break;
            }
        }
    }
}
