use crate::kernel::Matrix;
use crate::Result;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// 1 where `p ≥ threshold`, else 0.
pub fn binarize(probabilities: &Matrix, threshold: f64) -> Matrix {
    probabilities.map(|p| if p >= threshold { 1.0 } else { 0.0 })
}

/// Pooled confusion counts over every cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn add(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => {}
        }
    }

    pub fn merge(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    /// Each ratio is 1 when its denominator is 0.
    pub fn scores(&self) -> Scores {
        let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        Scores {
            f1: ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_),
            precision: ratio(self.tp, self.tp + self.fp),
            recall: ratio(self.tp, self.tp + self.fn_),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

pub fn confusion(y: &Matrix, y_hat: &Matrix) -> Result<Confusion> {
    y_hat.expect_shape(y.shape(), "micro_f1")?;
    let mut c = Confusion::default();
    for (&t, &p) in y.data().iter().zip(y_hat.data()) {
        c.add(t != 0.0, p != 0.0);
    }
    Ok(c)
}

/// Micro-averaged F1, precision and recall of binary matrices.
pub fn micro_f1(y: &Matrix, y_hat: &Matrix) -> Result<Scores> {
    Ok(confusion(y, y_hat)?.scores())
}

/// Mean over rows of the cosine between `x_i` and `x̂_i`; a row where either
/// vector has zero norm contributes 0.
pub fn cosine_similarity(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    x_hat.expect_shape(x.shape(), "cosine_similarity")?;
    if x.rows() == 0 {
        return Ok(0.0);
    }
    let total: f64 = (0..x.rows()).map(|i| cosine(x.row(i), x_hat.row(i))).sum();
    Ok(total / x.rows() as f64)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&u, &v) in a.iter().zip(b) {
        dot += u * v;
        na += u * u;
        nb += v * v;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}
