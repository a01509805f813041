use rand::Rng;

use crate::kernel::Matrix;
use crate::rng::{stream_rng, streams, substream};
use crate::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    /// `k × d`.
    pub centroids: Matrix,
    /// Total squared distance of every point to its assigned centroid.
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the
/// lower index.
fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, then proportional to the squared
/// distance to the closest chosen centre.
fn seed_centroids<R: Rng>(x: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = x.rows();
    let mut centroids = Matrix::zeros(k, x.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // Every point coincides with a centre already.
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn assign(x: &Matrix, centroids: &Matrix, assignments: &mut [usize]) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (i, a) in assignments.iter_mut().enumerate() {
        let (c, d) = nearest(x.row(i), centroids);
        changed |= *a != c;
        *a = c;
        inertia += d;
    }
    (changed, inertia)
}

/// Moves every centroid to the mean of its points. An empty cluster is
/// re-seeded at the point farthest from its current centroid.
fn update(x: &Matrix, assignments: &[usize], centroids: &mut Matrix) {
    let (k, d) = centroids.shape();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        for (s, v) in sums.row_mut(a).iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let mut taken = vec![false; x.rows()];
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                *dst = s / n;
            }
        } else {
            let far = (0..x.rows())
                .filter(|&i| !taken[i])
                .map(|i| (i, sq_dist(x.row(i), centroids.row(assignments[i]))))
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            taken[far.0] = true;
            centroids.row_mut(c).copy_from_slice(x.row(far.0));
        }
    }
}

/// One Lloyd run; also returns the inertia after every assignment step.
pub(crate) fn lloyd<R: Rng>(x: &Matrix, k: usize, max_iters: usize, rng: &mut R) -> (Clustering, Vec<f64>) {
    let mut centroids = seed_centroids(x, k, rng);
    let mut assignments = vec![usize::MAX; x.rows()];
    let mut trace = Vec::new();
    let mut iter = 0;
    loop {
        let (changed, inertia) = assign(x, &centroids, &mut assignments);
        trace.push(inertia);
        if !changed || iter == max_iters {
            break;
        }
        update(x, &assignments, &mut centroids);
        iter += 1;
    }
    let inertia = *trace.last().expect("at least one assignment");
    (
        Clustering {
            assignments,
            centroids,
            inertia,
        },
        trace,
    )
}

/// Lloyd's algorithm with k-means++ seeding; the lowest-inertia result of
/// `restarts` runs is returned (earliest run wins ties). Restart `r` draws
/// from its own seeded stream.
pub fn kmeans(x: &Matrix, k: usize, restarts: usize, max_iters: usize, seed: u64) -> Result<Clustering> {
    if k == 0 || k > x.rows() {
        return Err(Error::Argument(format!(
            "k-means needs 1 <= k <= n (k = {k}, n = {})",
            x.rows()
        )));
    }
    x.ensure_finite()?;
    let mut best: Option<Clustering> = None;
    for r in 0..restarts.max(1) {
        let mut rng = stream_rng(seed, substream(streams::KMEANS, r as u64));
        let (c, _) = lloyd(x, k, max_iters, &mut rng);
        if best.as_ref().is_none_or(|b| c.inertia < b.inertia) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(p: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(&p.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn two_obvious_groups() {
        let x = pts(&[[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]]);
        let c = kmeans(&x, 2, 10, 100, 1).unwrap();
        assert_eq!(c.assignments[0], c.assignments[1]);
        assert_eq!(c.assignments[2], c.assignments[3]);
        assert_ne!(c.assignments[0], c.assignments[2]);
        assert!((c.inertia - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_is_mean() {
        let x = pts(&[[1.0, 2.0], [3.0, 6.0], [5.0, 1.0]]);
        let c = kmeans(&x, 1, 3, 100, 0).unwrap();
        assert!(c.assignments.iter().all(|&a| a == 0));
        assert!((c.centroids.get(0, 0) - 3.0).abs() < 1e-12);
        assert!((c.centroids.get(0, 1) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let x = pts(&[[1.0, 2.0], [3.0, 6.0], [5.0, 1.0], [0.0, 0.0]]);
        let c = kmeans(&x, 4, 10, 100, 0).unwrap();
        assert_eq!(c.inertia, 0.0);
        let mut a = c.assignments.clone();
        a.sort_unstable();
        assert_eq!(a, [0, 1, 2, 3]);
        assert!(kmeans(&x, 5, 1, 10, 0).is_err());
        assert!(kmeans(&x, 0, 1, 10, 0).is_err());
    }

    #[test]
    fn inertia_never_increases_within_a_run() {
        let mut rng = stream_rng(8, 0);
        for _ in 0..20 {
            let data: Vec<f64> = (0..60 * 3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = Matrix::from_vec(60, 3, data).unwrap();
            let (c, trace) = lloyd(&x, 5, 100, &mut rng);
            assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{trace:?}");
            for i in 0..x.rows() {
                assert_eq!(nearest(x.row(i), &c.centroids).0, c.assignments[i]);
            }
        }
    }

    #[test]
    fn duplicate_points_and_determinism() {
        let x = pts(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]);
        let a = kmeans(&x, 3, 5, 50, 4).unwrap();
        let b = kmeans(&x, 3, 5, 50, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.inertia, 0.0);
    }
}
