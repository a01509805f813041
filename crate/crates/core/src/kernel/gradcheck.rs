/// Outcome of a central-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Worst `|a − n| / max(|a|, |n|, 1e−8)` over all coordinates.
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn is_empty(&self) -> bool {
        self.analytic.is_empty()
    }
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Compares the analytic gradient returned by `loss` at `params` with
/// `(f(θ + ε·e_i) − f(θ − ε·e_i)) / 2ε` for every coordinate.
///
/// `loss` must be deterministic: freeze dropout masks and sampling noise.
pub fn finite_diff_check<F>(mut loss: F, params: &[f64], epsilon: f64, tolerance: f64) -> GradCheckReport
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    if params.is_empty() {
        return GradCheckReport {
            max_rel_error: 0.0,
            worst_index: None,
            analytic: Vec::new(),
            numeric: Vec::new(),
            passed: true,
        };
    }
    let (_, analytic) = loss(params);
    assert_eq!(analytic.len(), params.len(), "gradient length must match parameters");
    let mut theta = params.to_vec();
    let mut numeric = Vec::with_capacity(params.len());
    let (mut worst, mut worst_index) = (0.0, None);
    for i in 0..params.len() {
        let orig = theta[i];
        theta[i] = orig + epsilon;
        let (up, _) = loss(&theta);
        theta[i] = orig - epsilon;
        let (down, _) = loss(&theta);
        theta[i] = orig;
        let n = (up - down) / (2.0 * epsilon);
        let err = relative_error(analytic[i], n);
        if err > worst || worst_index.is_none() {
            worst = err;
            worst_index = Some(i);
        }
        numeric.push(n);
    }
    GradCheckReport {
        max_rel_error: worst,
        worst_index,
        analytic,
        numeric,
        passed: worst <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic() {
        let quad = |p: &[f64]| (0.5 * p.iter().map(|v| v * v).sum::<f64>(), p.to_vec());
        let report = finite_diff_check(quad, &[3.0, -2.0], 1e-5, 1e-9);
        assert_eq!(report.analytic, vec![3.0, -2.0]);
        assert!(report.max_rel_error < 1e-9, "{report:?}");
        assert!(report.passed);
    }

    #[test]
    fn vacuous_and_detects_wrong_gradient() {
        let report = finite_diff_check(|_| (0.0, vec![]), &[], 1e-5, 1e-4);
        assert!(report.is_empty() && report.passed);
        let wrong = |p: &[f64]| (p[0] * p[0], vec![p[0]]);
        let report = finite_diff_check(wrong, &[1.0], 1e-5, 1e-4);
        assert!(!report.passed);
        assert!((report.max_rel_error - 0.5).abs() < 1e-6);
    }
}
