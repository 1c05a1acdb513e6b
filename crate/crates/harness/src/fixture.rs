//! Strongly convex fixture `F(w) = (mu / 2n) sum_i ||w - d_i||^2` over a box.

use dpcd_core::data::feature_bounds;
use dpcd_core::{Dataset, Problem};
use dpcd_core::{Loss, Regularizer};

use crate::error::{HarnessError, Result};

/// Builds the fixture as a squared-error problem on `n p` rows: row `(i, j)`
/// has features `c e_j` and label `c d_ij` with `c^2 = mu p / 2`, so that
/// `(1/np) sum_(i,j) (c w_j - c d_ij)^2 = (mu / 2n) sum_i ||w - d_i||^2`.
///
/// With `L_j = 2 mu max_i |d_ij|` the coordinate Lipschitz constant over the
/// box, the box is `W = prod_j [-L_j / 2mu, L_j / 2mu]`, which contains every
/// point and hence the row mean. The labels of `d` are ignored.
pub fn strongly_convex_fixture(mu: f64, d: &Dataset) -> Result<Problem> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(HarnessError::InvalidSpec(format!(
            "fixture needs mu > 0, got {mu}"
        )));
    }
    let (n, p) = (d.n(), d.p());
    let c = (mu * p as f64 / 2.0).sqrt();
    let rows = n * p;
    let mut features = vec![0.0; rows * p];
    let mut labels = Vec::with_capacity(rows);
    for i in 0..n {
        for j in 0..p {
            let r = i * p + j;
            features[j * rows + r] = c;
            labels.push(c * d.get(i, j));
        }
    }
    let expanded = Dataset::from_columns(rows, p, features, labels)?;
    let half = feature_bounds(d).max_abs;
    let lo = half.iter().map(|h| -h).collect();
    let problem = Problem::new(
        expanded,
        Loss::SquaredError,
        Regularizer::Box { lo, hi: half },
        0.0,
    )?;
    Ok(problem)
}

/// `(1/n) sum_i d_i`, the fixture's minimizer.
pub fn row_mean(d: &Dataset) -> Vec<f64> {
    (0..d.p())
        .map(|j| d.column(j).iter().sum::<f64>() / d.n() as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_matches_definition() {
        let d = Dataset::from_rows(
            &[vec![1.0, -2.0], vec![3.0, 0.5], vec![-1.0, 1.0]],
            vec![0.0; 3],
        )
        .unwrap();
        let mu = 0.7;
        let pb = strongly_convex_fixture(mu, &d).unwrap();
        let w = [0.4, -0.3];
        let direct: f64 = (0..3)
            .map(|i| (0..2).map(|j| (w[j] - d.get(i, j)).powi(2)).sum::<f64>())
            .sum::<f64>()
            * mu
            / (2.0 * 3.0);
        assert!((pb.evaluate(&w) - direct).abs() < 1e-12);
        for m in pb.smoothness_constants().as_slice() {
            assert!((m - mu).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_mu() {
        let d = Dataset::from_rows(&[vec![1.0]], vec![0.0]).unwrap();
        assert!(strongly_convex_fixture(0.0, &d).is_err());
    }
}
