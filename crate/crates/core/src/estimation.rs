//! Private estimation of coordinate-wise smoothness constants with the
//! Laplace mechanism.

use rand::Rng;

use crate::data::{Dataset, FeatureBounds};
use crate::objective::{Loss, SmoothnessVector};
use crate::privacy::laplace_sample;
use crate::{Error, Result, Scalar};

/// Per-sample constant `M_j^(i)`: `2 x^2` for the squared loss, `x^2 / 4`
/// for the logistic loss.
#[inline]
fn per_sample<T: Scalar>(loss: Loss, x: T) -> T {
    let c: T = loss.curvature();
    c * x * x
}

/// Mean over samples of `min(M_j^(i), b_j)`, without noise.
pub fn clipped_smoothness<T: Scalar>(d: &Dataset<T>, loss: Loss, bounds: &[T]) -> Result<Vec<T>> {
    if bounds.len() != d.p() {
        return Err(Error::DimensionMismatch {
            expected: d.p(),
            got: bounds.len(),
        });
    }
    let n = T::of_usize(d.n());
    Ok(bounds
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let s: T = d
                .column(j)
                .iter()
                .map(|&x| per_sample(loss, x).min(b))
                .sum();
            s / n
        })
        .collect())
}

/// Laplace scale `2 b_j p / (n eps')` of coordinate `j`.
pub fn laplace_scale(bound: f64, p: usize, n: usize, eps_prime: f64) -> f64 {
    2.0 * bound * p as f64 / (n as f64 * eps_prime)
}

/// `eps'`-DP estimate of the coordinate-wise smoothness constants. Each of
/// the `p` coordinates spends `eps' / p`; negative outputs are floored at
/// `1e-12`.
pub fn private_smoothness<T: Scalar, R: Rng + ?Sized>(
    d: &Dataset<T>,
    loss: Loss,
    bounds: &[T],
    eps_prime: f64,
    rng: &mut R,
) -> Result<SmoothnessVector<T>> {
    if !(eps_prime > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "estimation epsilon must be positive, got {eps_prime}"
        )));
    }
    if let Some(b) = bounds.iter().find(|b| !(**b > T::zero()) || !b.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothness bounds must be positive and finite, got {b}"
        )));
    }
    let clipped = clipped_smoothness(d, loss, bounds)?;
    let (n, p) = (d.n(), d.p());
    let m = clipped
        .into_iter()
        .zip(bounds)
        .map(|(mean, &b)| {
            let noise = laplace_sample(laplace_scale(b.as_f64(), p, n, eps_prime), rng);
            (mean + T::of(noise)).max(T::floor_constant())
        })
        .collect();
    SmoothnessVector::new(m)
}

/// Bounds `b_j` from the crude feature bound `B_j = 2 max_i |x_ij|`:
/// `2 B_j^2` (squared loss) or `B_j^2 / 4` (logistic), floored at `1e-12`.
pub fn default_bounds<T: Scalar>(fb: &FeatureBounds<T>, loss: Loss) -> Vec<T> {
    fb.max_abs
        .iter()
        .map(|&a| {
            let b = T::of(2.0) * a;
            per_sample(loss, b).max(T::floor_constant())
        })
        .collect()
}
