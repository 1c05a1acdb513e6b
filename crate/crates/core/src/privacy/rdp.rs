//! Renyi differential privacy curves.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of non-integer orders in `(1, 2)` of the default grid.
const FINE_ORDERS: usize = 64;
const MAX_ORDER: u32 = 256;

/// `epsilon(alpha)` sampled on a strictly increasing grid of orders `> 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdpCurve {
    alphas: Vec<f64>,
    epsilons: Vec<f64>,
}

impl RdpCurve {
    pub fn new(alphas: Vec<f64>, epsilons: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != epsilons.len() {
            return Err(Error::GridMismatch);
        }
        if alphas.iter().any(|&a| !(a > 1.0)) || alphas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(
                "RDP orders must be > 1 and strictly increasing".into(),
            ));
        }
        if epsilons.iter().any(|&e| !(e >= 0.0)) {
            return Err(Error::InvalidConfig(
                "RDP epsilons must be nonnegative".into(),
            ));
        }
        Ok(Self { alphas, epsilons })
    }

    pub fn zero(alphas: Vec<f64>) -> Result<Self> {
        let eps = vec![0.0; alphas.len()];
        Self::new(alphas, eps)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    /// Composition of `k` copies of this curve.
    pub fn repeated(&self, k: u64) -> Self {
        Self {
            alphas: self.alphas.clone(),
            epsilons: self.epsilons.iter().map(|e| e * k as f64).collect(),
        }
    }
}

/// Integers `2..=256` plus 64 log-spaced orders `1 + 10^t`, `t in [-3, 0)`.
pub fn default_alphas() -> Vec<f64> {
    let fine =
        (0..FINE_ORDERS).map(|k| 1.0 + 10f64.powf(-3.0 + 3.0 * k as f64 / FINE_ORDERS as f64));
    fine.chain(integer_alphas()).collect()
}

/// `2..=256`: the orders on which the subsampled Gaussian bound is evaluated.
pub fn integer_alphas() -> Vec<f64> {
    (2..=MAX_ORDER).map(f64::from).collect()
}

/// Gaussian mechanism: `epsilon(alpha) = sensitivity^2 alpha / (2 sigma^2)`.
pub fn rdp_gaussian(sensitivity: f64, sigma: f64, alphas: &[f64]) -> Result<RdpCurve> {
    if sigma == 0.0 {
        return Err(Error::InfinitePrivacyLoss);
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise scale must be positive, got {sigma}"
        )));
    }
    let rho = sensitivity * sensitivity / (2.0 * sigma * sigma);
    RdpCurve::new(alphas.to_vec(), alphas.iter().map(|a| rho * a).collect())
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Sampled Gaussian mechanism with sampling rate `q` and noise multiplier
/// `sigma_bar`, for integer orders:
///
/// `epsilon(alpha) = 1/(alpha-1) log sum_k C(alpha,k) (1-q)^(alpha-k) q^k exp(k(k-1) / (2 sigma_bar^2))`
///
/// evaluated in log space.
pub fn rdp_subsampled_gaussian(q: f64, sigma_bar: f64, alphas: &[f64]) -> Result<RdpCurve> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "sampling rate must lie in (0, 1], got {q}"
        )));
    }
    if sigma_bar == 0.0 {
        return Err(Error::InfinitePrivacyLoss);
    }
    if !(sigma_bar > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise multiplier must be positive, got {sigma_bar}"
        )));
    }
    let log_q = q.ln();
    let log_1mq = (-q).ln_1p();
    let inv = 1.0 / (2.0 * sigma_bar * sigma_bar);
    let mut eps = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if alpha.fract() != 0.0 || alpha < 2.0 {
            return Err(Error::UnsupportedOrder(alpha));
        }
        let a = alpha as u64;
        let mut log_binom = 0.0f64;
        let mut acc = f64::NEG_INFINITY;
        for k in 0..=a {
            if k > 0 {
                log_binom += ((a - k + 1) as f64).ln() - (k as f64).ln();
            }
            let rest = a - k;
            let tail = if rest == 0 {
                0.0
            } else {
                rest as f64 * log_1mq
            };
            let head = if k == 0 { 0.0 } else { k as f64 * log_q };
            let kf = k as f64;
            acc = log_add_exp(acc, log_binom + tail + head + kf * (kf - 1.0) * inv);
        }
        eps.push((acc / (alpha - 1.0)).max(0.0));
    }
    RdpCurve::new(alphas.to_vec(), eps)
}

/// Pointwise sum of curves sharing one grid.
pub fn compose(curves: &[RdpCurve]) -> Result<RdpCurve> {
    let first = curves.first().ok_or(Error::GridMismatch)?;
    let mut eps = vec![0.0; first.alphas.len()];
    for c in curves {
        if c.alphas != first.alphas {
            return Err(Error::GridMismatch);
        }
        for (e, x) in eps.iter_mut().zip(&c.epsilons) {
            *e += x;
        }
    }
    RdpCurve::new(first.alphas.clone(), eps)
}

/// Converts to `(epsilon, delta)`-DP: `min_alpha epsilon(alpha) + log(1/delta)/(alpha-1)`.
/// Returns `(epsilon, argmin alpha)`.
pub fn rdp_to_dp(curve: &RdpCurve, delta: f64) -> (f64, f64) {
    let log_inv_delta = -delta.ln();
    curve
        .alphas
        .iter()
        .zip(&curve.epsilons)
        .map(|(&a, &e)| (e + log_inv_delta / (a - 1.0), a))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("curves are nonempty")
}

/// Exact conversion of the linear curve `rho * alpha` over all real `alpha > 1`:
/// `epsilon = rho + 2 sqrt(rho log(1/delta))` at `alpha = 1 + sqrt(log(1/delta)/rho)`.
pub fn gaussian_epsilon_continuous(rho: f64, delta: f64) -> (f64, f64) {
    let l = -delta.ln();
    (rho + 2.0 * (rho * l).sqrt(), 1.0 + (l / rho).sqrt())
}
