use rand::Rng;
use rand_distr::StandardNormal;

/// One draw from `N(0, sigma^2)`; exactly 0 when `sigma == 0`.
#[inline]
pub fn gaussian_sample<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    sigma * rng.sample::<f64, _>(StandardNormal)
}

/// One draw from the centered Laplace distribution with the given scale, by
/// inverse CDF.
#[inline]
pub fn laplace_sample<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    // u in (-1/2, 1/2]; 1 - 2|u| stays in [0, 1), so keep drawing
    // until the log is finite.
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let t = 1.0 - 2.0 * u.abs();
        if t > 0.0 {
            return -scale * u.signum() * t.ln();
        }
    }
}
