use crate::objective::SmoothnessVector;
use crate::Scalar;

/// `g * min(1, c / |g|)`.
#[inline]
pub fn clip_scalar<T: Scalar>(g: T, c: T) -> T {
    if g > c {
        c
    } else if g < -c {
        -c
    } else {
        g
    }
}

/// Scales `g` in place to an l2 norm of at most `c`; returns the factor used.
pub fn clip_l2<T: Scalar>(g: &mut [T], c: T) -> T {
    let norm = g.iter().map(|&x| x * x).sum::<T>().sqrt();
    if norm > c {
        let s = c / norm;
        for x in g.iter_mut() {
            *x *= s;
        }
        s
    } else {
        T::one()
    }
}

/// Per-coordinate thresholds `C_j = sqrt(M_j / tr(M)) * C`.
pub fn coordinate_thresholds<T: Scalar>(m: &SmoothnessVector<T>, c: T) -> Vec<T> {
    let tr = m.trace();
    m.as_slice()
        .iter()
        .map(|&mj| (mj / tr).sqrt() * c)
        .collect()
}
