//! Separable proximal operators.
//!
//! `prox_{t psi_j}(v) = argmin_u 1/2 (u - v)^2 + t psi_j(u)`, applied one
//! coordinate at a time.

use crate::objective::Regularizer;
use crate::Scalar;

/// Soft-thresholding with `sign(0) = 0`.
#[inline]
pub fn soft_threshold<T: Scalar>(v: T, threshold: T) -> T {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        T::zero()
    }
}

/// Proximal step of coordinate `j` with step `t > 0` and strength `lambda`.
#[inline]
pub fn apply_prox<T: Scalar>(reg: &Regularizer<T>, lambda: T, v: T, t: T, j: usize) -> T {
    match reg {
        Regularizer::None => v,
        Regularizer::L1 => soft_threshold(v, t * lambda),
        Regularizer::L2Squared => v / (T::one() + t * lambda),
        Regularizer::Box { lo, hi } => v.max(lo[j]).min(hi[j]),
    }
}

/// Value of `psi_j(u)`; `+inf` outside a box.
#[inline]
pub fn penalty_coord<T: Scalar>(reg: &Regularizer<T>, lambda: T, u: T, j: usize) -> T {
    match reg {
        Regularizer::None => T::zero(),
        Regularizer::L1 => lambda * u.abs(),
        Regularizer::L2Squared => lambda * u * u / T::of(2.0),
        Regularizer::Box { lo, hi } => {
            if u >= lo[j] && u <= hi[j] {
                T::zero()
            } else {
                T::infinity()
            }
        }
    }
}

/// `psi(w) = sum_j psi_j(w_j)`.
pub fn penalty<T: Scalar>(reg: &Regularizer<T>, lambda: T, w: &[T]) -> T {
    w.iter()
        .enumerate()
        .map(|(j, &u)| penalty_coord(reg, lambda, u, j))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimizes `1/2 (u - v)^2 + t psi_j(u)` by a dense scan followed by
    /// golden-section refinement.
    fn numeric_prox(reg: &Regularizer<f64>, lambda: f64, v: f64, t: f64, j: usize) -> f64 {
        let obj = |u: f64| 0.5 * (u - v) * (u - v) + t * penalty_coord(reg, lambda, u, j);
        let (lo, hi) = match reg {
            Regularizer::Box { lo, hi } => (lo[j], hi[j]),
            _ => (-(v.abs() + 10.0), v.abs() + 10.0),
        };
        let steps = 4000;
        let h = (hi - lo) / steps as f64;
        let best = (0..=steps)
            .map(|k| lo + h * k as f64)
            .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
            .unwrap();
        let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if obj(c) <= obj(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let mid = 0.5 * (a + b);
        [lo, mid, hi]
            .into_iter()
            .min_by(|x, y| obj(*x).total_cmp(&obj(*y)))
            .unwrap()
    }

    fn regs() -> Vec<Regularizer<f64>> {
        vec![
            Regularizer::None,
            Regularizer::L1,
            Regularizer::L2Squared,
            Regularizer::Box {
                lo: vec![-1.5, 0.5],
                hi: vec![2.0, 0.75],
            },
        ]
    }

    #[test]
    fn closed_forms() {
        assert_eq!(apply_prox(&Regularizer::L1, 1.0, 3.0, 1.0, 0), 2.0);
        assert_eq!(apply_prox(&Regularizer::L1, 1.0, 0.5, 1.0, 0), 0.0);
        assert_eq!(apply_prox(&Regularizer::L1, 1.0, -3.0, 1.0, 0), -2.0);
        assert_eq!(apply_prox(&Regularizer::L2Squared, 1.0, 4.0, 1.0, 0), 2.0);
        assert_eq!(apply_prox(&Regularizer::<f64>::None, 1.0, 4.0, 1.0, 0), 4.0);
        let b = Regularizer::Box {
            lo: vec![-1.0],
            hi: vec![1.0],
        };
        assert_eq!(apply_prox(&b, 1.0, 4.0, 1.0, 0), 1.0);
        assert_eq!(apply_prox(&b, 1.0, -4.0, 1.0, 0), -1.0);
        assert_eq!(soft_threshold(0.0f64, 0.0), 0.0);
    }

    #[test]
    fn matches_numeric_minimization() {
        let mut state = 17u64;
        let mut unif = move || {
            state = crate::rng::mix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for reg in regs() {
            for _ in 0..200 {
                let v = 8.0 * unif() - 4.0;
                let t = 0.05 + 2.0 * unif();
                let lambda = 2.0 * unif();
                let j = (unif() * 2.0) as usize;
                let exact = apply_prox(&reg, lambda, v, t, j);
                let numeric = numeric_prox(&reg, lambda, v, t, j);
                assert!(
                    (exact - numeric).abs() < 1e-6,
                    "{reg:?} v={v} t={t} l={lambda}: {exact} vs {numeric}"
                );
            }
        }
    }

    #[test]
    fn fixed_points() {
        for reg in [Regularizer::L1, Regularizer::L2Squared] {
            assert_eq!(apply_prox(&reg, 3.0, 0.0, 0.7, 0), 0.0);
        }
        let b = Regularizer::Box {
            lo: vec![-1.0],
            hi: vec![1.0],
        };
        assert_eq!(apply_prox(&b, 1.0, 0.3, 0.7, 0), 0.3);
    }

    proptest! {
        #[test]
        fn non_expansive(a in -50.0f64..50.0, b in -50.0f64..50.0, t in 1e-3f64..10.0, lambda in 0.0f64..5.0) {
            for reg in regs() {
                for j in 0..2 {
                    let pa = apply_prox(&reg, lambda, a, t, j);
                    let pb = apply_prox(&reg, lambda, b, t, j);
                    prop_assert!((pa - pb).abs() <= (a - b).abs() + 1e-13 * (1.0 + a.abs() + b.abs()));
                }
            }
        }

        #[test]
        fn vanishing_strength_is_identity(v in -50.0f64..50.0, t in 1e-3f64..10.0) {
            for reg in [Regularizer::L1, Regularizer::L2Squared, Regularizer::None] {
                prop_assert!((apply_prox(&reg, 0.0, v, t, 0) - v).abs() <= 1e-12);
                prop_assert!((apply_prox(&reg, 1.0, v, 1e-15, 0) - v).abs() <= 1e-12);
            }
        }
    }
}
