//! Relative errors and run summaries.

use serde::Serialize;

/// Below this `|F*|` the absolute gap is reported instead.
pub const ABSOLUTE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeError {
    pub value: f64,
    /// `value` is the absolute gap `F - F*` because `F*` is (nearly) zero.
    pub absolute: bool,
}

/// `(F - F*) / |F*|`, or `F - F*` when `|F*| < 1e-12`.
pub fn relative_error(f: f64, f_star: f64) -> RelativeError {
    if f_star.abs() < ABSOLUTE_THRESHOLD {
        RelativeError {
            value: f - f_star,
            absolute: true,
        }
    } else {
        RelativeError {
            value: (f - f_star) / f_star.abs(),
            absolute: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Summary {
    /// Min / mean / max; any non-finite value makes the mean infinite.
    pub fn of(values: &[f64]) -> Summary {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = if values.iter().all(|v| v.is_finite()) {
            values.iter().sum::<f64>() / values.len() as f64
        } else {
            f64::INFINITY
        };
        Summary { min, mean, max }
    }
}
