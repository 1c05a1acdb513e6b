//! Hyperparameter grids.

use serde::{Deserialize, Serialize};

/// `count` log-uniformly spaced values from `lo` to `hi`, both included.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            let last = (count - 1) as f64;
            (0..count)
                .map(|k| match k {
                    0 => lo,
                    k if k == count - 1 => hi,
                    k => 10f64.powf(a + (b - a) * k as f64 / last),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dp_cd_steps: Vec<f64>,
    pub dp_sgd_steps: Vec<f64>,
    pub clips: Vec<f64>,
    pub passes: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        default_grid()
    }
}

/// 10 DP-CD steps in `[1e-2, 10]`, 10 DP-SGD steps in `[1e-6, 1]`, 100 clipping
/// scales in `[1e-3, 1e6]` and passes `{2, 5, 10, 20, 50}`.
pub fn default_grid() -> Grid {
    Grid {
        dp_cd_steps: log_space(1e-2, 10.0, 10),
        dp_sgd_steps: log_space(1e-6, 1.0, 10),
        clips: log_space(1e-3, 1e6, 100),
        passes: vec![2, 5, 10, 20, 50],
    }
}

/// Every `stride`-th element, starting with the first.
pub fn every_nth<T: Clone>(values: &[T], stride: usize) -> Vec<T> {
    values.iter().step_by(stride.max(1)).cloned().collect()
}
