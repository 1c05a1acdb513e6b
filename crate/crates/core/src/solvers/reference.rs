//! High-precision non-private solver used as the optimum oracle.

use serde::{Deserialize, Serialize};

use crate::objective::Problem;
use crate::prox::apply_prox;
use crate::{Error, Result, Scalar};

pub const DEFAULT_TOL: f64 = 1e-12;
const MAX_CYCLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution<T> {
    pub w: Vec<T>,
    pub objective: f64,
    pub cycles: usize,
    /// False when the cycle cap was hit before the tolerance.
    pub converged: bool,
}

/// Cyclic proximal coordinate descent with `gamma_j = 1 / M_j`, stopped when
/// one full cycle decreases `F` by less than `tol` relative to its value.
pub fn reference_solve<T: Scalar>(pb: &Problem<T>, tol: f64) -> Result<ReferenceSolution<T>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let p = pb.p();
    let steps: Vec<T> = pb
        .smoothness_constants()
        .as_slice()
        .iter()
        .map(|&m| T::one() / m)
        .collect();
    let reg = pb.regularizer();
    let lambda = pb.reg_strength();
    let start = (0..p)
        .map(|j| apply_prox(reg, lambda, T::zero(), steps[j], j))
        .collect();
    let mut st = pb.state(start)?;
    let mut prev = pb.evaluate_state(&st).as_f64();

    for cycle in 1..=MAX_CYCLES {
        for (j, &gamma) in steps.iter().enumerate() {
            let old = st.weights()[j];
            let new = apply_prox(reg, lambda, old - gamma * pb.grad_coord(&st, j), gamma, j);
            if new != old {
                pb.update_state(&mut st, j, new - old);
            }
        }
        pb.refresh(&mut st);
        let value = pb.evaluate_state(&st).as_f64();
        let scale = prev.abs().max(f64::MIN_POSITIVE);
        if prev - value < tol * scale {
            return Ok(ReferenceSolution {
                w: st.weights().to_vec(),
                objective: value.min(prev),
                cycles: cycle,
                converged: true,
            });
        }
        prev = value;
    }
    Ok(ReferenceSolution {
        w: st.weights().to_vec(),
        objective: prev,
        cycles: MAX_CYCLES,
        converged: false,
    })
}
