//! Composite objectives `F(w) = (1/n) sum_i loss(w; d_i) + psi(w)`.
//!
//! Coordinate gradients are computed from a [`ResidualState`] that caches the
//! per-sample residuals (squared loss) or margins (logistic loss), so one
//! coordinate gradient costs `O(n)`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::prox::penalty;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `(w^T x - y)^2`, no 1/2 factor.
    SquaredError,
    /// `log(1 + exp(-y w^T x))` with labels in {-1, +1}.
    Logistic,
}

impl Loss {
    /// Curvature factor `c` such that the per-sample coordinate smoothness is
    /// `c * x_j^2`.
    pub fn curvature<T: Scalar>(self) -> T {
        match self {
            Loss::SquaredError => T::of(2.0),
            Loss::Logistic => T::of(0.25),
        }
    }
}

/// Separable regularizer `psi(w) = sum_j psi_j(w_j)`, scaled by the problem's
/// regularization strength (except `Box`, an indicator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer<T> {
    None,
    L1,
    /// `(lambda / 2) ||w||^2`.
    L2Squared,
    Box {
        lo: Vec<T>,
        hi: Vec<T>,
    },
}

/// Coordinate-wise smoothness constants `M_j > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessVector<T>(Vec<T>);

impl<T: Scalar> SmoothnessVector<T> {
    pub fn new(m: Vec<T>) -> Result<Self> {
        if m.is_empty() || m.iter().any(|&x| !(x > T::zero()) || !x.is_finite()) {
            return Err(Error::InvalidProblem(
                "smoothness constants must be positive and finite".into(),
            ));
        }
        Ok(Self(m))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn trace(&self) -> T {
        self.0.iter().copied().sum()
    }

    pub fn max(&self) -> T {
        self.0.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

/// Coordinate-wise Lipschitz constants `L_j > 0` of the per-sample loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzVector<T>(Vec<T>);

impl<T: Scalar> LipschitzVector<T> {
    pub fn new(l: Vec<T>) -> Result<Self> {
        if l.is_empty() || l.iter().any(|&x| !(x > T::zero()) || !x.is_finite()) {
            return Err(Error::InvalidProblem(
                "Lipschitz constants must be positive and finite".into(),
            ));
        }
        Ok(Self(l))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

/// An immutable composite ERM instance.
#[derive(Debug, Clone)]
pub struct Problem<T> {
    dataset: Dataset<T>,
    rows: Vec<T>,
    row_norms: Vec<T>,
    loss: Loss,
    regularizer: Regularizer<T>,
    reg_strength: T,
}

/// Iterate plus cached residuals (`w^T x_i - y_i`) or margins (`y_i w^T x_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualState<T> {
    w: Vec<T>,
    residuals: Vec<T>,
    updates_since_refresh: usize,
    refresh_period: usize,
}

impl<T: Scalar> ResidualState<T> {
    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }
}

/// Sum of `f(i)` over `0..len` with four independent accumulators so the
/// additions pipeline.
#[inline(always)]
fn lane_sum<T: Scalar>(len: usize, mut f: impl FnMut(usize) -> T) -> T {
    let mut acc = [T::zero(); 4];
    let body = len - len % 4;
    let mut i = 0;
    while i < body {
        acc[0] += f(i);
        acc[1] += f(i + 1);
        acc[2] += f(i + 2);
        acc[3] += f(i + 3);
        i += 4;
    }
    while i < len {
        acc[0] += f(i);
        i += 1;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

#[inline]
fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `log(1 + exp(-m))`, stable for large `|m|`.
#[inline]
fn logistic_loss<T: Scalar>(m: T) -> T {
    (-m).max(T::zero()) + (-m.abs()).exp().ln_1p()
}

impl<T: Scalar> Problem<T> {
    pub fn new(
        dataset: Dataset<T>,
        loss: Loss,
        regularizer: Regularizer<T>,
        reg_strength: T,
    ) -> Result<Self> {
        if !(reg_strength >= T::zero()) || !reg_strength.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "regularization strength must be >= 0, got {reg_strength}"
            )));
        }
        if loss == Loss::Logistic
            && dataset
                .labels()
                .iter()
                .any(|&y| y != T::one() && y != -T::one())
        {
            return Err(Error::InvalidProblem(
                "logistic labels must be -1 or +1".into(),
            ));
        }
        if let Regularizer::Box { lo, hi } = &regularizer {
            if lo.len() != dataset.p() || hi.len() != dataset.p() {
                return Err(Error::DimensionMismatch {
                    expected: dataset.p(),
                    got: lo.len().min(hi.len()),
                });
            }
            if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                return Err(Error::InvalidProblem("box bounds need lo <= hi".into()));
            }
        }
        let rows = dataset.to_row_major();
        let row_norms = rows
            .chunks(dataset.p())
            .map(|r| r.iter().map(|&x| x * x).sum::<T>().sqrt())
            .collect();
        Ok(Self {
            dataset,
            rows,
            row_norms,
            loss,
            regularizer,
            reg_strength,
        })
    }

    pub fn dataset(&self) -> &Dataset<T> {
        &self.dataset
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn regularizer(&self) -> &Regularizer<T> {
        &self.regularizer
    }

    pub fn reg_strength(&self) -> T {
        self.reg_strength
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    pub fn p(&self) -> usize {
        self.dataset.p()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        let p = self.p();
        &self.rows[i * p..(i + 1) * p]
    }

    /// `||x_i||_2`.
    #[inline]
    pub fn row_norm(&self, i: usize) -> T {
        self.row_norms[i]
    }

    fn check_dim(&self, w: &[T]) -> Result<()> {
        if w.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                got: w.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn residual_of(&self, i: usize, w: &[T]) -> T {
        let x = self.row(i);
        let w = &w[..x.len()];
        let dot = lane_sum(x.len(), |j| x[j] * w[j]);
        let y = self.dataset.labels()[i];
        match self.loss {
            Loss::SquaredError => dot - y,
            Loss::Logistic => y * dot,
        }
    }

    #[inline]
    fn sample_loss(&self, r: T) -> T {
        match self.loss {
            Loss::SquaredError => r * r,
            Loss::Logistic => logistic_loss(r),
        }
    }

    /// Derivative of the per-sample loss w.r.t. `w^T x_i`, from its cached
    /// residual / margin.
    #[inline]
    fn link_derivative(&self, i: usize, r: T) -> T {
        match self.loss {
            Loss::SquaredError => T::of(2.0) * r,
            Loss::Logistic => -self.dataset.labels()[i] * sigmoid(-r),
        }
    }

    /// Smooth part `f(w)`.
    pub fn smooth_value(&self, w: &[T]) -> T {
        let n = T::of_usize(self.n());
        (0..self.n())
            .map(|i| self.sample_loss(self.residual_of(i, w)))
            .sum::<T>()
            / n
    }

    /// `F(w) = f(w) + psi(w)`; `+inf` outside a box constraint.
    pub fn evaluate(&self, w: &[T]) -> T {
        self.smooth_value(w) + penalty(&self.regularizer, self.reg_strength, w)
    }

    pub fn penalty(&self, w: &[T]) -> T {
        penalty(&self.regularizer, self.reg_strength, w)
    }

    /// `F` at the state's iterate, using cached residuals.
    pub fn evaluate_state(&self, st: &ResidualState<T>) -> T {
        let n = T::of_usize(self.n());
        let f = st.residuals.iter().map(|&r| self.sample_loss(r)).sum::<T>() / n;
        f + self.penalty(&st.w)
    }

    pub fn state(&self, w: Vec<T>) -> Result<ResidualState<T>> {
        self.check_dim(&w)?;
        let residuals = (0..self.n()).map(|i| self.residual_of(i, &w)).collect();
        Ok(ResidualState {
            w,
            residuals,
            updates_since_refresh: 0,
            refresh_period: self.n() * self.p(),
        })
    }

    pub fn zero_state(&self) -> ResidualState<T> {
        self.state(vec![T::zero(); self.p()])
            .expect("dimension matches")
    }

    /// Recomputes all residuals from the iterate.
    pub fn refresh(&self, st: &mut ResidualState<T>) {
        for (i, r) in st.residuals.iter_mut().enumerate() {
            *r = self.residual_of(i, &st.w);
        }
        st.updates_since_refresh = 0;
    }

    /// Sets `w_j += delta` and patches residuals from column `j`. A full
    /// refresh runs every `n * p` updates to bound round-off drift.
    pub fn update_state(&self, st: &mut ResidualState<T>, j: usize, delta: T) {
        if delta == T::zero() {
            return;
        }
        st.w[j] += delta;
        let col = self.dataset.column(j);
        match self.loss {
            Loss::SquaredError => {
                for (r, &x) in st.residuals.iter_mut().zip(col) {
                    *r += delta * x;
                }
            }
            Loss::Logistic => {
                for ((r, &x), &y) in st.residuals.iter_mut().zip(col).zip(self.dataset.labels()) {
                    *r += delta * y * x;
                }
            }
        }
        st.updates_since_refresh += 1;
        if st.updates_since_refresh >= st.refresh_period {
            self.refresh(st);
        }
    }

    /// Replaces the iterate and recomputes residuals.
    pub fn reset_state(&self, st: &mut ResidualState<T>, w: &[T]) {
        st.w.copy_from_slice(w);
        self.refresh(st);
    }

    /// `grad_j f(w)` in `O(n)` from cached residuals.
    #[inline]
    pub fn grad_coord(&self, st: &ResidualState<T>, j: usize) -> T {
        let n = T::of_usize(self.n());
        let col = self.dataset.column(j);
        match self.loss {
            Loss::SquaredError => {
                let r = &st.residuals[..col.len()];
                let s = lane_sum(col.len(), |i| col[i] * r[i]);
                T::of(2.0) * s / n
            }
            Loss::Logistic => {
                let s: T = col
                    .iter()
                    .zip(&st.residuals)
                    .zip(self.dataset.labels())
                    .map(|((&x, &m), &y)| y * x * sigmoid(-m))
                    .sum();
                -s / n
            }
        }
    }

    /// Coordinate gradient of the `i`-th sample's loss.
    #[inline]
    pub fn sample_grad_coord(&self, st: &ResidualState<T>, i: usize, j: usize) -> T {
        self.link_derivative(i, st.residuals[i]) * self.dataset.get(i, j)
    }

    /// `(1/n) sum_i clip(grad_j loss(w; d_i), c)`.
    #[inline]
    pub fn clipped_grad_coord(&self, st: &ResidualState<T>, j: usize, c: T) -> T {
        if c.is_infinite() {
            return self.grad_coord(st, j);
        }
        let n = T::of_usize(self.n());
        let col = self.dataset.column(j);
        let two = T::of(2.0);
        let clamp = |g: T| g.max(-c).min(c);
        let r = &st.residuals[..col.len()];
        let s: T = match self.loss {
            Loss::SquaredError => lane_sum(col.len(), |i| clamp(two * col[i] * r[i])),
            Loss::Logistic => {
                let y = &self.dataset.labels()[..col.len()];
                lane_sum(col.len(), |i| clamp(-y[i] * col[i] * sigmoid(-r[i])))
            }
        };
        s / n
    }

    /// Full gradient of the smooth part.
    pub fn full_gradient(&self, w: &[T]) -> Result<Vec<T>> {
        let st = self.state(w.to_vec())?;
        Ok((0..self.p()).map(|j| self.grad_coord(&st, j)).collect())
    }

    /// Scalar `s` with `grad loss(w; d_i) = s x_i`.
    #[inline]
    pub fn sample_gradient_scale(&self, i: usize, w: &[T]) -> T {
        self.link_derivative(i, self.residual_of(i, w))
    }

    /// Writes `grad loss(w; d_i)` into `out`.
    pub fn sample_gradient(&self, i: usize, w: &[T], out: &mut [T]) {
        let g = self.link_derivative(i, self.residual_of(i, w));
        for (o, &x) in out.iter_mut().zip(self.row(i)) {
            *o = g * x;
        }
    }

    /// Coordinate-wise smoothness `M_j = c/n ||X_j||^2` (`c = 2` squared,
    /// `1/4` logistic), floored at `1e-12`.
    pub fn smoothness_constants(&self) -> SmoothnessVector<T> {
        let n = T::of_usize(self.n());
        let c: T = self.loss.curvature();
        let m = (0..self.p())
            .map(|j| {
                let sq: T = self.dataset.column(j).iter().map(|&x| x * x).sum();
                (c * sq / n).max(T::floor_constant())
            })
            .collect();
        SmoothnessVector(m)
    }

    /// `L_j = max_i |x_ij|` for the logistic loss.
    pub fn lipschitz_constants(&self) -> Result<LipschitzVector<T>> {
        match self.loss {
            Loss::SquaredError => Err(Error::UnboundedLipschitz),
            Loss::Logistic => Ok(LipschitzVector(
                (0..self.p())
                    .map(|j| {
                        self.dataset
                            .column(j)
                            .iter()
                            .fold(T::zero(), |m, x| m.max(x.abs()))
                            .max(T::floor_constant())
                    })
                    .collect(),
            )),
        }
    }

    /// Global smoothness bound `c/n ||X||_op^2`, with the operator norm
    /// estimated by 100 power iterations on `X^T X`.
    pub fn global_smoothness(&self) -> T {
        let (n, p) = (self.n(), self.p());
        let mut v = vec![T::one() / T::of_usize(p).sqrt(); p];
        let mut xv = vec![T::zero(); n];
        let mut lambda = T::zero();
        for _ in 0..100 {
            for (i, o) in xv.iter_mut().enumerate() {
                *o = self.row(i).iter().zip(&v).map(|(&x, &vj)| x * vj).sum();
            }
            for (j, vj) in v.iter_mut().enumerate() {
                *vj = self
                    .dataset
                    .column(j)
                    .iter()
                    .zip(&xv)
                    .map(|(&x, &u)| x * u)
                    .sum();
            }
            let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
            if norm == T::zero() {
                break;
            }
            lambda = norm;
            for vj in v.iter_mut() {
                *vj /= norm;
            }
        }
        let c: T = self.loss.curvature();
        (c * lambda / T::of_usize(n)).max(T::floor_constant())
    }
}
