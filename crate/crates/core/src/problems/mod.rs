//! Weighted finite-sum objectives `f(x) = sum_i w_i f_i(x)` over a box.

mod logistic;
mod nn;
mod quadratic;

pub use logistic::{logistic_component, LogisticRegression};
pub use nn::{nn_component, NnArchitecture, NeuralNetwork, PROB_CLAMP};
pub use quadratic::{QuadraticSpec, QuadraticSuite};

use crate::fev::CostModel;
use crate::geometry::Bounds;
use crate::sampling::WeightVector;

/// Component oracles of a weighted finite sum.
///
/// Oracles are pure and reentrant. Index bounds are the caller's
/// responsibility here; the free `*_component` functions check them.
pub trait FiniteSum: Sync {
    /// Decision dimension `n`.
    fn dim(&self) -> usize;

    fn weights(&self) -> &WeightVector;

    fn bounds(&self) -> &Bounds;

    fn num_components(&self) -> usize {
        self.weights().len()
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64;

    /// Adds `scale * grad f_i(x)` into `grad` and returns `f_i(x)`.
    fn component_value_grad(&self, i: usize, x: &[f64], scale: f64, grad: &mut [f64]) -> f64;

    fn cost_model(&self) -> CostModel;
}

/// Overflow-safe `log(1 + exp(t))`.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Overflow-safe logistic sigmoid.
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
