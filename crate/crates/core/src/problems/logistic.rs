use std::sync::Arc;

use super::{sigmoid, softplus, FiniteSum};
use crate::data_io::SparseDataset;
use crate::error::{Error, Result};
use crate::fev::CostModel;
use crate::geometry::Bounds;
use crate::sampling::WeightVector;

/// Binary logistic loss `log(1 + exp(-b_i a_i . x))` per sample.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    data: Arc<SparseDataset>,
    weights: WeightVector,
    bounds: Bounds,
}

impl LogisticRegression {
    /// Labels must already be encoded as +-1.
    pub fn new(data: Arc<SparseDataset>, weights: WeightVector, bounds: Bounds) -> Result<Self> {
        if data.labels().iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::Labels("logistic regression needs labels in {-1, +1}".into()));
        }
        if weights.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: data.len(),
                found: weights.len(),
            });
        }
        if bounds.dim() != data.n_features() {
            return Err(Error::DimensionMismatch {
                expected: data.n_features(),
                found: bounds.dim(),
            });
        }
        Ok(Self { data, weights, bounds })
    }

    /// Uniform weights and the box `[-1, 1]^n`.
    pub fn with_unit_box(data: Arc<SparseDataset>) -> Result<Self> {
        let n = data.n_features();
        let weights = WeightVector::uniform(data.len());
        Self::new(data, weights, Bounds::uniform(n, -1.0, 1.0)?)
    }

    pub fn data(&self) -> &SparseDataset {
        &self.data
    }
}

impl FiniteSum for LogisticRegression {
    fn dim(&self) -> usize {
        self.data.n_features()
    }

    fn weights(&self) -> &WeightVector {
        &self.weights
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        let margin = self.data.labels()[i] * self.data.row_dot(i, x);
        softplus(-margin)
    }

    fn component_value_grad(&self, i: usize, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let b = self.data.labels()[i];
        let margin = b * self.data.row_dot(i, x);
        self.data.row_axpy(i, -scale * b * sigmoid(-margin), grad);
        softplus(-margin)
    }

    fn cost_model(&self) -> CostModel {
        CostModel::logistic()
    }
}

/// Value and dense gradient of sample `i`.
pub fn logistic_component(problem: &LogisticRegression, i: usize, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    if i >= problem.num_components() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: problem.num_components(),
        });
    }
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: x.len(),
        });
    }
    let mut g = vec![0.0; problem.dim()];
    let v = problem.component_value_grad(i, x, 1.0, &mut g);
    Ok((v, g))
}
