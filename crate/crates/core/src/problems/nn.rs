use std::sync::Arc;

use super::{sigmoid, FiniteSum};
use crate::data_io::SparseDataset;
use crate::error::{Error, Result};
use crate::fev::CostModel;
use crate::geometry::Bounds;
use crate::sampling::WeightVector;

/// Clamp for the predicted probability inside the cross-entropy logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// One tanh hidden layer feeding a sigmoid output.
///
/// Parameters are flattened as `W1 | b1 | W2 | b2`, `W1` row-major with
/// `hidden` rows of `input` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NnArchitecture {
    pub input: usize,
    pub hidden: usize,
}

/// Borrowed views into a flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub struct NnParams<'a> {
    pub w1: &'a [f64],
    pub b1: &'a [f64],
    pub w2: &'a [f64],
    pub b2: f64,
}

impl NnArchitecture {
    pub fn new(input: usize, hidden: usize) -> Self {
        Self { input, hidden }
    }

    pub fn num_params(&self) -> usize {
        self.hidden * self.input + 2 * self.hidden + 1
    }

    pub fn unflatten<'a>(&self, params: &'a [f64]) -> Result<NnParams<'a>> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                found: params.len(),
            });
        }
        let (w1, rest) = params.split_at(self.hidden * self.input);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, rest) = rest.split_at(self.hidden);
        Ok(NnParams { w1, b1, w2, b2: rest[0] })
    }

    pub fn flatten(&self, p: &NnParams<'_>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(p.w1);
        out.extend_from_slice(p.b1);
        out.extend_from_slice(p.w2);
        out.push(p.b2);
        out
    }

    /// Cross-entropy of sample `i` with target `y` in `{0, 1}`; when `grad`
    /// is given, `scale` times the gradient is added into it.
    fn loss(&self, data: &SparseDataset, i: usize, y: f64, params: &[f64], scale: f64, grad: Option<&mut [f64]>) -> f64 {
        let (h, inp) = (self.hidden, self.input);
        let (idx, val) = data.row(i);
        let w1 = &params[..h * inp];
        let b1 = &params[h * inp..h * inp + h];
        let w2 = &params[h * inp + h..h * inp + 2 * h];
        let b2 = params[h * inp + 2 * h];

        let mut act = vec![0.0; h];
        for (k, a) in act.iter_mut().enumerate() {
            let row = &w1[k * inp..(k + 1) * inp];
            let z: f64 = idx.iter().zip(val).map(|(&j, &v)| row[j] * v).sum::<f64>() + b1[k];
            *a = z.tanh();
        }
        let z2: f64 = w2.iter().zip(&act).map(|(w, a)| w * a).sum::<f64>() + b2;
        let prob = sigmoid(z2);
        let p = prob.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let value = -y * p.ln() - (1.0 - y) * (1.0 - p).ln();

        if let Some(grad) = grad {
            let delta2 = scale * (prob - y);
            let (gw1, rest) = grad.split_at_mut(h * inp);
            let (gb1, rest) = rest.split_at_mut(h);
            let (gw2, gb2) = rest.split_at_mut(h);
            gb2[0] += delta2;
            for k in 0..h {
                gw2[k] += delta2 * act[k];
                let delta1 = delta2 * w2[k] * (1.0 - act[k] * act[k]);
                gb1[k] += delta1;
                let row = &mut gw1[k * inp..(k + 1) * inp];
                for (&j, &v) in idx.iter().zip(val) {
                    row[j] += delta1 * v;
                }
            }
        }
        value
    }
}

/// Binary classifier trained with average cross-entropy.
#[derive(Debug, Clone)]
pub struct NeuralNetwork {
    data: Arc<SparseDataset>,
    targets: Vec<f64>,
    arch: NnArchitecture,
    weights: WeightVector,
    bounds: Bounds,
}

impl NeuralNetwork {
    /// Labels in `{-1, +1}` become targets `(b + 1) / 2`.
    pub fn new(data: Arc<SparseDataset>, hidden: usize, weights: WeightVector, bounds: Bounds) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidConfig("hidden width must be positive".into()));
        }
        if data.labels().iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::Labels("network needs labels in {-1, +1}".into()));
        }
        let arch = NnArchitecture::new(data.n_features(), hidden);
        if weights.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: data.len(),
                found: weights.len(),
            });
        }
        if bounds.dim() != arch.num_params() {
            return Err(Error::DimensionMismatch {
                expected: arch.num_params(),
                found: bounds.dim(),
            });
        }
        let targets = data.labels().iter().map(|b| (b + 1.0) / 2.0).collect();
        Ok(Self {
            data,
            targets,
            arch,
            weights,
            bounds,
        })
    }

    pub fn with_unit_box(data: Arc<SparseDataset>, hidden: usize) -> Result<Self> {
        let d = NnArchitecture::new(data.n_features(), hidden).num_params();
        let w = WeightVector::uniform(data.len());
        Self::new(data, hidden, w, Bounds::uniform(d, -1.0, 1.0)?)
    }

    pub fn architecture(&self) -> NnArchitecture {
        self.arch
    }

    pub fn data(&self) -> &SparseDataset {
        &self.data
    }
}

impl FiniteSum for NeuralNetwork {
    fn dim(&self) -> usize {
        self.arch.num_params()
    }

    fn weights(&self) -> &WeightVector {
        &self.weights
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        self.arch.loss(&self.data, i, self.targets[i], x, 0.0, None)
    }

    fn component_value_grad(&self, i: usize, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        self.arch.loss(&self.data, i, self.targets[i], x, scale, Some(grad))
    }

    fn cost_model(&self) -> CostModel {
        CostModel::nn(self.arch.hidden)
    }
}

/// Loss and gradient of sample `i` for an arbitrary architecture and
/// dataset. Labels in `data` must be +-1.
pub fn nn_component(i: usize, params: &[f64], arch: &NnArchitecture, data: &SparseDataset) -> Result<(f64, Vec<f64>)> {
    if i >= data.len() {
        return Err(Error::IndexOutOfRange { index: i, len: data.len() });
    }
    if arch.input != data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: data.n_features(),
            found: arch.input,
        });
    }
    arch.unflatten(params)?;
    let b = data.labels()[i];
    if b != 1.0 && b != -1.0 {
        return Err(Error::Labels(format!("label {b} is not +-1")));
    }
    let mut g = vec![0.0; arch.num_params()];
    let v = arch.loss(data, i, (b + 1.0) / 2.0, params, 1.0, Some(&mut g));
    Ok((v, g))
}
