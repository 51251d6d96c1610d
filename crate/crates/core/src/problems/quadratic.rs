use rand::Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use super::FiniteSum;
use crate::error::{Error, Result};
use crate::fev::CostModel;
use crate::geometry::Bounds;
use crate::rng::{stream_rng, Stream};
use crate::sampling::WeightVector;

/// Parameters of a synthetic strongly convex quadratic family.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraticSpec {
    pub dim: usize,
    pub components: usize,
    /// Ratio of the largest to smallest base eigenvalue.
    pub condition: f64,
    /// 0 gives identical components; larger values perturb curvature and
    /// centers per component.
    pub heterogeneity: f64,
    /// Largest eigenvalue of any component Hessian.
    pub max_curvature: f64,
    /// Base centers are uniform in `[-center_spread, center_spread]`.
    pub center_spread: f64,
    pub lower: f64,
    pub upper: f64,
    /// Nonuniform weight masses; uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for QuadraticSpec {
    fn default() -> Self {
        Self {
            dim: 10,
            components: 20,
            condition: 10.0,
            heterogeneity: 0.1,
            max_curvature: 1.0,
            center_spread: 1.5,
            lower: -1.0,
            upper: 1.0,
            weights: None,
            seed: 0,
        }
    }
}

/// `f_i(x) = 1/2 (x - m_i)' A_i (x - m_i)` with symmetric positive definite `A_i`.
#[derive(Debug, Clone)]
pub struct QuadraticSuite {
    n: usize,
    hessians: Vec<Vec<f64>>,
    centers: Vec<Vec<f64>>,
    /// Eigenvalues of each `A_i` (shared eigenvectors).
    eigenvalues: Vec<Vec<f64>>,
    weights: WeightVector,
    bounds: Bounds,
}

/// Random orthogonal matrix (row-major) by Gram-Schmidt on Gaussian columns.
fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= proj * ci;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            cols.push(v);
        }
    }
    let mut q = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            q[i * n + j] = c[i];
        }
    }
    q
}

impl QuadraticSuite {
    pub fn generate(spec: &QuadraticSpec) -> Result<Self> {
        let n = spec.dim;
        if n == 0 || spec.components == 0 {
            return Err(Error::InvalidConfig("quadratic suite needs dim and components > 0".into()));
        }
        if !(spec.condition >= 1.0) || !(spec.max_curvature > 0.0) || !(spec.heterogeneity >= 0.0) {
            return Err(Error::InvalidConfig(
                "quadratic suite needs condition >= 1, max_curvature > 0, heterogeneity >= 0".into(),
            ));
        }
        if !(spec.center_spread >= 0.0) || !spec.center_spread.is_finite() {
            return Err(Error::InvalidConfig("center_spread must be finite and >= 0".into()));
        }
        let bounds = Bounds::uniform(n, spec.lower, spec.upper)?;
        let weights = match &spec.weights {
            Some(m) if m.len() != spec.components => {
                return Err(Error::DimensionMismatch {
                    expected: spec.components,
                    found: m.len(),
                })
            }
            Some(m) => WeightVector::from_masses(m)?,
            None => WeightVector::uniform(spec.components),
        };

        let mut rng = stream_rng(spec.seed, Stream::Init);
        let q = random_orthogonal(n, &mut rng);
        let h = spec.heterogeneity;
        let top = spec.max_curvature / (1.0 + 0.5 * h);
        let base_eigs: Vec<f64> = (0..n)
            .map(|j| {
                let frac = if n == 1 { 0.0 } else { j as f64 / (n - 1) as f64 };
                top * spec.condition.powf(-frac)
            })
            .collect();
        let base_center: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-1.0..=1.0) * spec.center_spread)
            .collect();

        let mut hessians = Vec::with_capacity(spec.components);
        let mut centers = Vec::with_capacity(spec.components);
        let mut eigenvalues = Vec::with_capacity(spec.components);
        for _ in 0..spec.components {
            let eig: Vec<f64> = base_eigs
                .iter()
                .map(|&l| l * (1.0 + h * (rng.random::<f64>() - 0.5)))
                .collect();
            let center: Vec<f64> = base_center
                .iter()
                .map(|&m| m + h * rng.random_range(-1.0..=1.0))
                .collect();
            let mut a = vec![0.0; n * n];
            for r in 0..n {
                for c in r..n {
                    let v: f64 = (0..n).map(|k| q[r * n + k] * eig[k] * q[c * n + k]).sum();
                    a[r * n + c] = v;
                    a[c * n + r] = v;
                }
            }
            hessians.push(a);
            centers.push(center);
            eigenvalues.push(eig);
        }
        Ok(Self {
            n,
            hessians,
            centers,
            eigenvalues,
            weights,
            bounds,
        })
    }

    /// Replaces the box, keeping the components.
    pub fn with_bounds(mut self, bounds: Bounds) -> Result<Self> {
        if bounds.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: bounds.dim(),
            });
        }
        self.bounds = bounds;
        Ok(self)
    }

    pub fn hessian(&self, i: usize) -> &[f64] {
        &self.hessians[i]
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i]
    }

    /// Largest component-Hessian eigenvalue; a gradient Lipschitz constant
    /// for every `f_i` and for `f`.
    pub fn lipschitz(&self) -> f64 {
        self.eigenvalues
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Smallest component-Hessian eigenvalue; `f` is at least this strongly convex.
    pub fn strong_convexity(&self) -> f64 {
        self.eigenvalues
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `(sum w_i A_i, sum w_i A_i m_i)`, so `grad f(x) = A x - b`.
    pub fn aggregate(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for (i, &w) in self.weights.as_slice().iter().enumerate() {
            let ai = &self.hessians[i];
            for (acc, v) in a.iter_mut().zip(ai) {
                *acc += w * v;
            }
            for r in 0..n {
                let am: f64 = (0..n).map(|c| ai[r * n + c] * self.centers[i][c]).sum();
                b[r] += w * am;
            }
        }
        (a, b)
    }

    /// Upper bound on `f` over the box, `None` if the box is unbounded.
    pub fn value_upper_bound(&self) -> Option<f64> {
        let (lo, hi) = (self.bounds.lower(), self.bounds.upper());
        if lo.iter().chain(hi).any(|v| !v.is_finite()) {
            return None;
        }
        let mut total = 0.0;
        for (i, &w) in self.weights.as_slice().iter().enumerate() {
            let li = self.eigenvalues[i].iter().copied().fold(0.0, f64::max);
            let far: f64 = self.centers[i]
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&m, (&l, &u))| (l - m).powi(2).max((u - m).powi(2)))
                .sum();
            total += w * 0.5 * li * far;
        }
        Some(total)
    }
}

impl FiniteSum for QuadraticSuite {
    fn dim(&self) -> usize {
        self.n
    }

    fn weights(&self) -> &WeightVector {
        &self.weights
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.n;
        let a = &self.hessians[i];
        let r: Vec<f64> = x.iter().zip(&self.centers[i]).map(|(a, b)| a - b).collect();
        (0..n)
            .map(|row| {
                let ar: f64 = a[row * n..(row + 1) * n].iter().zip(&r).map(|(p, q)| p * q).sum();
                0.5 * r[row] * ar
            })
            .sum()
    }

    fn component_value_grad(&self, i: usize, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let n = self.n;
        let a = &self.hessians[i];
        let r: Vec<f64> = x.iter().zip(&self.centers[i]).map(|(a, b)| a - b).collect();
        let mut value = 0.0;
        for row in 0..n {
            let ar: f64 = a[row * n..(row + 1) * n].iter().zip(&r).map(|(p, q)| p * q).sum();
            grad[row] += scale * ar;
            value += 0.5 * r[row] * ar;
        }
        value
    }

    fn cost_model(&self) -> CostModel {
        CostModel::quadratic(self.n)
    }
}
