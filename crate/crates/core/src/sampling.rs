//! Weighted index sampling for mini-batches and additional samples, and the
//! sample-average estimators built on top of them.

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;

use crate::error::{Error, Result};
use crate::problems::FiniteSum;

/// Component weights: nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(i) = w.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeights(format!("weight {i} is {}", w[i])));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        Ok(Self { w })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform weights need at least one component");
        Self {
            w: vec![1.0 / n as f64; n],
        }
    }

    /// Normalizes arbitrary nonnegative masses.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidWeights(format!("total mass {total}")));
        }
        let mut w: Vec<f64> = masses.iter().map(|m| m / total).collect();
        // push the rounding residue onto the largest entry
        let residue = 1.0 - w.iter().sum::<f64>();
        if let Some(max) = w
            .iter_mut()
            .max_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
        {
            *max += residue;
        }
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn min(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Which components enter a sample average.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamplePlan {
    /// Every component exactly once, combined with its weight.
    Full { components: usize },
    /// I.i.d. draws (duplicates kept), combined as a plain average.
    Draws(Vec<usize>),
}

impl SamplePlan {
    pub fn size(&self) -> usize {
        match self {
            SamplePlan::Full { components } => *components,
            SamplePlan::Draws(idx) => idx.len(),
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, SamplePlan::Full { .. })
    }
}

/// Categorical sampler over component indices, using an alias table built
/// once per weight vector.
#[derive(Debug, Clone)]
pub struct IndexSampler {
    alias: WeightedAliasIndex<f64>,
}

impl IndexSampler {
    pub fn new(w: &WeightVector) -> Result<Self> {
        let alias = WeightedAliasIndex::new(w.as_slice().to_vec())
            .map_err(|e| Error::InvalidWeights(e.to_string()))?;
        Ok(Self { alias })
    }

    pub fn draw<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<SamplePlan> {
        if size == 0 {
            return Err(Error::InvalidSampleSize(size));
        }
        Ok(SamplePlan::Draws(
            (0..size).map(|_| self.alias.sample(rng)).collect(),
        ))
    }
}

/// `size` i.i.d. indices, each equal to `s` with probability `w_s`.
pub fn draw_sample<R: Rng + ?Sized>(w: &WeightVector, size: usize, rng: &mut R) -> Result<SamplePlan> {
    IndexSampler::new(w)?.draw(size, rng)
}

/// Same distribution as [`draw_sample`]. Callers pass the additional-sample
/// stream, which is never shared with the mini-batch stream.
pub fn draw_additional<R: Rng + ?Sized>(w: &WeightVector, size: usize, rng: &mut R) -> Result<SamplePlan> {
    draw_sample(w, size, rng)
}

fn check_finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_point<P: FiniteSum + ?Sized>(problem: &P, x: &[f64]) -> Result<()> {
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("iterate"));
    }
    Ok(())
}

/// Sample-average objective. A full plan gives the weighted sum `f(x)`.
pub fn minibatch_value<P: FiniteSum + ?Sized>(problem: &P, plan: &SamplePlan, x: &[f64]) -> Result<f64> {
    check_point(problem, x)?;
    let value = match plan {
        SamplePlan::Full { .. } => problem
            .weights()
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &w)| w * problem.component_value(i, x))
            .sum::<f64>(),
        SamplePlan::Draws(idx) => {
            if idx.is_empty() {
                return Err(Error::InvalidSampleSize(0));
            }
            let sum: f64 = idx.iter().map(|&i| problem.component_value(i, x)).sum();
            sum / idx.len() as f64
        }
    };
    check_finite(value, "sample objective")
}

/// Sample-average objective and gradient.
pub fn minibatch_value_grad<P: FiniteSum + ?Sized>(
    problem: &P,
    plan: &SamplePlan,
    x: &[f64],
) -> Result<(f64, Vec<f64>)> {
    check_point(problem, x)?;
    let mut grad = vec![0.0; problem.dim()];
    let value = match plan {
        SamplePlan::Full { .. } => {
            let mut sum = 0.0;
            for (i, &w) in problem.weights().as_slice().iter().enumerate() {
                sum += w * problem.component_value_grad(i, x, w, &mut grad);
            }
            sum
        }
        SamplePlan::Draws(idx) => {
            if idx.is_empty() {
                return Err(Error::InvalidSampleSize(0));
            }
            let scale = 1.0 / idx.len() as f64;
            let mut sum = 0.0;
            for &i in idx {
                sum += problem.component_value_grad(i, x, scale, &mut grad);
            }
            sum * scale
        }
    };
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("sample gradient"));
    }
    Ok((check_finite(value, "sample objective")?, grad))
}

pub fn minibatch_grad<P: FiniteSum + ?Sized>(problem: &P, plan: &SamplePlan, x: &[f64]) -> Result<Vec<f64>> {
    minibatch_value_grad(problem, plan, x).map(|(_, g)| g)
}
