//! Box projection and the projected-gradient quantities built on it.
//!
//! Every function here works on plain slices. Infinite bounds are stored as
//! IEEE infinities and only ever take part in comparisons, so no
//! `inf - inf` style arithmetic can occur.

use crate::error::{Error, Result};

/// Axis-aligned feasible set `{x : lower <= x <= upper}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            // `!(lo <= hi)` also rejects NaN on either side.
            if !(lo <= hi) || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidBounds {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` on every coordinate.
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; n], vec![upper; n])
    }

    /// The nonnegative orthant `x >= 0`.
    pub fn nonnegative(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    /// All of `R^n`.
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// Fails unless `x` lies in the box exactly (no tolerance).
    pub fn check_feasible(&self, x: &[f64]) -> Result<()> {
        self.check_dim(x.len())?;
        for (index, ((&v, &lo), &hi)) in x.iter().zip(&self.lower).zip(&self.upper).enumerate() {
            if !(lo <= v && v <= hi) {
                return Err(Error::Infeasible {
                    index,
                    value: v,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check_feasible(x).is_ok()
    }

    /// Clamps `y` into the box in place. Length must already match.
    pub fn project_in_place(&self, y: &mut [f64]) {
        debug_assert_eq!(y.len(), self.dim());
        for ((v, &lo), &hi) in y.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.max(lo).min(hi);
        }
    }
}

/// Orthogonal projection onto the box: `min(max(y_i, l_i), u_i)` per coordinate.
pub fn project(y: &[f64], bounds: &Bounds) -> Result<Vec<f64>> {
    bounds.check_dim(y.len())?;
    let mut out = y.to_vec();
    bounds.project_in_place(&mut out);
    Ok(out)
}

/// Projected-gradient direction `p = P(x - g) - x` for a feasible `x`.
///
/// `x + t p` stays feasible for every `t` in `[0, 1]`, and `g . p <= -|p|^2`.
pub fn direction(x: &[f64], g: &[f64], bounds: &Bounds) -> Result<Vec<f64>> {
    bounds.check_feasible(x)?;
    bounds.check_dim(g.len())?;
    // Piecewise form, so that inside coordinates get exactly `-g_i` rather
    // than the rounded `(x_i - g_i) - x_i`.
    Ok(x.iter()
        .zip(g)
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|((&xi, &gi), (&lo, &hi))| {
            let y = xi - gi;
            if y < lo {
                lo - xi
            } else if y > hi {
                hi - xi
            } else {
                -gi
            }
        })
        .collect())
}

/// Where `x_i - g_i` falls relative to `[l_i, u_i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Side {
    Below = 1,
    Inside = 2,
    Above = 3,
}

impl Side {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Per-coordinate classification of `x - g` against the box. Two indicators
/// agree exactly when the projections of `x - g` share the same active set
/// structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TernaryIndicator {
    states: Vec<Side>,
}

impl TernaryIndicator {
    pub fn from_states(states: Vec<Side>) -> Self {
        Self { states }
    }

    pub fn states(&self) -> &[Side] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Classifies each coordinate of `x - g`. Ties with a bound count as inside.
pub fn ternary_indicator(x: &[f64], g: &[f64], bounds: &Bounds) -> Result<TernaryIndicator> {
    bounds.check_dim(x.len())?;
    bounds.check_dim(g.len())?;
    let states = x
        .iter()
        .zip(g)
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|((&xi, &gi), (&lo, &hi))| {
            let y = xi - gi;
            if y < lo {
                Side::Below
            } else if y > hi {
                Side::Above
            } else {
                Side::Inside
            }
        })
        .collect();
    Ok(TernaryIndicator { states })
}

/// Euclidean norm of the difference of the state codes; zero iff `a == b`.
pub fn residual(a: &TernaryIndicator, b: &TernaryIndicator) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let sq: u32 = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(&sa, &sb)| {
            let d = i32::from(sa.code()) - i32::from(sb.code());
            (d * d) as u32
        })
        .sum();
    Ok(f64::from(sq).sqrt())
}

/// Stationarity measure `|P(x - grad f(x)) - x|`.
pub fn stationarity(x: &[f64], full_grad: &[f64], bounds: &Bounds) -> Result<f64> {
    Ok(norm(&direction(x, full_grad, bounds)?))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
