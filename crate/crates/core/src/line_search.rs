//! Nonmonotone Armijo backtracking on a sample-average objective.

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    /// Backtracking factor in `(0, 1)`.
    pub beta: f64,
    /// Armijo slope constant in `(0, 1)`.
    pub c1: f64,
    /// Relaxation added to the right-hand side at this iteration.
    pub eps: f64,
    pub max_backtracks: usize,
}

impl LineSearchParams {
    pub const DEFAULT_MAX_BACKTRACKS: usize = 60;

    pub fn new(beta: f64, c1: f64, eps: f64) -> Result<Self> {
        let p = Self {
            beta,
            c1,
            eps,
            max_backtracks: Self::DEFAULT_MAX_BACKTRACKS,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidConfig(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return Err(Error::InvalidConfig(format!("c1 must lie in (0,1), got {}", self.c1)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidConfig(format!("eps must be finite and >= 0, got {}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Accepted step `beta^backtracks`.
    pub step: f64,
    pub backtracks: usize,
    /// Calls made to the value function.
    pub evaluations: usize,
}

/// Finds the smallest `j >= 0` with
/// `value(beta^j) <= f0 + c1 * beta^j * slope + eps`.
///
/// `slope` is the directional derivative `grad . p`, which must be `<= 0`.
pub fn backtrack<F>(mut value: F, f0: f64, slope: f64, params: &LineSearchParams) -> Result<StepOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    params.validate()?;
    if slope > 0.0 || !slope.is_finite() || !f0.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "line search needs a finite nonpositive slope and finite f0 (slope {slope}, f0 {f0})"
        )));
    }
    let mut t = 1.0;
    for j in 0..=params.max_backtracks {
        let ft = value(t)?;
        if ft <= f0 + params.c1 * t * slope + params.eps {
            return Ok(StepOutcome {
                step: t,
                backtracks: j,
                evaluations: j + 1,
            });
        }
        if j < params.max_backtracks {
            t *= params.beta;
        }
    }
    Err(Error::LineSearchFailed {
        last_step: t,
        backtracks: params.max_backtracks,
    })
}

/// Lower bound `min(1, 2 beta (1 - c1) / L)` on the accepted step when the
/// sampled gradient is `L`-Lipschitz.
pub fn min_step(beta: f64, c1: f64, lipschitz: f64) -> f64 {
    (2.0 * beta * (1.0 - c1) / lipschitz).min(1.0)
}

/// Summable relaxation sequence `eps_k`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsSchedule {
    /// `scale * (k + 1)^(-exponent)` with `exponent > 1`, `k` counted from 0.
    Power { scale: f64, exponent: f64 },
    /// Monotone Armijo.
    Zero,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::Power {
            scale: 1.0,
            exponent: 1.1,
        }
    }
}

impl EpsSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EpsSchedule::Power { scale, exponent } => {
                if !(scale >= 0.0) || !scale.is_finite() || !(exponent > 1.0) || !exponent.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "eps schedule must be summable: scale >= 0, exponent > 1 (got {scale}, {exponent})"
                    )));
                }
                Ok(())
            }
            EpsSchedule::Zero => Ok(()),
        }
    }

    pub fn at(&self, k: usize) -> f64 {
        match *self {
            EpsSchedule::Power { scale, exponent } => scale * ((k + 1) as f64).powf(-exponent),
            EpsSchedule::Zero => 0.0,
        }
    }

    /// An upper bound on `sum_k eps_k`: the first terms summed exactly plus
    /// the integral bound on the tail.
    pub fn total_bound(&self) -> f64 {
        match *self {
            EpsSchedule::Power { scale, exponent } => {
                const HEAD: usize = 100_000;
                let head: f64 = (1..=HEAD).map(|m| (m as f64).powf(-exponent)).sum();
                let tail = (HEAD as f64).powf(1.0 - exponent) / (exponent - 1.0);
                scale * (head + tail)
            }
            EpsSchedule::Zero => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, c1: f64, eps: f64) -> LineSearchParams {
        LineSearchParams::new(beta, c1, eps).unwrap()
    }

    #[test]
    fn large_relaxation_accepts_unit_step() {
        // value(1) - f0 - c1 slope = 10 - 0 + 1e-4 * 1
        let f = |_t: f64| Ok(10.0);
        let eps = 10.0 + 1e-4;
        let out = backtrack(f, 0.0, -1.0, &params(0.1, 1e-4, eps)).unwrap();
        assert_eq!((out.step, out.backtracks, out.evaluations), (1.0, 0, 1));
    }

    #[test]
    fn half_square_accepts_unit_step() {
        // f(x) = x^2/2 at x = 1, p = -1: f(0) = 0 <= 0.5 - 1e-4
        let f = |t: f64| Ok(0.5 * (1.0 - t).powi(2));
        let out = backtrack(f, 0.5, -1.0, &params(0.1, 1e-4, 0.0)).unwrap();
        assert_eq!(out.step, 1.0);
    }

    #[test]
    fn backtracks_until_armijo_holds() {
        // f(x) = 5 x^2 at x = 1 along p = -2, slope = 10 * -2 = -20
        let f = |t: f64| Ok(5.0 * (1.0 - 2.0 * t).powi(2));
        let out = backtrack(f, 5.0, -20.0, &params(0.5, 1e-4, 0.0)).unwrap();
        // t = 1: 5 > 5 - 0.002; t = 0.5: 0 <= 5 - 0.001
        assert_eq!(out.step, 0.5);
        assert_eq!(out.backtracks, 1);
        assert_eq!(out.evaluations, 2);
    }

    #[test]
    fn failure_reports_last_step() {
        let f = |_t: f64| Ok(1.0);
        let mut p = params(0.5, 1e-4, 0.0);
        p.max_backtracks = 3;
        match backtrack(f, 0.0, -1.0, &p) {
            Err(Error::LineSearchFailed { last_step, backtracks }) => {
                assert_eq!(last_step, 0.125);
                assert_eq!(backtracks, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_ascent_slope_and_bad_params() {
        assert!(backtrack(|_| Ok(0.0), 0.0, 1.0, &params(0.5, 0.1, 0.0)).is_err());
        assert!(LineSearchParams::new(1.0, 0.1, 0.0).is_err());
        assert!(LineSearchParams::new(0.5, 0.0, 0.0).is_err());
        assert!(LineSearchParams::new(0.5, 0.1, -1.0).is_err());
    }

    #[test]
    fn min_step_formula() {
        assert_eq!(min_step(0.1, 1e-4, 1.0), 2.0 * 0.1 * (1.0 - 1e-4));
        assert_eq!(min_step(0.5, 0.1, 0.1), 1.0);
    }

    #[test]
    fn power_schedule() {
        let s = EpsSchedule::default();
        assert_eq!(s.at(0), 1.0);
        assert!((s.at(1) - 2f64.powf(-1.1)).abs() < 1e-15);
        // zeta(1.1) = 10.5844...
        let total = s.total_bound();
        assert!(total > 10.58 && total < 10.60, "{total}");
        assert!(EpsSchedule::Power { scale: 1.0, exponent: 1.0 }.validate().is_err());
        assert_eq!(EpsSchedule::Zero.at(5), 0.0);
    }
}
