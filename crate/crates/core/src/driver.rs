//! Budgeted iteration loop shared by AS-BOX and the baselines, with
//! out-of-band diagnostics.

use crate::error::Result;
use crate::geometry::{distance, stationarity};
use crate::problems::FiniteSum;
use crate::sampling::{minibatch_value_grad, SamplePlan};

/// Whether the iteration ran on a sample or on the full sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    MiniBatch,
    FullSample,
}

/// One row per iteration. Diagnostics (`f_full`, `stationarity`,
/// `dist_to_ref`) describe the iterate produced by this iteration and are
/// filled only on metric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub k: usize,
    pub n_k: usize,
    pub phase: Phase,
    pub t_k: f64,
    pub backtracks: usize,
    /// Sample objective at the start of the iteration, when the method computes it.
    pub fhat: Option<f64>,
    pub accepted: bool,
    pub increased: bool,
    pub r_residual: f64,
    /// Cumulative cost after this iteration.
    pub fev: u64,
    pub f_full: Option<f64>,
    pub stationarity: Option<f64>,
    pub dist_to_ref: Option<f64>,
}

/// A stochastic first-order method advanced one iteration at a time.
pub trait Method {
    fn name(&self) -> &'static str;
    fn iterate(&self) -> &[f64];
    fn iteration(&self) -> usize;
    fn fev(&self) -> u64;
    fn step(&mut self) -> Result<IterationTrace>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Limits {
    pub max_iters: usize,
    pub fev_budget: Option<u64>,
    /// Stop once `|d(x)| <= tol`; turns on per-iteration stationarity.
    pub stationarity_tol: Option<f64>,
}

impl Limits {
    pub fn iterations(max_iters: usize) -> Self {
        Self {
            max_iters,
            fev_budget: None,
            stationarity_tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Diagnostics<'a> {
    /// Fill diagnostics on rows with `k % every == 0`; 0 disables them.
    pub every: usize,
    pub reference: Option<&'a [f64]>,
}

impl Default for Diagnostics<'_> {
    fn default() -> Self {
        Self {
            every: 10,
            reference: None,
        }
    }
}

/// Full objective and stationarity at `x`. Not charged to any ledger.
pub fn full_metrics<P: FiniteSum + ?Sized>(problem: &P, x: &[f64]) -> Result<(f64, f64)> {
    let plan = SamplePlan::Full {
        components: problem.num_components(),
    };
    let (f, g) = minibatch_value_grad(problem, &plan, x)?;
    Ok((f, stationarity(x, &g, problem.bounds())?))
}

/// Steps `method` until a limit is hit and returns the trace.
pub fn drive<M, P>(method: &mut M, problem: &P, limits: &Limits, diag: Diagnostics<'_>) -> Result<Vec<IterationTrace>>
where
    M: Method + ?Sized,
    P: FiniteSum + ?Sized,
{
    let mut rows = Vec::new();
    if let Some(tol) = limits.stationarity_tol {
        if full_metrics(problem, method.iterate())?.1 <= tol {
            return Ok(rows);
        }
    }
    while method.iteration() < limits.max_iters && limits.fev_budget.is_none_or(|b| method.fev() < b) {
        let mut row = method.step()?;
        let metric_row = diag.every > 0 && row.k % diag.every == 0;
        let mut reached = false;
        if metric_row || limits.stationarity_tol.is_some() {
            let (f, s) = full_metrics(problem, method.iterate())?;
            reached = limits.stationarity_tol.is_some_and(|tol| s <= tol);
            if metric_row {
                row.f_full = Some(f);
                row.dist_to_ref = diag.reference.map(|r| distance(method.iterate(), r));
            }
            row.stationarity = Some(s);
        }
        rows.push(row);
        if reached {
            break;
        }
    }
    Ok(rows)
}
