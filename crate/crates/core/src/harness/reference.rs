//! High-accuracy reference solutions for convex problems.
//!
//! Deterministic full-gradient projected descent with a Barzilai-Borwein
//! trial step and monotone Armijo backtracking along the projection arc.

use std::fmt::Write as _;
use std::path::Path;

use crate::driver::full_metrics;
use crate::error::{Error, Result};
use crate::geometry::{dot, norm_sq, stationarity};
use crate::problems::FiniteSum;
use crate::sampling::{minibatch_value, minibatch_value_grad, SamplePlan};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub stationarity: f64,
    pub iterations: usize,
}

/// Runs until `|d(x)| <= tol`; errors when `max_iters` runs out first.
pub fn reference_solution<P: FiniteSum + ?Sized>(
    problem: &P,
    x0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<ReferenceSolution> {
    let bounds = problem.bounds();
    let mut x = x0.to_vec();
    bounds.project_in_place(&mut x);
    let full = SamplePlan::Full {
        components: problem.num_components(),
    };
    let (mut f, mut g) = minibatch_value_grad(problem, &full, &x)?;
    let mut alpha = 1.0;
    for k in 0..max_iters {
        let d = stationarity(&x, &g, bounds)?;
        if d <= tol {
            return Ok(ReferenceSolution {
                x,
                stationarity: d,
                iterations: k,
            });
        }
        let mut a = alpha;
        let mut trial = vec![0.0; x.len()];
        let mut accepted = None;
        for _ in 0..80 {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&g) {
                *t = xi - a * gi;
            }
            bounds.project_in_place(&mut trial);
            let step: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
            let ft = minibatch_value(problem, &full, &trial)?;
            // the relative slack absorbs roundoff once decreases fall below ulp(f)
            if ft <= f + 1e-4 * dot(&g, &step) + 4.0 * f64::EPSILON * f.abs() {
                accepted = Some(step);
                break;
            }
            a *= 0.5;
        }
        let Some(s) = accepted else {
            return Err(Error::ReferenceNotConverged {
                stationarity: d,
                iterations: k,
            });
        };
        let (fn_, gn) = minibatch_value_grad(problem, &full, &trial)?;
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        alpha = if sy > 0.0 { (norm_sq(&s) / sy).clamp(1e-10, 1e10) } else { 1.0 };
        x = trial;
        f = fn_;
        g = gn;
    }
    let d = stationarity(&x, &g, bounds)?;
    if d <= tol {
        return Ok(ReferenceSolution {
            x,
            stationarity: d,
            iterations: max_iters,
        });
    }
    Err(Error::ReferenceNotConverged {
        stationarity: d,
        iterations: max_iters,
    })
}

/// Writes `tol` and then one coordinate per line, each in shortest
/// round-trip form.
pub fn save_reference(path: impl AsRef<Path>, x: &[f64], tol: f64) -> Result<()> {
    let mut s = format!("tol {tol:?}\n");
    for v in x {
        writeln!(s, "{v:?}").expect("writing to a String cannot fail");
    }
    if let Some(dir) = path.as_ref().parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads a saved reference and re-checks its stationarity against `problem`.
pub fn load_reference<P: FiniteSum + ?Sized>(path: impl AsRef<Path>, problem: &P) -> Result<ReferenceSolution> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let tol = match lines.next() {
        Some((_, head)) => head
            .strip_prefix("tol ")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: "expected `tol <value>`".into(),
            })?,
        None => return Err(Error::Parse { line: 1, message: "empty reference file".into() }),
    };
    let x = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: x.len(),
        });
    }
    problem.bounds().check_feasible(&x)?;
    let (_, d) = full_metrics(problem, &x)?;
    if d > tol {
        return Err(Error::ReferenceNotConverged {
            stationarity: d,
            iterations: 0,
        });
    }
    Ok(ReferenceSolution {
        x,
        stationarity: d,
        iterations: 0,
    })
}
