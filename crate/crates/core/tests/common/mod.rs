//! Independent oracles for the integration tests. Nothing here calls the
//! library's geometry or solver code.
#![allow(dead_code)]

use asbox::fev::CostModel;
use asbox::geometry::Bounds;
use asbox::problems::{FiniteSum, QuadraticSuite};
use asbox::rng::{stream_rng, Stream};
use asbox::sampling::{IndexSampler, SamplePlan, WeightVector};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

/// Componentwise `f_i(x) = 1/2 sum_j a_ij (x_j - m_ij)^2`.
#[derive(Debug, Clone)]
pub struct DiagQuadratics {
    pub curv: Vec<Vec<f64>>,
    pub centers: Vec<Vec<f64>>,
    pub weights: WeightVector,
    pub bounds: Bounds,
}

impl DiagQuadratics {
    pub fn new(curv: Vec<Vec<f64>>, centers: Vec<Vec<f64>>, weights: Vec<f64>, bounds: Bounds) -> Self {
        Self {
            curv,
            centers,
            weights: WeightVector::new(weights).unwrap(),
            bounds,
        }
    }
}

impl FiniteSum for DiagQuadratics {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }

    fn weights(&self) -> &WeightVector {
        &self.weights
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.curv[i])
            .zip(&self.centers[i])
            .map(|((x, a), m)| 0.5 * a * (x - m) * (x - m))
            .sum()
    }

    fn component_value_grad(&self, i: usize, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        for (j, g) in grad.iter_mut().enumerate() {
            *g += scale * self.curv[i][j] * (x[j] - self.centers[i][j]);
        }
        self.component_value(i, x)
    }

    fn cost_model(&self) -> CostModel {
        CostModel::quadratic(self.dim())
    }
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|j| {
            y[j] = x[j] + h;
            let fp = f(&y);
            y[j] = x[j] - h;
            let fm = f(&y);
            y[j] = x[j];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|v| v * v).sum::<f64>().sqrt())
        .max(1e-8);
    diff / scale
}

/// Projection by picking, per coordinate, the nearest of `{y, l, u}` that
/// lies in `[l, u]`.
pub fn brute_project(y: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    y.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&l, &u))| {
            [v, l, u]
                .into_iter()
                .filter(|c| *c >= l && *c <= u)
                .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
                .unwrap()
        })
        .collect()
}

/// Minimizer of `1/2 x'Ax - b'x` over the box, found by trying every
/// assignment of each coordinate to {lower, free, upper} and keeping the
/// one that satisfies the KKT conditions. Exponential; meant for `n <= 10`.
pub fn kkt_box_qp(a: &[f64], b: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = b.len();
    let am = DMatrix::from_row_slice(n, n, a);
    let bv = DVector::from_column_slice(b);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut pattern = vec![0u8; n];
        for p in pattern.iter_mut() {
            *p = (c % 3) as u8;
            c /= 3;
        }
        if pattern
            .iter()
            .enumerate()
            .any(|(j, &p)| (p == 0 && !lo[j].is_finite()) || (p == 2 && !hi[j].is_finite()))
        {
            continue;
        }
        let mut x = vec![0.0; n];
        for j in 0..n {
            match pattern[j] {
                0 => x[j] = lo[j],
                2 => x[j] = hi[j],
                _ => {}
            }
        }
        let free: Vec<usize> = (0..n).filter(|&j| pattern[j] == 1).collect();
        if !free.is_empty() {
            let k = free.len();
            let mut sub = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for (r, &i) in free.iter().enumerate() {
                rhs[r] = bv[i];
                for j in 0..n {
                    if pattern[j] != 1 {
                        rhs[r] -= am[(i, j)] * x[j];
                    }
                }
                for (cc, &j) in free.iter().enumerate() {
                    sub[(r, cc)] = am[(i, j)];
                }
            }
            let Some(sol) = sub.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                x[i] = sol[r];
            }
        }
        let xv = DVector::from_column_slice(&x);
        let g = &am * &xv - &bv;
        let tol = 1e-12;
        let ok = (0..n).all(|j| match pattern[j] {
            0 => g[j] >= -tol,
            2 => g[j] <= tol,
            _ => x[j] >= lo[j] - tol && x[j] <= hi[j] + tol,
        });
        if ok {
            let f = 0.5 * xv.dot(&(&am * &xv)) - bv.dot(&xv);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        }
    }
    best.expect("strictly convex QP has a KKT point").1
}

pub fn quadratic_minimizer(q: &QuadraticSuite) -> Vec<f64> {
    let (a, b) = q.aggregate();
    kkt_box_qp(&a, &b, q.bounds().lower(), q.bounds().upper())
}

/// Straightforward re-implementation of one AS-BOX iteration used to
/// cross-check the library. Draws from the same named streams in the same
/// order.
pub struct OracleSolver<'p, P: FiniteSum> {
    pub problem: &'p P,
    pub x: Vec<f64>,
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub c1: f64,
    pub c: f64,
    pub big_c: f64,
    pub d_size: usize,
    /// `true`: classify with `x - g >= 0` only (nonnegativity constraints).
    pub binary: bool,
    sampler: IndexSampler,
    batch: ChaCha8Rng,
    extra: ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub t: f64,
    pub accepted: bool,
    pub increased: bool,
    pub pattern_mismatch: bool,
}

impl<'p, P: FiniteSum> OracleSolver<'p, P> {
    pub fn new(problem: &'p P, x0: Vec<f64>, n0: usize, seed: u64, binary: bool) -> Self {
        Self {
            problem,
            x: x0,
            n: n0,
            k: 0,
            beta: 0.1,
            c1: 1e-4,
            c: 1e-4,
            big_c: 1.0,
            d_size: 1,
            binary,
            sampler: IndexSampler::new(problem.weights()).unwrap(),
            batch: stream_rng(seed, Stream::Batch),
            extra: stream_rng(seed, Stream::Additional),
        }
    }

    fn eval(&self, plan: &SamplePlan, x: &[f64]) -> (f64, Vec<f64>) {
        let p = self.problem;
        let mut g = vec![0.0; x.len()];
        let f = match plan {
            SamplePlan::Full { .. } => {
                let mut s = 0.0;
                for (i, &w) in p.weights().as_slice().iter().enumerate() {
                    s += w * p.component_value_grad(i, x, w, &mut g);
                }
                s
            }
            SamplePlan::Draws(idx) => {
                let scale = 1.0 / idx.len() as f64;
                let mut s = 0.0;
                for &i in idx {
                    s += p.component_value_grad(i, x, scale, &mut g);
                }
                s * scale
            }
        };
        (f, g)
    }

    fn value(&self, plan: &SamplePlan, x: &[f64]) -> f64 {
        let p = self.problem;
        match plan {
            SamplePlan::Full { .. } => p
                .weights()
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &w)| w * p.component_value(i, x))
                .sum(),
            SamplePlan::Draws(idx) => idx.iter().map(|&i| p.component_value(i, x)).sum::<f64>() / idx.len() as f64,
        }
    }

    fn dir_and_pattern(&self, g: &[f64]) -> (Vec<f64>, Vec<u8>) {
        let (lo, hi) = (self.problem.bounds().lower(), self.problem.bounds().upper());
        let mut p = Vec::with_capacity(g.len());
        let mut pat = Vec::with_capacity(g.len());
        for j in 0..g.len() {
            let y = self.x[j] - g[j];
            if self.binary {
                // nonnegativity: p = max(x - g, 0) - x
                if y >= 0.0 {
                    p.push(-g[j]);
                    pat.push(1);
                } else {
                    p.push(-self.x[j]);
                    pat.push(0);
                }
            } else if y < lo[j] {
                p.push(lo[j] - self.x[j]);
                pat.push(1);
            } else if y > hi[j] {
                p.push(hi[j] - self.x[j]);
                pat.push(3);
            } else {
                p.push(-g[j]);
                pat.push(2);
            }
        }
        (p, pat)
    }

    pub fn step(&mut self) -> OracleRow {
        let total = self.problem.num_components();
        let full = self.n >= total;
        let eps = ((self.k + 1) as f64).powf(-1.1);
        let plan = if full {
            SamplePlan::Full { components: total }
        } else {
            self.sampler.draw(self.n, &mut self.batch).unwrap()
        };
        let (f0, g) = self.eval(&plan, &self.x);
        let (p, pat) = self.dir_and_pattern(&g);
        let slope = g.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>().min(0.0);
        let bounds = self.problem.bounds();
        let trial_at = |t: f64| {
            let mut y: Vec<f64> = self.x.iter().zip(&p).map(|(x, p)| x + t * p).collect();
            bounds.project_in_place(&mut y);
            y
        };
        let mut t = 1.0;
        let cand = loop {
            let y = trial_at(t);
            if self.value(&plan, &y) <= f0 + self.c1 * t * slope + eps {
                break y;
            }
            t *= self.beta;
        };
        let (accepted, increased, mismatch) = if full {
            (true, false, false)
        } else {
            let d = self.sampler.draw(self.d_size, &mut self.extra).unwrap();
            let (fd, gd) = self.eval(&d, &self.x);
            let (s, dpat) = self.dir_and_pattern(&gd);
            let decrease = self.value(&d, &cand) <= fd - self.c * s.iter().map(|v| v * v).sum::<f64>() + self.big_c * eps;
            let mismatch = dpat != pat;
            let increased = mismatch || !decrease;
            if increased {
                self.n = ((1.1 * self.n as f64 * (1.0 - 1e-12)).ceil() as usize).max(self.n + 1).min(total);
            }
            (decrease, increased, mismatch)
        };
        if accepted {
            self.x = cand;
        }
        self.k += 1;
        OracleRow {
            t,
            accepted,
            increased,
            pattern_mismatch: mismatch,
        }
    }
}
