//! Comparison methods: projected stochastic gradient (PSGM) and a simplified
//! stochastic log-barrier method.
//!
//! The barrier method is a reimplementation from its general description,
//! not a replication of any published parameterization: the barrier weight
//! decays as `mu_0 (k + 1)^(-1/2)`, iterates take a plain stochastic
//! gradient step on `f + mu_k b` and are clipped into the box shrunk by
//! `delta_k = margin * mu_k` on each finite side.

use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::driver::{drive, full_metrics, Diagnostics, IterationTrace, Limits, Method, Phase};
use crate::error::{Error, Result};
use crate::fev::FevLedger;
use crate::problems::FiniteSum;
use crate::rng::{stream_rng, Stream};
use rand::Rng;
use crate::sampling::{minibatch_grad, IndexSampler, SamplePlan};

/// Step-size sequence `alpha_k`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant { alpha: f64 },
    /// `alpha * (k + 1)^(-power)`.
    Diminishing { alpha: f64, power: f64 },
}

impl StepSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            StepSchedule::Constant { alpha } => alpha,
            StepSchedule::Diminishing { alpha, power } => alpha * ((k + 1) as f64).powf(-power),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::Constant { alpha } => alpha > 0.0 && alpha.is_finite(),
            StepSchedule::Diminishing { alpha, power } => alpha > 0.0 && alpha.is_finite() && power >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("step schedule must stay positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsgmConfig {
    pub batch_size: usize,
    pub step: StepSchedule,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SipmConfig {
    pub batch_size: usize,
    pub step: StepSchedule,
    /// Initial barrier weight `mu_0`.
    pub mu0: f64,
    /// `delta_k = fraction_margin * mu_k`.
    pub fraction_margin: f64,
    pub seed: u64,
}

impl SipmConfig {
    pub fn mu(&self, k: usize) -> f64 {
        self.mu0 / ((k + 1) as f64).sqrt()
    }
}

fn check_batch(batch: usize) -> Result<()> {
    if batch == 0 {
        Err(Error::InvalidSampleSize(0))
    } else {
        Ok(())
    }
}

/// `x <- P(x - alpha_k g)` with a mini-batch gradient `g`.
pub struct Psgm<'p, P: FiniteSum + ?Sized> {
    problem: &'p P,
    cfg: PsgmConfig,
    sampler: IndexSampler,
    rng: ChaCha8Rng,
    x: Vec<f64>,
    k: usize,
    fev: FevLedger,
}

impl<'p, P: FiniteSum + ?Sized> Psgm<'p, P> {
    pub fn new(problem: &'p P, cfg: PsgmConfig, x0: Vec<f64>) -> Result<Self> {
        check_batch(cfg.batch_size)?;
        cfg.step.validate()?;
        problem.bounds().check_feasible(&x0)?;
        Ok(Self {
            sampler: IndexSampler::new(problem.weights())?,
            rng: stream_rng(cfg.seed, Stream::Batch),
            problem,
            cfg,
            x: x0,
            k: 0,
            fev: FevLedger::new(),
        })
    }
}

/// One projected stochastic gradient step from `x` with sample `plan`.
pub fn psgm_step<P: FiniteSum + ?Sized>(problem: &P, x: &[f64], plan: &SamplePlan, alpha: f64) -> Result<Vec<f64>> {
    problem.bounds().check_feasible(x)?;
    let g = minibatch_grad(problem, plan, x)?;
    let mut next: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
    problem.bounds().project_in_place(&mut next);
    Ok(next)
}

impl<P: FiniteSum + ?Sized> Method for Psgm<'_, P> {
    fn name(&self) -> &'static str {
        "psgm"
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn iteration(&self) -> usize {
        self.k
    }

    fn fev(&self) -> u64 {
        self.fev.total()
    }

    fn step(&mut self) -> Result<IterationTrace> {
        let plan = self.sampler.draw(self.cfg.batch_size, &mut self.rng)?;
        let alpha = self.cfg.step.at(self.k);
        self.x = psgm_step(self.problem, &self.x, &plan, alpha)?;
        self.fev.charge_gradient(self.problem.cost_model(), plan.size());
        let row = IterationTrace {
            k: self.k,
            n_k: self.cfg.batch_size,
            phase: Phase::MiniBatch,
            t_k: alpha,
            backtracks: 0,
            fhat: None,
            accepted: true,
            increased: false,
            r_residual: 0.0,
            fev: self.fev.total(),
            f_full: None,
            stationarity: None,
            dist_to_ref: None,
        };
        self.k += 1;
        Ok(row)
    }
}

/// Default step grid searched by [`tune_psgm_step`].
pub const PSGM_STEP_GRID: [f64; 3] = [1.0, 0.1, 0.01];

/// Picks the constant step from `grid` whose short run ends with the lowest
/// full objective. The runs draw their seed from the tuning stream so they
/// never share randomness with the measured runs.
pub fn tune_psgm_step<P: FiniteSum + ?Sized>(
    problem: &P,
    batch_size: usize,
    grid: &[f64],
    fev_budget: u64,
    x0: &[f64],
    seed: u64,
) -> Result<f64> {
    let tuning_seed: u64 = stream_rng(seed, Stream::Tuning).random();
    let mut best: Option<(f64, f64)> = None;
    for &alpha in grid {
        let cfg = PsgmConfig {
            batch_size,
            step: StepSchedule::Constant { alpha },
            seed: tuning_seed,
        };
        let mut m = Psgm::new(problem, cfg, x0.to_vec())?;
        let limits = Limits {
            max_iters: usize::MAX,
            fev_budget: Some(fev_budget),
            stationarity_tol: None,
        };
        drive(&mut m, problem, &limits, Diagnostics { every: 0, reference: None })?;
        let (f, _) = full_metrics(problem, m.iterate())?;
        if f.is_finite() && best.is_none_or(|(_, bf)| f < bf) {
            best = Some((alpha, f));
        }
    }
    best.map(|(a, _)| a)
        .ok_or_else(|| Error::InvalidConfig("step grid is empty or every run diverged".into()))
}

/// Stochastic log-barrier gradient method.
pub struct Sipm<'p, P: FiniteSum + ?Sized> {
    problem: &'p P,
    cfg: SipmConfig,
    sampler: IndexSampler,
    rng: ChaCha8Rng,
    x: Vec<f64>,
    k: usize,
    fev: FevLedger,
}

impl<'p, P: FiniteSum + ?Sized> Sipm<'p, P> {
    pub fn new(problem: &'p P, cfg: SipmConfig, x0: Vec<f64>) -> Result<Self> {
        check_batch(cfg.batch_size)?;
        cfg.step.validate()?;
        if !(cfg.mu0 > 0.0) || !(cfg.fraction_margin > 0.0 && cfg.fraction_margin < 1.0) {
            return Err(Error::InvalidConfig(
                "barrier method needs mu0 > 0 and fraction_margin in (0,1)".into(),
            ));
        }
        check_interior(problem, &x0)?;
        Ok(Self {
            sampler: IndexSampler::new(problem.weights())?,
            rng: stream_rng(cfg.seed, Stream::Batch),
            problem,
            cfg,
            x: x0,
            k: 0,
            fev: FevLedger::new(),
        })
    }
}

fn check_interior<P: FiniteSum + ?Sized>(problem: &P, x: &[f64]) -> Result<()> {
    let b = problem.bounds();
    b.check_feasible(x)?;
    for (index, ((&v, &lo), &hi)) in x.iter().zip(b.lower()).zip(b.upper()).enumerate() {
        if v <= lo || v >= hi {
            return Err(Error::NotInterior { index });
        }
    }
    Ok(())
}

/// Gradient of `-sum_i [log(x_i - l_i) + log(u_i - x_i)]`, skipping infinite bounds.
pub fn barrier_gradient(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&lo, &hi))| {
            let mut g = 0.0;
            if lo.is_finite() {
                g -= 1.0 / (v - lo);
            }
            if hi.is_finite() {
                g += 1.0 / (hi - v);
            }
            g
        })
        .collect()
}

/// One barrier step from a strictly interior `x` at iteration `k`.
pub fn sipm_step<P: FiniteSum + ?Sized>(
    problem: &P,
    x: &[f64],
    plan: &SamplePlan,
    cfg: &SipmConfig,
    k: usize,
) -> Result<Vec<f64>> {
    check_interior(problem, x)?;
    let b = problem.bounds();
    let g = minibatch_grad(problem, plan, x)?;
    let mu = cfg.mu(k);
    let alpha = cfg.step.at(k);
    let delta = cfg.fraction_margin * mu;
    let bar = barrier_gradient(x, b.lower(), b.upper());
    Ok(x.iter()
        .zip(g.iter().zip(&bar))
        .zip(b.lower().iter().zip(b.upper()))
        .map(|((&v, (&gi, &bi)), (&lo, &hi))| {
            let raw = v - alpha * (gi + mu * bi);
            let (inner_lo, inner_hi) = (lo + delta, hi - delta);
            if inner_lo > inner_hi {
                0.5 * (lo + hi)
            } else {
                raw.max(inner_lo).min(inner_hi)
            }
        })
        .collect())
}

impl<P: FiniteSum + ?Sized> Method for Sipm<'_, P> {
    fn name(&self) -> &'static str {
        "sipm"
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn iteration(&self) -> usize {
        self.k
    }

    fn fev(&self) -> u64 {
        self.fev.total()
    }

    fn step(&mut self) -> Result<IterationTrace> {
        let plan = self.sampler.draw(self.cfg.batch_size, &mut self.rng)?;
        self.x = sipm_step(self.problem, &self.x, &plan, &self.cfg, self.k)?;
        self.fev.charge_gradient(self.problem.cost_model(), plan.size());
        let row = IterationTrace {
            k: self.k,
            n_k: self.cfg.batch_size,
            phase: Phase::MiniBatch,
            t_k: self.cfg.step.at(self.k),
            backtracks: 0,
            fhat: None,
            accepted: true,
            increased: false,
            r_residual: 0.0,
            fev: self.fev.total(),
            f_full: None,
            stationarity: None,
            dist_to_ref: None,
        };
        self.k += 1;
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Bounds;
    use crate::problems::{QuadraticSpec, QuadraticSuite};

    /// f(x) = (x - 2)^2 / 2 on a 1-D box.
    fn shifted_parabola(lower: f64, upper: f64) -> QuadraticSuite {
        let spec = QuadraticSpec {
            dim: 1,
            components: 1,
            heterogeneity: 0.0,
            condition: 1.0,
            max_curvature: 1.0,
            center_spread: 0.0,
            ..Default::default()
        };
        // center_spread 0 puts the center at 0; shift by moving the box instead
        let q = QuadraticSuite::generate(&spec).unwrap();
        q.with_bounds(Bounds::uniform(1, lower - 2.0, upper - 2.0).unwrap()).unwrap()
    }

    #[test]
    fn psgm_hand_example() {
        // in shifted coordinates y = x - 2: f = y^2/2 on [-3, -1], start x = 0 -> y = -2
        let q = shifted_parabola(-1.0, 1.0);
        let full = SamplePlan::Full { components: 1 };
        let next = psgm_step(&q, &[-2.0], &full, 1.0).unwrap();
        // x' = P(2) = 1  <=>  y' = -1
        assert_eq!(next, vec![-1.0]);
    }

    #[test]
    fn psgm_zero_gradient_is_fixed_point() {
        let q = shifted_parabola(-5.0, 5.0);
        let full = SamplePlan::Full { components: 1 };
        assert_eq!(psgm_step(&q, &[0.0], &full, 0.7).unwrap(), vec![0.0]);
    }

    #[test]
    fn psgm_interior_small_step_is_plain_gradient_step() {
        let q = shifted_parabola(-5.0, 5.0);
        let full = SamplePlan::Full { components: 1 };
        let next = psgm_step(&q, &[0.5], &full, 0.1).unwrap();
        assert_eq!(next, vec![0.5 - 0.1 * 0.5]);
    }

    #[test]
    fn barrier_gradient_hand_example() {
        let g = barrier_gradient(&[0.5], &[0.0], &[2.0]);
        assert!((g[0] + 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(barrier_gradient(&[1.0], &[0.0], &[2.0]), vec![0.0]);
        assert_eq!(barrier_gradient(&[3.0], &[f64::NEG_INFINITY], &[f64::INFINITY]), vec![0.0]);
    }

    #[test]
    fn sipm_moves_toward_center_from_barrier() {
        // flat objective: a one-component quadratic at its center
        let q = shifted_parabola(1.0, 3.0); // y in [-1, 1], f = y^2/2
        let cfg = SipmConfig {
            batch_size: 1,
            step: StepSchedule::Constant { alpha: 0.01 },
            mu0: 1.0,
            fraction_margin: 0.1,
            seed: 0,
        };
        let full = SamplePlan::Full { components: 1 };
        // at y = 0 the objective gradient and the symmetric barrier both vanish
        assert_eq!(sipm_step(&q, &[0.0], &full, &cfg, 0).unwrap(), vec![0.0]);
        // near the lower face the barrier pushes inward
        let y = -0.9;
        let next = sipm_step(&q, &[y], &full, &cfg, 0).unwrap()[0];
        let bar = -1.0 / (y + 1.0) + 1.0 / (1.0 - y);
        assert!((next - (y - 0.01 * (y + bar))).abs() < 1e-15);
        assert!(next > y);
    }

    #[test]
    fn tuning_picks_a_grid_step_deterministically() {
        let q = QuadraticSuite::generate(&QuadraticSpec::default()).unwrap();
        let x0 = vec![0.0; 10];
        let a = tune_psgm_step(&q, 2, &PSGM_STEP_GRID, 2_000, &x0, 7).unwrap();
        let b = tune_psgm_step(&q, 2, &PSGM_STEP_GRID, 2_000, &x0, 7).unwrap();
        assert_eq!(a, b);
        assert!(PSGM_STEP_GRID.contains(&a));
        assert!(tune_psgm_step(&q, 2, &[], 100, &x0, 7).is_err());
    }

    #[test]
    fn sipm_rejects_boundary_point() {
        let q = shifted_parabola(1.0, 3.0);
        let cfg = SipmConfig {
            batch_size: 1,
            step: StepSchedule::Constant { alpha: 0.1 },
            mu0: 0.1,
            fraction_margin: 0.1,
            seed: 0,
        };
        assert!(matches!(Sipm::new(&q, cfg, vec![-1.0]), Err(Error::NotInterior { index: 0 })));
    }

    #[test]
    fn sipm_iterates_keep_margin() {
        let q = QuadraticSuite::generate(&QuadraticSpec {
            center_spread: 4.0,
            ..Default::default()
        })
        .unwrap();
        let cfg = SipmConfig {
            batch_size: 2,
            step: StepSchedule::Constant { alpha: 0.5 },
            mu0: 0.1,
            fraction_margin: 0.1,
            seed: 3,
        };
        let mut m = Sipm::new(&q, cfg.clone(), vec![0.0; 10]).unwrap();
        for k in 0..300 {
            m.step().unwrap();
            let delta = cfg.fraction_margin * cfg.mu(k);
            assert!(m.iterate().iter().all(|&v| v >= -1.0 + delta && v <= 1.0 - delta));
        }
    }
}
