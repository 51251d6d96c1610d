//! AS-BOX: stochastic projected gradient with a nonmonotone line search and
//! an additional-sampling test that decides when to grow the mini-batch.
//!
//! Each iteration:
//!
//! 1. draw the mini-batch (or use the full weighted sum once `n_k = N`);
//! 2. take the projected-gradient direction `p = P(x - g) - x`;
//! 3. backtrack `t = beta^j` until the relaxed Armijo test holds and form
//!    the candidate `x + t p`;
//! 4. in the mini-batch phase, draw an independent additional sample `D`,
//!    compare its projection pattern with the mini-batch one and test
//!    `f_D(candidate) <= f_D(x) - c |s|^2 + C eps_k` with
//!    `s = P(x - grad f_D(x)) - x`;
//! 5. keep the sample size only if the patterns agree *and* the decrease
//!    holds, otherwise grow it;
//! 6. accept the candidate iff the decrease holds (the pattern check plays
//!    no part here). In the full-sample phase the candidate is always taken.
//!
//! With the box `[0, +inf)^n` this is exactly the nonnegativity-constrained
//! variant: the ternary pattern collapses to the binary one.

use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::driver::{drive, Diagnostics, IterationTrace, Limits, Method, Phase};
use crate::error::{Error, Result};
use crate::fev::FevLedger;
use crate::geometry::{direction, dot, norm_sq, residual, ternary_indicator, TernaryIndicator};
use crate::line_search::{backtrack, EpsSchedule, LineSearchParams};
use crate::problems::FiniteSum;
use crate::rng::{stream_rng, Stream};
use crate::sampling::{minibatch_value, minibatch_value_grad, IndexSampler, SamplePlan, WeightVector};

/// How the sample size grows when the additional-sampling test fails.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthPolicy {
    Increment,
    /// `max(n + 1, ceil(factor * n))`.
    Geometric { factor: f64 },
    JumpToFull,
}

impl Default for GrowthPolicy {
    fn default() -> Self {
        GrowthPolicy::Geometric { factor: 1.1 }
    }
}

impl GrowthPolicy {
    /// Next sample size, capped at `total`.
    pub fn next(&self, n: usize, total: usize) -> usize {
        let grown = match *self {
            GrowthPolicy::Increment => n + 1,
            // shave roundoff so that e.g. 1.1 * 50 rounds up to 55, not 56
            GrowthPolicy::Geometric { factor } => {
                ((factor * n as f64 * (1.0 - 1e-12)).ceil() as usize).max(n + 1)
            }
            GrowthPolicy::JumpToFull => total,
        };
        grown.min(total)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Initial sample size; `None` picks `max(1, ceil(N / 100))`.
    pub n0: Option<usize>,
    pub beta: f64,
    pub c1: f64,
    /// Decrease constant of the additional-sampling test.
    pub c: f64,
    /// Scale of the relaxation in the additional-sampling test.
    #[serde(rename = "relax_scale")]
    pub big_c: f64,
    /// Additional sample size.
    pub d_size: usize,
    pub growth: GrowthPolicy,
    pub eps: EpsSchedule,
    pub max_backtracks: usize,
    pub max_iters: usize,
    pub fev_budget: Option<u64>,
    pub stationarity_tol: Option<f64>,
    /// Diagnostics cadence for [`run`].
    pub metric_every: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n0: None,
            beta: 0.1,
            c1: 1e-4,
            c: 1e-4,
            big_c: 1.0,
            d_size: 1,
            growth: GrowthPolicy::default(),
            eps: EpsSchedule::default(),
            max_backtracks: LineSearchParams::DEFAULT_MAX_BACKTRACKS,
            max_iters: 1000,
            fev_budget: None,
            stationarity_tol: None,
            metric_every: 10,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn initial_sample(&self, total: usize) -> usize {
        self.n0.unwrap_or_else(|| total.div_ceil(100).max(1))
    }

    pub fn validate(&self, total: usize) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        unit("beta", self.beta)?;
        unit("c1", self.c1)?;
        unit("c", self.c)?;
        if !(self.big_c > 0.0) || !self.big_c.is_finite() {
            return Err(Error::InvalidConfig(format!("relax_scale must be > 0, got {}", self.big_c)));
        }
        let n0 = self.initial_sample(total);
        if n0 == 0 || n0 > total {
            return Err(Error::InvalidConfig(format!("n0 must lie in 1..={total}, got {n0}")));
        }
        if self.d_size == 0 {
            return Err(Error::InvalidSampleSize(0));
        }
        if let GrowthPolicy::Geometric { factor } = self.growth {
            if !(factor > 1.0) || !factor.is_finite() {
                return Err(Error::InvalidConfig(format!("growth factor must exceed 1, got {factor}")));
            }
        }
        if self.max_backtracks == 0 {
            return Err(Error::InvalidConfig("max_backtracks must be positive".into()));
        }
        self.eps.validate()
    }

    pub fn limits(&self) -> Limits {
        Limits {
            max_iters: self.max_iters,
            fev_budget: self.fev_budget,
            stationarity_tol: self.stationarity_tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub k: usize,
    pub n_k: usize,
    pub total: usize,
    pub fev: FevLedger,
    batch_rng: ChaCha8Rng,
    additional_rng: ChaCha8Rng,
}

impl SolverState {
    pub fn phase(&self) -> Phase {
        if self.n_k >= self.total {
            Phase::FullSample
        } else {
            Phase::MiniBatch
        }
    }
}

/// Outcome of the additional-sampling test at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditionalCheck {
    /// Residual between the mini-batch and additional-sample patterns.
    pub residual: f64,
    /// Whether `f_D(candidate) <= f_D(x) - c |s|^2 + C eps_k`.
    pub decrease: bool,
}

impl AdditionalCheck {
    /// The sample size is kept only when both parts pass.
    pub fn passes(&self) -> bool {
        self.residual == 0.0 && self.decrease
    }
}

/// Everything the additional-sampling test needs besides the sample itself.
#[derive(Debug, Clone)]
pub struct AdditionalProbe<'a> {
    pub x: &'a [f64],
    pub candidate: &'a [f64],
    pub mb_pattern: &'a TernaryIndicator,
    pub c: f64,
    /// `C * eps_k`.
    pub relax: f64,
}

/// Evaluates the additional-sampling test for the sample `plan`.
pub fn additional_check<P: FiniteSum + ?Sized>(
    problem: &P,
    plan: &SamplePlan,
    probe: &AdditionalProbe<'_>,
) -> Result<AdditionalCheck> {
    let (fd_x, gd) = minibatch_value_grad(problem, plan, probe.x)?;
    let s = direction(probe.x, &gd, problem.bounds())?;
    let pattern = ternary_indicator(probe.x, &gd, problem.bounds())?;
    let r = residual(probe.mb_pattern, &pattern)?;
    let fd_candidate = minibatch_value(problem, plan, probe.candidate)?;
    Ok(AdditionalCheck {
        residual: r,
        decrease: fd_candidate <= fd_x - probe.c * norm_sq(&s) + probe.relax,
    })
}

/// AS-BOX bound to one problem.
pub struct AsBox<'p, P: FiniteSum + ?Sized> {
    problem: &'p P,
    config: SolverConfig,
    sampler: IndexSampler,
    state: SolverState,
}

impl<'p, P: FiniteSum + ?Sized> AsBox<'p, P> {
    /// `x0` must be feasible; project it first if needed.
    pub fn new(problem: &'p P, config: SolverConfig, x0: Vec<f64>) -> Result<Self> {
        let total = problem.num_components();
        config.validate(total)?;
        problem.bounds().check_feasible(&x0)?;
        let state = SolverState {
            x: x0,
            k: 0,
            n_k: config.initial_sample(total),
            total,
            fev: FevLedger::new(),
            batch_rng: stream_rng(config.seed, Stream::Batch),
            additional_rng: stream_rng(config.seed, Stream::Additional),
        };
        Ok(Self {
            sampler: IndexSampler::new(problem.weights())?,
            problem,
            config,
            state,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }

    /// One pass of the iteration described in the module docs.
    pub fn step(&mut self) -> Result<IterationTrace> {
        let problem = self.problem;
        let cfg = &self.config;
        let st = &mut self.state;
        let bounds = problem.bounds();
        let cost = problem.cost_model();
        let phase = st.phase();
        let n_used = st.n_k;
        let eps = cfg.eps.at(st.k);

        let plan = match phase {
            Phase::MiniBatch => self.sampler.draw(st.n_k, &mut st.batch_rng)?,
            Phase::FullSample => SamplePlan::Full { components: st.total },
        };
        let (fhat, g) = minibatch_value_grad(problem, &plan, &st.x)?;
        st.fev.charge_value_gradient(cost, plan.size());

        let p = direction(&st.x, &g, bounds)?;
        let mb_pattern = ternary_indicator(&st.x, &g, bounds)?;
        // exact arithmetic gives g.p <= -|p|^2 <= 0; guard against roundoff
        let slope = dot(&g, &p).min(0.0);

        let params = LineSearchParams {
            beta: cfg.beta,
            c1: cfg.c1,
            eps,
            max_backtracks: cfg.max_backtracks,
        };
        let x = &st.x;
        let fev = &mut st.fev;
        let mut trial = x.clone();
        let candidate_at = |t: f64, out: &mut Vec<f64>| {
            for ((o, xi), pi) in out.iter_mut().zip(x).zip(&p) {
                *o = xi + t * pi;
            }
            // x + t p is feasible in exact arithmetic; clamp away roundoff
            bounds.project_in_place(out);
        };
        let ls = backtrack(
            |t| {
                candidate_at(t, &mut trial);
                fev.charge_value(cost, plan.size());
                minibatch_value(problem, &plan, &trial)
            },
            fhat,
            slope,
            &params,
        )?;
        let mut candidate = trial;
        candidate_at(ls.step, &mut candidate);

        let (accepted, increased, r) = match phase {
            Phase::FullSample => (true, false, 0.0),
            Phase::MiniBatch => {
                let dplan = self.sampler.draw(cfg.d_size, &mut st.additional_rng)?;
                let check = additional_check(
                    problem,
                    &dplan,
                    &AdditionalProbe {
                        x: &st.x,
                        candidate: &candidate,
                        mb_pattern: &mb_pattern,
                        c: cfg.c,
                        relax: cfg.big_c * eps,
                    },
                )?;
                st.fev.charge_value_gradient(cost, dplan.size());
                st.fev.charge_value(cost, dplan.size());
                let increased = !check.passes();
                if increased {
                    st.n_k = cfg.growth.next(st.n_k, st.total);
                }
                (check.decrease, increased, check.residual)
            }
        };
        if accepted {
            st.x = candidate;
        }

        let row = IterationTrace {
            k: st.k,
            n_k: n_used,
            phase,
            t_k: ls.step,
            backtracks: ls.backtracks,
            fhat: Some(fhat),
            accepted,
            increased,
            r_residual: r,
            fev: st.fev.total(),
            f_full: None,
            stationarity: None,
            dist_to_ref: None,
        };
        st.k += 1;
        Ok(row)
    }
}

impl<P: FiniteSum + ?Sized> Method for AsBox<'_, P> {
    fn name(&self) -> &'static str {
        "asbox"
    }

    fn iterate(&self) -> &[f64] {
        &self.state.x
    }

    fn iteration(&self) -> usize {
        self.state.k
    }

    fn fev(&self) -> u64 {
        self.state.fev.total()
    }

    fn step(&mut self) -> Result<IterationTrace> {
        AsBox::step(self)
    }
}

/// Runs AS-BOX from `x0` until the configured limits and returns the final
/// state with the full trace.
pub fn run<P: FiniteSum + ?Sized>(
    problem: &P,
    config: SolverConfig,
    x0: Vec<f64>,
) -> Result<(SolverState, Vec<IterationTrace>)> {
    let limits = config.limits();
    let diag = Diagnostics {
        every: config.metric_every,
        reference: None,
    };
    let mut solver = AsBox::new(problem, config, x0)?;
    let trace = drive(&mut solver, problem, &limits, diag)?;
    Ok((solver.into_state(), trace))
}

/// `min{c, c1, 2 c1 (1 - c1) beta / L}`.
pub fn c_bar(c: f64, c1: f64, beta: f64, lipschitz: f64) -> f64 {
    c.min(c1).min(2.0 * c1 * (1.0 - c1) * beta / lipschitz)
}

/// Inputs of the expected-iteration bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    /// Bound on `E|f|` at the start of the full-sample phase.
    pub c_b: f64,
    pub f_low: f64,
    /// Relaxation scale `C`.
    pub big_c: f64,
    /// Bound on `sum_k eps_k`.
    pub eps_bar: f64,
    pub c_bar: f64,
    /// Target stationarity `nu`.
    pub nu: f64,
}

/// `ceil((N - 1) / q) + ceil((C_b - f_low + C eps_bar) / (c_bar nu^2))` with
/// `q = (min_i w_i)^(N-1)`.
///
/// The value is integral but returned as `f64`: for moderately many
/// components `q` underflows and the bound is `+inf`.
pub fn complexity_bound(w: &WeightVector, inputs: &BoundInputs) -> Result<f64> {
    let total = w.len();
    let wmin = w.min();
    if wmin <= 0.0 {
        return Err(Error::InvalidWeights("complexity bound needs every weight > 0".into()));
    }
    if !(inputs.nu > 0.0) || !(inputs.c_bar > 0.0) {
        return Err(Error::InvalidConfig("complexity bound needs nu > 0 and c_bar > 0".into()));
    }
    let q = wmin.powi(total as i32 - 1);
    let sampling = ((total - 1) as f64 / q).ceil();
    let gap = (inputs.c_b - inputs.f_low + inputs.big_c * inputs.eps_bar).max(0.0);
    let descent = (gap / (inputs.c_bar * inputs.nu * inputs.nu)).ceil();
    Ok(sampling + descent)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolatorEstimate {
    /// Fraction of drawn additional samples that fail the test.
    pub frequency: f64,
    /// Total weight of the single components that fail it.
    pub violator_mass: f64,
    pub trials: usize,
}

/// Monte-Carlo frequency with which a size-one additional sample fails the
/// test described by `probe`. Errors if no component fails it.
pub fn violator_probability_check<P: FiniteSum + ?Sized>(
    problem: &P,
    probe: &AdditionalProbe<'_>,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ViolatorEstimate> {
    let w = problem.weights();
    let verdicts = (0..problem.num_components())
        .map(|i| additional_check(problem, &SamplePlan::Draws(vec![i]), probe).map(|c| !c.passes()))
        .collect::<Result<Vec<bool>>>()?;
    if !verdicts.iter().any(|&v| v) {
        return Err(Error::NoViolator);
    }
    let violator_mass = verdicts
        .iter()
        .zip(w.as_slice())
        .filter(|(v, _)| **v)
        .map(|(_, w)| w)
        .sum();
    let sampler = IndexSampler::new(w)?;
    let mut hits = 0usize;
    for _ in 0..trials {
        let SamplePlan::Draws(idx) = sampler.draw(1, rng)? else {
            unreachable!("sampler only produces draws")
        };
        if verdicts[idx[0]] {
            hits += 1;
        }
    }
    Ok(ViolatorEstimate {
        frequency: hits as f64 / trials.max(1) as f64,
        violator_mass,
        trials,
    })
}
