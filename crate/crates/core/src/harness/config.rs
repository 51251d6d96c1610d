//! TOML experiment configuration.
//!
//! ```toml
//! problem = "logreg"          # logreg | nn | quadratic
//! data = "data/mushrooms"     # or a [synthetic] section
//! methods = ["asbox", "psgm"]
//! seeds = 5
//! out = "traces"
//!
//! [budget]
//! fev_budget = 200000
//!
//! [asbox]
//! growth = { kind = "geometric", factor = 1.1 }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::baselines::{SipmConfig, StepSchedule, PSGM_STEP_GRID};
use crate::data_io::{encode_labels, read_libsvm, synthetic_classification, SparseDataset};
use crate::error::{Error, Result};
use crate::fev::CostModel;
use crate::geometry::Bounds;
use crate::line_search::{EpsSchedule, LineSearchParams};
use crate::problems::{softplus, FiniteSum, LogisticRegression, NeuralNetwork, QuadraticSpec, QuadraticSuite, PROB_CLAMP};
use crate::sampling::WeightVector;
use crate::solver::{GrowthPolicy, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Logreg,
    Nn,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Asbox,
    Psgm,
    Sipm,
}

impl MethodKind {
    pub const ALL: [MethodKind; 3] = [MethodKind::Asbox, MethodKind::Psgm, MethodKind::Sipm];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Asbox => "asbox",
            MethodKind::Psgm => "psgm",
            MethodKind::Sipm => "sipm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?} (expected asbox, psgm or sipm)")))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub samples: usize,
    pub features: usize,
    #[serde(default)]
    pub noise: f64,
    /// Standard deviation of every feature.
    #[serde(default = "unit")]
    pub feature_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NnSection {
    pub hidden: usize,
}

impl Default for NnSection {
    fn default() -> Self {
        Self { hidden: 16 }
    }
}

/// Shared stopping limits; every method gets the same ones.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budget {
    pub max_iters: usize,
    pub fev_budget: Option<u64>,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            fev_budget: None,
        }
    }
}

/// Algorithm parameters of AS-BOX; limits and seed come from elsewhere.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsBoxParams {
    pub n0: Option<usize>,
    pub beta: f64,
    pub c1: f64,
    pub c: f64,
    pub relax_scale: f64,
    pub d_size: usize,
    pub growth: GrowthPolicy,
    pub eps: EpsSchedule,
    pub max_backtracks: usize,
}

impl Default for AsBoxParams {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            n0: s.n0,
            beta: s.beta,
            c1: s.c1,
            c: s.c,
            relax_scale: s.big_c,
            d_size: s.d_size,
            growth: s.growth,
            eps: s.eps,
            max_backtracks: LineSearchParams::DEFAULT_MAX_BACKTRACKS,
        }
    }
}

impl AsBoxParams {
    pub fn solver_config(&self, budget: &Budget, metric_every: usize, seed: u64) -> SolverConfig {
        SolverConfig {
            n0: self.n0,
            beta: self.beta,
            c1: self.c1,
            c: self.c,
            big_c: self.relax_scale,
            d_size: self.d_size,
            growth: self.growth,
            eps: self.eps,
            max_backtracks: self.max_backtracks,
            max_iters: budget.max_iters,
            fev_budget: budget.fev_budget,
            stationarity_tol: None,
            metric_every,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsgmParams {
    /// Defaults to the AS-BOX initial sample size.
    pub batch_size: Option<usize>,
    /// Tuned over `grid` when absent.
    pub step: Option<StepSchedule>,
    pub grid: Vec<f64>,
    pub tune_fev: u64,
}

impl Default for PsgmParams {
    fn default() -> Self {
        Self {
            batch_size: None,
            step: None,
            grid: PSGM_STEP_GRID.to_vec(),
            tune_fev: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SipmParams {
    pub batch_size: Option<usize>,
    pub step: StepSchedule,
    pub mu0: f64,
    pub fraction_margin: f64,
}

impl Default for SipmParams {
    fn default() -> Self {
        Self {
            batch_size: None,
            step: StepSchedule::Constant { alpha: 0.1 },
            mu0: 0.1,
            fraction_margin: 0.1,
        }
    }
}

impl SipmParams {
    pub fn config(&self, batch_size: usize, seed: u64) -> SipmConfig {
        SipmConfig {
            batch_size,
            step: self.step,
            mu0: self.mu0,
            fraction_margin: self.fraction_margin,
            seed,
        }
    }
}

/// Inputs of the complexity-bound report. Unset constants are derived from
/// the problem when possible.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundParams {
    pub nu: f64,
    pub seeds: usize,
    pub max_iters: usize,
    pub lipschitz: Option<f64>,
    pub c_b: Option<f64>,
    pub f_low: Option<f64>,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            nu: 1e-3,
            seeds: 10,
            max_iters: 100_000,
            lipschitz: None,
            c_b: None,
            f_low: None,
        }
    }
}

fn default_methods() -> Vec<MethodKind> {
    MethodKind::ALL.to_vec()
}

fn default_seeds() -> usize {
    5
}

fn default_metric_every() -> usize {
    10
}

fn default_out() -> PathBuf {
    PathBuf::from("traces")
}

fn default_reference_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub quadratic: QuadraticSpec,
    #[serde(default)]
    pub nn: NnSection,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodKind>,
    /// Number of seeds; runs use `base_seed .. base_seed + seeds`.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_metric_every")]
    pub metric_every: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Cached reference solution; computed and written when missing.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub asbox: AsBoxParams,
    #[serde(default)]
    pub psgm: PsgmParams,
    #[serde(default)]
    pub sipm: SipmParams,
    #[serde(default)]
    pub bound: BoundParams,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = toml::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.data.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.reference.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.out);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match self.problem {
            ProblemKind::Logreg | ProblemKind::Nn => match (&self.data, &self.synthetic) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidConfig("give either `data` or [synthetic], not both".into()))
                }
                (None, None) => return Err(Error::InvalidConfig("logreg and nn need `data` or [synthetic]".into())),
                (Some(p), None) if !p.is_file() => {
                    return Err(Error::InvalidConfig(format!("data file {} does not exist", p.display())))
                }
                _ => {}
            },
            ProblemKind::Quadratic => {
                if self.data.is_some() || self.synthetic.is_some() {
                    return Err(Error::InvalidConfig("quadratic problems take no data".into()));
                }
            }
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("`methods` is empty".into()));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidConfig("`seeds` must be positive".into()));
        }
        if !(self.reference_tol > 0.0) {
            return Err(Error::InvalidConfig("`reference_tol` must be positive".into()));
        }
        if self.reference.is_some() && self.problem == ProblemKind::Nn {
            return Err(Error::InvalidConfig("reference solutions need a convex problem".into()));
        }
        if self.psgm.step.is_none() && self.psgm.grid.is_empty() {
            return Err(Error::InvalidConfig("[psgm] needs `step` or a nonempty `grid`".into()));
        }
        Ok(())
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|s| self.base_seed + s).collect()
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let load = || -> Result<Arc<SparseDataset>> {
            let raw = match (&self.data, &self.synthetic) {
                (Some(p), _) => read_libsvm(p)?,
                (None, Some(s)) => synthetic_classification(s.samples, s.features, s.noise, s.feature_scale, s.seed)?,
                (None, None) => return Err(Error::InvalidConfig("no data source".into())),
            };
            let (labels, _) = encode_labels(raw.labels())?;
            Ok(Arc::new(raw.with_labels(labels)?))
        };
        Ok(match self.problem {
            ProblemKind::Logreg => Problem::Logistic(LogisticRegression::with_unit_box(load()?)?),
            ProblemKind::Nn => Problem::Nn(NeuralNetwork::with_unit_box(load()?, self.nn.hidden)?),
            ProblemKind::Quadratic => Problem::Quadratic(QuadraticSuite::generate(&self.quadratic)?),
        })
    }
}

/// A problem built from a config.
#[derive(Debug, Clone)]
pub enum Problem {
    Logistic(LogisticRegression),
    Nn(NeuralNetwork),
    Quadratic(QuadraticSuite),
}

impl Problem {
    pub fn as_dyn(&self) -> &dyn FiniteSum {
        match self {
            Problem::Logistic(p) => p,
            Problem::Nn(p) => p,
            Problem::Quadratic(p) => p,
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Problem::Nn(_))
    }

    /// A gradient Lipschitz constant valid for every component, when known.
    pub fn component_lipschitz(&self) -> Option<f64> {
        match self {
            // sigma' <= 1/4
            Problem::Logistic(p) => {
                let d = p.data();
                let worst = (0..d.len())
                    .map(|i| d.row(i).1.iter().map(|v| v * v).sum::<f64>())
                    .fold(0.0, f64::max);
                Some(worst / 4.0)
            }
            Problem::Quadratic(q) => Some(q.lipschitz()),
            Problem::Nn(_) => None,
        }
    }

    /// `(lower, upper)` bounds on `f` over the box, when known.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        match self {
            Problem::Logistic(p) => {
                let d = p.data();
                let b = p.bounds();
                let reach: Vec<f64> = b.lower().iter().zip(b.upper()).map(|(l, u)| l.abs().max(u.abs())).collect();
                let w = p.weights().as_slice();
                let upper = (0..d.len())
                    .map(|i| {
                        let (idx, vals) = d.row(i);
                        let m: f64 = idx.iter().zip(vals).map(|(&j, v)| v.abs() * reach[j]).sum();
                        w[i] * softplus(m)
                    })
                    .sum();
                upper_if_finite(upper)
            }
            Problem::Nn(_) => Some((0.0, -PROB_CLAMP.ln())),
            Problem::Quadratic(q) => q.value_upper_bound().and_then(upper_if_finite),
        }
    }

    pub fn weights(&self) -> &WeightVector {
        self.as_dyn().weights()
    }

    pub fn bounds(&self) -> &Bounds {
        self.as_dyn().bounds()
    }

    pub fn cost_model(&self) -> CostModel {
        self.as_dyn().cost_model()
    }
}

fn upper_if_finite(upper: f64) -> Option<(f64, f64)> {
    upper.is_finite().then_some((0.0, upper))
}
