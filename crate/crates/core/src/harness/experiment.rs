//! Runs configured (method, seed) pairs in parallel and writes one trace CSV
//! per pair.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::config::{ExperimentConfig, MethodKind, Problem};
use super::reference::{load_reference, reference_solution, save_reference, DEFAULT_MAX_ITERS};
use crate::baselines::{tune_psgm_step, Psgm, PsgmConfig, Sipm, StepSchedule};
use crate::driver::{drive, Diagnostics, IterationTrace, Limits, Method};
use crate::error::Result;
use crate::problems::FiniteSum;
use crate::rng::{stream_rng, Stream};
use crate::solver::AsBox;

pub const CSV_HEADER: [&str; 12] = [
    "k",
    "method",
    "n_k",
    "t_k",
    "fhat",
    "f_full",
    "stationarity",
    "dist_to_ref",
    "fev",
    "accepted",
    "increased",
    "r_residual",
];

/// Uniform in `[-0.01, 0.01]` per coordinate from the init stream, projected.
pub fn initial_point<P: FiniteSum + ?Sized>(problem: &P, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Init);
    let mut x: Vec<f64> = (0..problem.dim()).map(|_| rng.random_range(-0.01..=0.01)).collect();
    problem.bounds().project_in_place(&mut x);
    x
}

pub fn trace_path(out: &Path, method: MethodKind, seed: u64) -> PathBuf {
    out.join(format!("{}_seed{seed}.csv", method.name()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_trace<W: Write>(out: W, method: &str, rows: &[IterationTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            method.to_string(),
            r.n_k.to_string(),
            r.t_k.to_string(),
            opt(r.fhat),
            opt(r.f_full),
            opt(r.stationarity),
            opt(r.dist_to_ref),
            r.fev.to_string(),
            r.accepted.to_string(),
            r.increased.to_string(),
            r.r_residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Default mini-batch for the baselines: the AS-BOX initial sample size.
fn default_batch(cfg: &ExperimentConfig, total: usize) -> usize {
    cfg.asbox.solver_config(&cfg.budget, cfg.metric_every, 0).initial_sample(total)
}

/// One run of `method` from the seed's initial point.
pub fn run_single(
    cfg: &ExperimentConfig,
    problem: &Problem,
    method: MethodKind,
    seed: u64,
    reference: Option<&[f64]>,
) -> Result<Vec<IterationTrace>> {
    let p = problem.as_dyn();
    let x0 = initial_point(p, seed);
    let total = p.num_components();
    let limits = Limits {
        max_iters: cfg.budget.max_iters,
        fev_budget: cfg.budget.fev_budget,
        stationarity_tol: None,
    };
    let diag = Diagnostics {
        every: cfg.metric_every,
        reference,
    };
    let mut m: Box<dyn Method + '_> = match method {
        MethodKind::Asbox => Box::new(AsBox::new(p, cfg.asbox.solver_config(&cfg.budget, cfg.metric_every, seed), x0)?),
        MethodKind::Psgm => {
            let batch_size = cfg.psgm.batch_size.unwrap_or_else(|| default_batch(cfg, total));
            let step = match cfg.psgm.step {
                Some(s) => s,
                None => StepSchedule::Constant {
                    alpha: tune_psgm_step(p, batch_size, &cfg.psgm.grid, cfg.psgm.tune_fev, &x0, seed)?,
                },
            };
            Box::new(Psgm::new(p, PsgmConfig { batch_size, step, seed }, x0)?)
        }
        MethodKind::Sipm => {
            let batch_size = cfg.sipm.batch_size.unwrap_or_else(|| default_batch(cfg, total));
            Box::new(Sipm::new(p, cfg.sipm.config(batch_size, seed), x0)?)
        }
    };
    drive(m.as_mut(), p, &limits, diag)
}

/// Loads the cached reference when present, otherwise computes and caches
/// it. `None` when the config names no reference file.
pub fn obtain_reference(cfg: &ExperimentConfig, problem: &Problem) -> Result<Option<Vec<f64>>> {
    let Some(path) = &cfg.reference else {
        return Ok(None);
    };
    let p = problem.as_dyn();
    if path.is_file() {
        return Ok(Some(load_reference(path, p)?.x));
    }
    let x0 = vec![0.0; p.dim()];
    let r = reference_solution(p, &x0, cfg.reference_tol, DEFAULT_MAX_ITERS)?;
    save_reference(path, &r.x, cfg.reference_tol)?;
    Ok(Some(r.x))
}

/// Runs every (method, seed) pair on its own thread and writes
/// `<out>/<method>_seed<seed>.csv`. Returns the written paths in
/// (method, seed) order.
pub fn run_experiment(cfg: &ExperimentConfig, methods: &[MethodKind], seeds: &[u64], out: &Path) -> Result<Vec<PathBuf>> {
    let problem = cfg.build_problem()?;
    let reference = obtain_reference(cfg, &problem)?;
    std::fs::create_dir_all(out)?;
    let jobs: Vec<(MethodKind, u64)> = methods
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<Result<PathBuf>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(method, seed)| {
                let (problem, reference) = (&problem, reference.as_deref());
                scope.spawn(move || -> Result<PathBuf> {
                    let rows = run_single(cfg, problem, method, seed, reference)?;
                    let path = trace_path(out, method, seed);
                    write_trace(std::fs::File::create(&path)?, method.name(), &rows)?;
                    Ok(path)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect()
    });
    results.into_iter().collect()
}
