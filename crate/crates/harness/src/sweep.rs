//! Parallel sweep over `(λ, trial)` cells.

use std::time::Instant;

use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::config::SweepConfig;
use crate::error::{HarnessError, Result};
use crate::experiments::{cell_seed, predicted_exponent, run_cell};
use crate::record::ExperimentRecord;

pub const WORKERS_ENV: &str = "PARAPRODUCT_WORKERS";

/// Worker count from `PARAPRODUCT_WORKERS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn run_one(cfg: &SweepConfig, lambda: u64, trial: usize) -> ExperimentRecord {
    let start = Instant::now();
    let predicted = predicted_exponent(cfg);
    let delta = cfg.delta.to_f64().unwrap_or(f64::NAN);
    let p = predicted.eval_f64(delta);
    let mut rec = ExperimentRecord {
        experiment: cfg.experiment,
        lambda,
        delta_num: *cfg.delta.numer(),
        delta_den: *cfg.delta.denom(),
        trial,
        seed: cell_seed(cfg, lambda, trial, 0),
        values: Vec::new(),
        predicted_exponent: p,
        predicted_text: predicted.to_string(),
        normalized: None,
        walltime_ms: 0,
        error: None,
    };
    match run_cell(cfg, lambda, trial) {
        Ok(out) => {
            if let Some(v) = out.values.iter().find(|v| v.name == out.primary) {
                rec.normalized = Some(v.value / (lambda as f64).powf(p)).filter(|x| x.is_finite());
            }
            rec.values = out.values;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    if cfg.timing {
        rec.walltime_ms = start.elapsed().as_millis() as u64;
    }
    rec
}

/// Runs every cell of `cfg` on `workers` threads. Cell failures are kept
/// on the record unless `cfg.strict`, in which case the first one aborts.
pub fn run_sweep(cfg: &SweepConfig, workers: usize) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let cells: Vec<(u64, usize)> = cfg
        .lambdas
        .iter()
        .flat_map(|&l| (0..cfg.trials).map(move |t| (l, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let mut records: Vec<ExperimentRecord> =
        pool.install(|| cells.par_iter().map(|&(l, t)| run_one(cfg, l, t)).collect());
    records.sort_by_key(|r| r.sort_key());
    if cfg.strict {
        if let Some(r) = records.iter().find(|r| r.error.is_some()) {
            return Err(HarnessError::Violation(format!(
                "{} at λ = {}, trial {}: {}",
                cfg.experiment.id(),
                r.lambda,
                r.trial,
                r.error.as_deref().unwrap_or_default()
            )));
        }
    }
    Ok(records)
}

/// `(λ, value)` pairs for a named value over the successful records.
pub fn series(records: &[ExperimentRecord], name: &str) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.error.is_none())
        .filter_map(|r| r.value(name).map(|v| (r.lambda as f64, v)))
        .collect()
}
