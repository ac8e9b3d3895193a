//! Path-parallel simulation. Workers take fixed blocks of path indices and
//! the blocks are concatenated in index order, so results do not depend on
//! the worker count.

use rayon::prelude::*;
use varswap_core::mc::{self, ClockSpec, PathRecord, SimConfig};
use varswap_core::ModelSpec;

use crate::error::{Error, Result};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "VARSWAP_WORKERS";

const BLOCK: u64 = 1024;

pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Usage(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// Simulates `cfg.paths` paths on `workers` threads (rayon's default when
/// `None`).
pub fn simulate(
    model: &ModelSpec,
    clock: &ClockSpec,
    x0: f64,
    cfg: &SimConfig,
    workers: Option<usize>,
) -> Result<Vec<PathRecord>> {
    mc::check_simulable(model)?;
    clock.check()?;
    cfg.check()?;
    let blocks = cfg.paths.div_ceil(BLOCK);
    let work = || -> varswap_core::Result<Vec<PathRecord>> {
        let parts: Vec<Vec<PathRecord>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let range = b * BLOCK..((b + 1) * BLOCK).min(cfg.paths);
                range
                    .map(|i| mc::simulate_path(model, clock, x0, cfg, i))
                    .collect()
            })
            .collect::<varswap_core::Result<_>>()?;
        Ok(parts.into_iter().flatten().collect())
    };
    let records = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {n} workers: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(records)
}
