//! Sweeps fanned out over a thread pool.

use coopmec_core::montecarlo::{aggregate, run_unit, SweepConfig, SweepReport};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] coopmec_core::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Runs every (placement, energy, trial) unit on at most `threads` workers
/// (all cores when `None`). The report does not depend on the thread count
/// because units are keyed by index and aggregated in index order.
pub fn run_parallel(config: &SweepConfig, threads: Option<usize>) -> Result<SweepReport, SweepError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?;
    let units = pool.install(|| {
        (0..config.units())
            .into_par_iter()
            .map(|i| run_unit(config, i).map(|r| (i, r)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(aggregate(config, units))
}
