//! Solver against brute-force oracles on small random instances.

use coopmec_core::montecarlo::{sample_channels, trial_rng};
use coopmec_core::oracle::{grid_solve_refined, multistart_solve, GRID_MAX_NODES};
use coopmec_core::{solve_instance, Error};

use crate::config::Config;

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyRow {
    pub trial: u64,
    pub alpha: f64,
    pub d_pt_ap: f64,
    pub solver: f64,
    pub oracle: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub oracle: &'static str,
    pub rows: Vec<CertifyRow>,
    pub worst: f64,
    pub tolerance: f64,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CertifyError {
    #[error("oracle limited to M <= {GRID_MAX_NODES}, got M = {0}")]
    TooManyNodes(usize),
    #[error("trials must be >= 1")]
    NoTrials,
    #[error(transparent)]
    Solve(#[from] Error),
}

/// Feasible instances are drawn from the seed's trial streams in order,
/// cycling through the configured α grid and placements. One node is
/// checked against the zoomed grid (deviation at most 1e-2), two nodes
/// against multistart ascent (at most 2e-2).
pub fn certify(config: &Config) -> Result<Certificate, CertifyError> {
    let c = &config.certify;
    let m = c.nodes;
    if m == 0 || m > GRID_MAX_NODES {
        return Err(CertifyError::TooManyNodes(m));
    }
    if c.trials == 0 {
        return Err(CertifyError::NoTrials);
    }
    let sweep = &config.sweep;
    let template = coopmec_core::montecarlo::SweepConfig {
        nodes: m,
        ..sweep.clone()
    };
    let energy = config.nodes[0].energy;
    let (oracle, tolerance) = if m == 1 { ("grid", 1e-2) } else { ("multistart", 2e-2) };

    let mut rows = Vec::with_capacity(c.trials);
    let mut trial = 0u64;
    while rows.len() < c.trials {
        let k = rows.len();
        let alpha = sweep.alpha_grid[k % sweep.alpha_grid.len()];
        let d_pt_ap = sweep.placements[k % sweep.placements.len()];
        let channels = sample_channels(&mut trial_rng(config.seed, trial), &sweep.channel_means, m)?;
        trial += 1;
        let inst = template.instance(alpha, d_pt_ap, energy, channels)?;
        if inst.feasibility().is_err() {
            continue;
        }
        let solved = solve_instance(&inst, &config.solve)?;
        let reference = if m == 1 {
            grid_solve_refined(&inst, c.grid.unwrap_or(60), c.zoom_levels)?
        } else {
            multistart_solve(&inst, c.starts, c.local_steps)?
        };
        let deviation = (solved.primal_value - reference.objective).abs() / reference.objective.abs().max(1.0);
        rows.push(CertifyRow {
            trial: trial - 1,
            alpha,
            d_pt_ap,
            solver: solved.primal_value,
            oracle: reference.objective,
            deviation,
        });
    }
    let worst = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(Certificate {
        oracle,
        rows,
        worst,
        tolerance,
    })
}

pub fn render(cert: &Certificate) -> String {
    let mut out = format!(
        "{:>6} {:>6} {:>8} {:>16} {:>16} {:>10}\n",
        "trial", "alpha", "d_pt_ap", "solver", "oracle", "deviation"
    );
    for r in &cert.rows {
        out += &format!(
            "{:>6} {:>6.2} {:>8.1} {:>16.6} {:>16.6} {:>10.2e}\n",
            r.trial, r.alpha, r.d_pt_ap, r.solver, r.oracle, r.deviation
        );
    }
    out += &format!(
        "worst deviation {:.3e} against {} oracle (tolerance {:.0e}): {}\n",
        cert.worst,
        cert.oracle,
        cert.tolerance,
        if cert.passed() { "pass" } else { "FAIL" }
    );
    out
}
