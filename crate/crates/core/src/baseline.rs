//! Comparison scheme in which the MEC server gives every node a fixed
//! `f_max / M` share of its CPU.
//!
//! The remote-time constraint then holds per node,
//! `R_k C M / f_max <= T - tau_r - sum_j t_off,j`, so the time-coupling
//! multiplier becomes a vector `zeta_k`. The switch values change
//! accordingly: `v_k` uses `zeta_k C M / f_max`, while the offload-time and
//! relay-time switches use `sum_j zeta_j`. Everything else, including the
//! recovery LP, is shared with the proportional solver.

use crate::dual::Allocation;
use crate::error::Result;
use crate::model::Instance;
use crate::recovery::{solve_with, SolveReport, SolveSettings};

pub fn solve_equal_allocation(instance: &Instance, settings: &SolveSettings) -> Result<SolveReport> {
    solve_with(instance, Allocation::Equal, settings)
}
