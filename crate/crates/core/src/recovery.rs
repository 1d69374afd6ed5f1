//! Primal recovery: power densities from the converged multipliers, the
//! linear program over durations and offloaded bits, and MEC CPU shares.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dual::{run_ellipsoid, Allocation, DualModel, DualPoint, DualSettings};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::math;
use crate::model::{check_constraints, Instance, PrimalSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    pub dual: DualSettings,
    /// Relative tolerance for the final constraint check.
    pub validation_tol: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            dual: DualSettings::default(),
            validation_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Feasibility {
    Feasible {
        tau_r_lb: f64,
    },
    Infeasible {
        #[serde(with = "crate::serde_float")]
        tau_r_lb: f64,
        direct_rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Allocation,
    pub solution: PrimalSolution,
    pub dual: DualPoint,
    pub dual_value: f64,
    pub primal_value: f64,
    /// `(dual_value - primal_value) / max(1, |dual_value|)`.
    pub gap: f64,
    pub iterations: usize,
    pub feasibility: Feasibility,
}

/// Proportional MEC CPU shares `f_max R_k / sum_j R_j`; all zero when
/// nothing is offloaded.
pub fn allocate_processors(r_mec: &[f64], f_mec_max: f64) -> Vec<f64> {
    let total: f64 = r_mec.iter().sum();
    if total <= 0.0 {
        return vec![0.0; r_mec.len()];
    }
    let mut f: Vec<f64> = r_mec.iter().map(|r| f_mec_max * (r / total)).collect();
    // Put the rounding residue on the largest share so the sum is exact.
    let residue = f_mec_max - f.iter().sum::<f64>();
    if let Some((i, _)) = f.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
        f[i] += residue;
    }
    f
}

/// Power densities `e_off / t_off` implied by the converged multipliers.
///
/// Where the energy multiplier has vanished the ratio is undefined; the node
/// then gets the density that spends its whole battery over the full
/// offloading window.
pub fn optimal_ratios(instance: &Instance, dual: &DualPoint) -> Result<Vec<f64>> {
    let model = DualModel::new(instance, Allocation::Proportional)?;
    Ok(ratios(&model, dual))
}

fn ratios(model: &DualModel<'_>, dual: &DualPoint) -> Vec<f64> {
    let sw = model.switch_values(dual);
    let scales = model.scales();
    let nz = dual.zeta.len();
    let m = model.m();
    (0..m)
        .map(|k| {
            let energy = model.inst.nodes()[k].energy;
            if dual.lambda[k] <= 1e-9 * scales[nz + m + k] {
                if model.window > 0.0 {
                    energy / model.window
                } else {
                    0.0
                }
            } else {
                sw.rho[k]
            }
        })
        .collect()
}

/// The linear program over `(tau_r, t_loc, t_off, R_MEC)` with the offload
/// power densities fixed to `rho`.
pub fn build_p3(instance: &Instance, rho: &[f64]) -> Result<LinearProgram> {
    let model = DualModel::new(instance, Allocation::Proportional)?;
    build_recovery_lp(&model, rho)
}

pub(crate) fn build_recovery_lp(model: &DualModel<'_>, rho: &[f64]) -> Result<LinearProgram> {
    let inst = model.inst;
    let s = inst.system();
    let m = model.m();
    if rho.len() != m {
        return Err(Error::LengthMismatch {
            field: "rho",
            expected: m,
            found: rho.len(),
        });
    }
    if let Some(k) = rho.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidParameter {
            field: alloc::format!("rho[{k}]"),
            reason: "must be finite and >= 0",
        });
    }
    let n = 1 + 3 * m;
    let (loc, off, bits) = (1, 1 + m, 1 + 2 * m);
    let alpha = s.alpha;

    let mut c = vec![0.0; n];
    c[0] = alpha * model.relay_per_sec;
    for (k, node) in inst.nodes().iter().enumerate() {
        c[loc + k] = (1.0 - alpha) * node.local_rate();
        c[bits + k] = 1.0 - alpha;
    }
    let mut lp = LinearProgram::new(c);
    lp.set_bounds(0, model.tau_lb, s.frame);
    for k in 0..m {
        lp.set_bounds(loc + k, 0.0, s.frame);
    }

    let mut time = vec![0.0; n];
    time[0] = 1.0;
    for k in 0..m {
        time[off + k] = 1.0;
    }
    match model.allocation {
        Allocation::Proportional => {
            let mut row = time;
            for k in 0..m {
                row[bits + k] = model.remote_cost;
            }
            lp.add_eq(row, s.frame);
        }
        Allocation::Equal => {
            for k in 0..m {
                let mut row = time.clone();
                row[bits + k] = model.remote_cost;
                lp.add_le(row, s.frame);
            }
        }
    }

    for (k, node) in inst.nodes().iter().enumerate() {
        let mut energy = vec![0.0; n];
        energy[loc + k] = node.local_power();
        energy[off + k] = rho[k];
        lp.add_le(energy, node.energy);

        let mut cap = vec![0.0; n];
        cap[bits + k] = 1.0;
        cap[off + k] = -s.bandwidth * math::log2_1p(rho[k] * model.snr[k]);
        lp.add_le(cap, 0.0);
    }
    Ok(lp)
}

/// Tangent of the offload capacity along the ray `e = rho t`: the plane
/// `R <= a t + b e` touches the capacity there and lies above it elsewhere.
fn tangent(bandwidth: f64, snr: f64, rho: f64) -> (f64, f64) {
    let x = rho * snr;
    let b = bandwidth * snr * math::LOG2_E / (1.0 + x);
    (bandwidth * math::log2_1p(x) - b * rho, b)
}

const REFINE_ROUNDS: usize = 40;
const CUTS_PER_SIDE: usize = 4;

/// Improves the power densities by outer linearization of the capacity.
///
/// The linear program over `(tau_r, t_loc, t_off, e_off, R_MEC)` replaces each
/// capacity by its tangent planes at a set of densities, which makes it an
/// upper bound on the true optimum. Its solution yields new densities, whose
/// tangents are added until the bound and the achieved value agree.
fn refine_ratios(model: &DualModel<'_>, rho: &[f64]) -> Result<Vec<f64>> {
    let inst = model.inst;
    let s = inst.system();
    let m = model.m();
    let n = 1 + 4 * m;
    let (loc, off, en, bits) = (1, 1 + m, 1 + 2 * m, 1 + 3 * m);

    let mut cuts: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let base = if rho[k] > 0.0 { rho[k] } else { inst.nodes()[k].energy / model.window.max(1e-300) };
            let mut v: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0]
                .iter()
                .map(|f| f * base)
                .filter(|r| r.is_finite() && *r > 0.0)
                .collect();
            v.dedup();
            v
        })
        .collect();
    let mut best = rho.to_vec();
    let mut best_value = f64::NEG_INFINITY;

    for _ in 0..REFINE_ROUNDS {
        let mut c = vec![0.0; n];
        c[0] = s.alpha * model.relay_per_sec;
        for (k, node) in inst.nodes().iter().enumerate() {
            c[loc + k] = (1.0 - s.alpha) * node.local_rate();
            c[bits + k] = 1.0 - s.alpha;
        }
        let mut lp = LinearProgram::new(c);
        lp.set_bounds(0, model.tau_lb, s.frame);
        for k in 0..m {
            lp.set_bounds(loc + k, 0.0, s.frame);
        }
        let mut time = vec![0.0; n];
        time[0] = 1.0;
        for k in 0..m {
            time[off + k] = 1.0;
        }
        match model.allocation {
            Allocation::Proportional => {
                for k in 0..m {
                    time[bits + k] = model.remote_cost;
                }
                lp.add_le(time, s.frame);
            }
            Allocation::Equal => {
                for k in 0..m {
                    let mut row = time.clone();
                    row[bits + k] = model.remote_cost;
                    lp.add_le(row, s.frame);
                }
            }
        }
        for (k, node) in inst.nodes().iter().enumerate() {
            let mut energy = vec![0.0; n];
            energy[loc + k] = node.local_power();
            energy[en + k] = 1.0;
            lp.add_le(energy, node.energy);
            if cuts[k].is_empty() || model.snr[k] <= 0.0 {
                let mut row = vec![0.0; n];
                row[bits + k] = 1.0;
                lp.add_le(row, 0.0);
                continue;
            }
            for &r in &cuts[k] {
                let (a, b) = tangent(s.bandwidth, model.snr[k], r);
                let mut row = vec![0.0; n];
                row[bits + k] = 1.0;
                row[off + k] = -a;
                row[en + k] = -b;
                lp.add_le(row, 0.0);
            }
        }
        // Refinement only improves on `rho`; a failed round keeps the best so far.
        let Ok(sol) = solve_lp(&lp) else { break };
        if sol.status != LpStatus::Optimal {
            break;
        }
        let x = &sol.x;
        if lp.max_violation(x) > 1e-9 {
            break;
        }

        // Value actually achievable with these durations and energies.
        let mut achieved = s.alpha * inst.relay_rate(x[0].max(model.tau_lb));
        for (k, node) in inst.nodes().iter().enumerate() {
            let cap = inst.offload_capacity(k, x[off + k].max(0.0), x[en + k].max(0.0));
            achieved += (1.0 - s.alpha) * (node.local_rate() * x[loc + k].max(0.0) + x[bits + k].max(0.0).min(cap));
        }
        let ratios: Vec<f64> = (0..m)
            .map(|k| {
                let (t, e) = (x[off + k], x[en + k]);
                if t > 1e-15 * s.frame && e > 0.0 {
                    e / t
                } else {
                    best[k]
                }
            })
            .collect();
        // The cut program bounds the optimum, so nothing achieved can exceed it.
        if achieved > best_value && achieved <= sol.value * (1.0 + 1e-9) {
            best_value = achieved;
            best.clone_from(&ratios);
        }
        if sol.value - achieved <= 1e-9 * sol.value.abs().max(1.0) {
            break;
        }

        let mut added = false;
        for k in 0..m {
            let (t, e) = (x[off + k].max(0.0), x[en + k].max(0.0));
            let r = if t > 1e-15 * s.frame {
                // Energy below the LP's resolution still buys bits through the
                // planes; the plane through the origin tells how much it takes.
                let (_, slope) = tangent(s.bandwidth, model.snr[k], 0.0);
                e.max(x[bits + k].max(0.0) / slope) / t
            } else if e > 0.0 {
                // Energy spent with no airtime: cut at a very steep density.
                cuts[k].last().copied().unwrap_or(1.0) * 16.0
            } else {
                continue;
            };
            if !(r > 0.0 && r.is_finite()) {
                continue;
            }
            let list = &mut cuts[k];
            let pos = list.partition_point(|&v| v < r);
            let near = |v: &f64| (v - r).abs() <= 1e-9 * r;
            if list.get(pos).is_some_and(near) || pos.checked_sub(1).and_then(|p| list.get(p)).is_some_and(near) {
                continue;
            }
            list.insert(pos, r);
            added = true;
            // Keep the planes around the current density only.
            let lo = pos.saturating_sub(CUTS_PER_SIDE);
            let hi = (pos + CUTS_PER_SIDE + 1).min(list.len());
            list.truncate(hi);
            list.drain(..lo);
        }
        if !added {
            break;
        }
    }
    Ok(best)
}

/// Full pipeline for the proportional-allocation problem.
pub fn solve_instance(instance: &Instance, settings: &SolveSettings) -> Result<SolveReport> {
    solve_with(instance, Allocation::Proportional, settings)
}

pub(crate) fn solve_with(
    instance: &Instance,
    allocation: Allocation,
    settings: &SolveSettings,
) -> Result<SolveReport> {
    let model = DualModel::new(instance, allocation)?;
    let outcome = run_ellipsoid(&model, &settings.dual)?;
    let rho = refine_ratios(&model, &ratios(&model, &outcome.dual))?;
    let lp = build_recovery_lp(&model, &rho)?;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::RecoveryLp(sol.status));
    }

    let m = model.m();
    let x = &sol.x;
    let clamp = |v: f64| v.max(0.0);
    let tau_r = x[0].clamp(model.tau_lb, instance.system().frame);
    let t_loc: Vec<f64> = x[1..1 + m].iter().map(|&v| clamp(v)).collect();
    let t_off: Vec<f64> = x[1 + m..1 + 2 * m].iter().map(|&v| clamp(v)).collect();
    let r_mec: Vec<f64> = x[1 + 2 * m..].iter().map(|&v| clamp(v)).collect();
    let e_off: Vec<f64> = t_off
        .iter()
        .zip(&rho)
        .zip(instance.nodes())
        .zip(&t_loc)
        .map(|(((t, r), node), tl)| (t * r).min(node.energy - node.local_power() * tl).max(0.0))
        .collect();
    let f_max = instance.system().mec_cpu_max;
    let f_mec = match allocation {
        Allocation::Proportional => allocate_processors(&r_mec, f_max),
        Allocation::Equal => vec![f_max / m as f64; m],
    };
    let solution = PrimalSolution::assemble(instance, tau_r, t_loc, t_off, e_off, r_mec, f_mec);

    let report = check_constraints(instance, &solution, settings.validation_tol);
    if let Some(worst) = report.violations.first() {
        return Err(Error::ConstraintViolation {
            constraint: worst.to_string(),
            slack: worst.slack,
        });
    }

    let primal_value = solution.objective;
    let dual_value = outcome.dual_value;
    Ok(SolveReport {
        method: allocation,
        solution,
        dual: outcome.dual,
        dual_value,
        primal_value,
        gap: (dual_value - primal_value) / dual_value.abs().max(1.0),
        iterations: outcome.iterations,
        feasibility: Feasibility::Feasible {
            tau_r_lb: model.tau_lb,
        },
    })
}
