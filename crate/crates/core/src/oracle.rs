//! Brute-force certifiers for tiny instances.
//!
//! Both searches fix `(tau_r, t_off, e_off)` and fill in the rest in closed
//! form: every node computes locally for as long as its leftover battery and
//! the frame allow, and the offloaded total is the smaller of the summed
//! uplink capacities and what the MEC server can process in the time that
//! is left. The objective is increasing in every offloaded bit, so this
//! fill-in is optimal for the fixed outer variables. Nothing here touches
//! the dual machinery.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lp::LinearProgram;
use crate::model::{Instance, PrimalSolution};
use crate::recovery::allocate_processors;

pub const GRID_MAX_NODES: usize = 2;
pub const MULTISTART_MAX_NODES: usize = 4;

/// Evaluates fill-ins for one instance.
struct FillIn<'a> {
    inst: &'a Instance,
    tau_lb: f64,
    /// Remote bits per second of MEC time, `f_max / C`.
    remote_rate: f64,
}

impl<'a> FillIn<'a> {
    fn new(inst: &'a Instance) -> Result<Self> {
        let c = inst.common_cycles_per_bit()?;
        let tau_lb = inst.feasibility()?;
        Ok(Self {
            inst,
            tau_lb,
            remote_rate: inst.system().mec_cpu_max / c,
        })
    }

    fn frame(&self) -> f64 {
        self.inst.system().frame
    }

    /// Objective at `(tau_r, t_off, e_off)` with optimal inner variables, or
    /// `None` when the outer point is infeasible.
    fn value(&self, tau_r: f64, t_off: &[f64], e_off: &[f64]) -> Option<f64> {
        let (local, capacity, remote_budget) = self.parts(tau_r, t_off, e_off)?;
        let alpha = self.inst.system().alpha;
        Some(alpha * self.inst.relay_rate(tau_r) + (1.0 - alpha) * (local + capacity.min(remote_budget)))
    }

    fn parts(&self, tau_r: f64, t_off: &[f64], e_off: &[f64]) -> Option<(f64, f64, f64)> {
        let frame = self.frame();
        let spent = tau_r + t_off.iter().sum::<f64>();
        if tau_r < self.tau_lb || spent > frame * (1.0 + 1e-12) {
            return None;
        }
        let mut local = 0.0;
        let mut capacity = 0.0;
        for (k, node) in self.inst.nodes().iter().enumerate() {
            if e_off[k] > node.energy || t_off[k] < 0.0 || e_off[k] < 0.0 {
                return None;
            }
            let t_loc = frame.min((node.energy - e_off[k]) / node.local_power());
            local += node.local_bits(t_loc);
            capacity += self.inst.offload_capacity(k, t_off[k], e_off[k]);
        }
        Some((local, capacity, (frame - spent).max(0.0) * self.remote_rate))
    }

    /// Best `tau_r` for fixed offloading: the objective is piecewise linear
    /// and concave in `tau_r`, so one of three breakpoints is optimal.
    fn best_tau(&self, t_off: &[f64], e_off: &[f64]) -> Option<(f64, f64)> {
        let frame = self.frame();
        let hi = frame - t_off.iter().sum::<f64>();
        if hi < self.tau_lb {
            return None;
        }
        let (_, capacity, _) = self.parts(self.tau_lb, t_off, e_off)?;
        let kink = (hi - capacity / self.remote_rate).clamp(self.tau_lb, hi);
        [self.tau_lb, kink, hi]
            .iter()
            .filter_map(|&tau| self.value(tau, t_off, e_off).map(|v| (tau, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn solution(&self, tau_r: f64, t_off: &[f64], e_off: &[f64]) -> PrimalSolution {
        let frame = self.frame();
        let nodes = self.inst.nodes();
        let t_loc: Vec<f64> = nodes
            .iter()
            .zip(e_off)
            .map(|(n, e)| frame.min(((n.energy - e) / n.local_power()).max(0.0)))
            .collect();
        let caps: Vec<f64> = (0..nodes.len())
            .map(|k| self.inst.offload_capacity(k, t_off[k], e_off[k]))
            .collect();
        let total_cap: f64 = caps.iter().sum();
        let budget = (frame - tau_r - t_off.iter().sum::<f64>()).max(0.0) * self.remote_rate;
        let share = if total_cap > 0.0 {
            (budget / total_cap).min(1.0)
        } else {
            0.0
        };
        let r_mec: Vec<f64> = caps.iter().map(|c| c * share).collect();
        let f_mec = allocate_processors(&r_mec, self.inst.system().mec_cpu_max);
        PrimalSolution::assemble(self.inst, tau_r, t_loc, t_off.to_vec(), e_off.to_vec(), r_mec, f_mec)
    }
}

fn linspace(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Exhaustive search over per-node `t_off` and per-node battery fraction
/// spent on offloading, `points` values per axis. For each grid point
/// `tau_r` is set to the best of its breakpoints, which dominates any grid
/// over `[tau_r_lb, T]`.
pub fn grid_solve(instance: &Instance, points: usize) -> Result<PrimalSolution> {
    grid_solve_refined(instance, points, 0)
}

/// Axis-by-axis grid search with `levels` zoom rounds per axis.
///
/// Each axis is searched on `points` values, then repeatedly on a grid
/// spanning one cell either side of the best value, with the remaining
/// axes optimized the same way for every candidate. Maximizing out the
/// other variables keeps the objective concave, so each axis is unimodal
/// and zooming cannot lose the optimum. Cost grows as
/// `(points (levels + 1))^(2M)`.
pub fn grid_solve_refined(instance: &Instance, points: usize, levels: usize) -> Result<PrimalSolution> {
    let m = instance.m();
    if m > GRID_MAX_NODES {
        return Err(Error::OracleLimit {
            max: GRID_MAX_NODES,
            found: m,
        });
    }
    let fill = FillIn::new(instance)?;
    let search = GridSearch {
        fill: &fill,
        energies: instance.nodes().iter().map(|n| n.energy).collect(),
        points: points.max(2),
        levels,
        m,
    };
    // Axes: t_off per node, then battery fraction per node.
    let mut z = vec![0.0; 2 * m];
    let (tau, _) = search
        .axis(0, &mut z)
        .expect("nothing offloaded at tau_r_lb is always feasible");
    let (t_off, e_off) = search.split(&z);
    Ok(fill.solution(tau, &t_off, &e_off))
}

struct GridSearch<'a> {
    fill: &'a FillIn<'a>,
    energies: Vec<f64>,
    points: usize,
    levels: usize,
    m: usize,
}

impl GridSearch<'_> {
    fn split(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let e = z[self.m..].iter().zip(&self.energies).map(|(f, e)| f * e).collect();
        (z[..self.m].to_vec(), e)
    }

    /// Best `(tau_r, value)` over axes `d..` with axes `..d` fixed in `z`;
    /// leaves the maximizer in `z[d..]`.
    fn axis(&self, d: usize, z: &mut [f64]) -> Option<(f64, f64)> {
        if d == z.len() {
            let (t, e) = self.split(z);
            return self.fill.best_tau(&t, &e);
        }
        let ceil = if d < self.m { self.fill.frame() } else { 1.0 };
        let (mut lo, mut hi) = (0.0, ceil);
        let mut best: Option<(Vec<f64>, f64, f64)> = None;
        for _ in 0..=self.levels {
            for i in 0..self.points {
                z[d] = linspace(lo, hi, self.points, i);
                if let Some((tau, v)) = self.axis(d + 1, z) {
                    if best.as_ref().is_none_or(|(_, _, b)| v > *b) {
                        best = Some((z[d..].to_vec(), tau, v));
                    }
                }
            }
            let Some((point, _, _)) = best.as_ref() else {
                break;
            };
            let cell = (hi - lo) / (self.points - 1) as f64;
            lo = (point[0] - cell).max(0.0);
            hi = (point[0] + cell).min(ceil);
        }
        let (point, tau, v) = best?;
        z[d..].copy_from_slice(&point);
        Some((tau, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultistartSettings {
    pub starts: usize,
    pub local_steps: usize,
    pub seed: u64,
}

impl Default for MultistartSettings {
    fn default() -> Self {
        Self {
            starts: 20,
            local_steps: 4000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartResult {
    pub best: PrimalSolution,
    /// Final objective of every start, in start order.
    pub start_values: Vec<f64>,
}

/// Pattern-search ascent from random feasible starts over `(t_off, e_off)`,
/// with `tau_r` maximized exactly at every evaluation.
pub fn multistart_solve(instance: &Instance, starts: usize, local_steps: usize) -> Result<PrimalSolution> {
    multistart_detailed(
        instance,
        &MultistartSettings {
            starts,
            local_steps,
            ..MultistartSettings::default()
        },
    )
    .map(|r| r.best)
}

pub fn multistart_detailed(instance: &Instance, settings: &MultistartSettings) -> Result<MultistartResult> {
    let m = instance.m();
    if m > MULTISTART_MAX_NODES {
        return Err(Error::OracleLimit {
            max: MULTISTART_MAX_NODES,
            found: m,
        });
    }
    let fill = FillIn::new(instance)?;
    let window = fill.frame() - fill.tau_lb;
    let energies: Vec<f64> = instance.nodes().iter().map(|n| n.energy).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    // Normalized coordinates: t_off,k / window and e_off,k / E_k, in [0, 1].
    let dims = 2 * m;
    let project = |z: &mut [f64]| {
        z.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        let total: f64 = z[..m].iter().sum();
        if total > 1.0 {
            z[..m].iter_mut().for_each(|v| *v /= total);
        }
    };
    let eval = |z: &[f64]| -> (f64, f64) {
        let t: Vec<f64> = z[..m].iter().map(|v| v * window).collect();
        let e: Vec<f64> = z[m..].iter().zip(&energies).map(|(v, en)| v * en).collect();
        fill.best_tau(&t, &e)
            .map_or((fill.tau_lb, f64::NEG_INFINITY), |(tau, v)| (tau, v))
    };

    let mut directions: Vec<Vec<f64>> = Vec::new();
    for i in 0..dims {
        for sign in [1.0, -1.0] {
            let mut d = vec![0.0; dims];
            d[i] = sign;
            directions.push(d);
        }
        for j in i + 1..dims {
            for (a, b) in [(1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (-1.0, -1.0)] {
                let mut d = vec![0.0; dims];
                d[i] = a;
                d[j] = b;
                directions.push(d);
            }
        }
    }

    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut start_values = Vec::with_capacity(settings.starts);
    for _ in 0..settings.starts.max(1) {
        let mut z: Vec<f64> = (0..dims).map(|_| unit(&mut rng)).collect();
        project(&mut z);
        let (mut tau, mut value) = eval(&z);
        let mut step = 0.25;
        let mut steps = 0;
        while steps < settings.local_steps && step > 1e-12 {
            steps += 1;
            let mut improved = false;
            let random: Vec<f64> = (0..dims).map(|_| unit(&mut rng) - 0.5).collect();
            for d in directions.iter().chain(core::iter::once(&random)) {
                let mut y: Vec<f64> = z.iter().zip(d).map(|(a, b)| a + step * b).collect();
                project(&mut y);
                let (t, v) = eval(&y);
                if v > value {
                    z = y;
                    tau = t;
                    value = v;
                    improved = true;
                    break;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        start_values.push(value);
        if best.as_ref().is_none_or(|(_, _, b)| value > *b) {
            best = Some((z, tau, value));
        }
    }

    let (z, tau, _) = best.expect("at least one start");
    let t: Vec<f64> = z[..m].iter().map(|v| v * window).collect();
    let e: Vec<f64> = z[m..].iter().zip(&energies).map(|(v, en)| v * en).collect();
    Ok(MultistartResult {
        best: fill.solution(tau, &t, &e),
        start_values,
    })
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Best objective over the vertices of a bounded linear program, found by
/// solving every square subsystem of active constraints; `None` when no
/// vertex is feasible. Exponential in the size, meant for a handful of
/// variables. Infinite upper bounds are skipped, so unbounded programs are
/// not detected.
pub fn lp_vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    // Every constraint as `a x <= b` or `a x = b`.
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (a, &b) in lp.a_eq.iter().zip(&lp.b_eq) {
        rows.push((a.clone(), b, true));
    }
    for (a, &b) in lp.a_ub.iter().zip(&lp.b_ub) {
        rows.push((a.clone(), b, false));
    }
    for j in 0..n {
        let mut down = vec![0.0; n];
        down[j] = -1.0;
        rows.push((down, -lp.lower[j], false));
        if lp.upper[j].is_finite() {
            let mut up = vec![0.0; n];
            up[j] = 1.0;
            rows.push((up, lp.upper[j], false));
        }
    }
    let n_eq = lp.a_eq.len();
    if n_eq > n {
        return None;
    }

    let mut best: Option<f64> = None;
    let mut chosen: Vec<usize> = (0..n_eq).collect();
    let mut visit = |idx: &[usize]| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
        let Some(x) = solve_square(a, b) else { return };
        let feasible = rows.iter().all(|(row, rhs, eq)| {
            let v = dot(row, &x);
            let tol = 1e-9 * (1.0 + rhs.abs());
            if *eq {
                (v - rhs).abs() <= tol
            } else {
                v <= rhs + tol
            }
        });
        if feasible {
            let v = dot(&lp.c, &x);
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    };
    combinations(n_eq, rows.len(), n, &mut chosen, &mut visit);
    best
}

/// Extends `chosen` (which always holds the equalities) with every subset of
/// `start..total` up to `k` indices.
fn combinations(start: usize, total: usize, k: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        f(chosen);
        return;
    }
    for i in start..total {
        if total - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        combinations(i + 1, total, k, chosen, f);
        chosen.pop();
    }
}

/// Gauss-Jordan with partial pivoting; `None` for a (near) singular system.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_constraints, ChannelGains};

    fn inst(alpha: f64, energy: f64, m: usize) -> Instance {
        let mut ch = ChannelGains::uniform(1.0, m);
        ch.pt_pr = 1e-6;
        Instance::table1(alpha, 50.0, energy, ch).unwrap()
    }

    #[test]
    fn relay_only_weight_fills_frame() {
        let i = inst(1.0, 1.0, 1);
        let sol = grid_solve(&i, 20).unwrap();
        assert_eq!(sol.tau_r, 0.1);
        assert!((sol.objective - i.relay_rate(0.1)).abs() < 1e-6);
    }

    #[test]
    fn empty_battery_leaves_only_relaying() {
        let i = inst(0.4, 0.0, 1);
        let sol = grid_solve(&i, 15).unwrap();
        assert_eq!(sol.total_computation(), 0.0);
        assert!((sol.objective - 0.4 * i.relay_rate(sol.tau_r)).abs() < 1e-9);
    }

    #[test]
    fn outputs_are_feasible() {
        let i = inst(0.3, 1.0, 2);
        let g = grid_solve(&i, 7).unwrap();
        assert!(check_constraints(&i, &g, 1e-6).is_feasible());
        let ms = multistart_solve(&i, 3, 500).unwrap();
        let rep = check_constraints(&i, &ms, 1e-6);
        assert!(rep.is_feasible(), "{:?}", rep.violations);
    }

    #[test]
    fn refuses_large_instances() {
        let i = inst(0.3, 1.0, 3);
        assert_eq!(
            grid_solve(&i, 5).unwrap_err(),
            Error::OracleLimit { max: 2, found: 3 }
        );
    }
}
