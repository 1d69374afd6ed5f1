//! Lagrangian dual of the reduced problem and its ellipsoid-method solution.
//!
//! Multipliers are laid out as one flat vector `[zeta..., mu_1..mu_M,
//! lambda_1..lambda_M, eta_1..eta_M]`. The time-coupling block `zeta` has one
//! entry when the MEC CPU is shared proportionally and `M` entries when every
//! node receives a fixed `1/M` share (see [`Allocation`]).
//!
//! The inner maximization runs over the box
//!
//! ```text
//! tau_r in [tau_lb, T]   t_loc,k in [0, T]   t_off,k in [0, T - tau_lb]
//! e_off,k in [0, E_k]    R_MEC,k in [0, R_max]
//! ```
//!
//! which contains every feasible point, so the dual value is a valid upper
//! bound on the primal optimum everywhere in the nonnegative orthant.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::model::{offload_capacity, Instance, PrimalSolution};

/// Smallest `lambda_k` used inside the power-density ratio.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// How the MEC CPU is split between offloaded tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Allocation {
    /// Shares proportional to offloaded bits; one shared time multiplier.
    Proportional,
    /// Fixed `f_max / M` per node; one time multiplier per node.
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    /// Time-coupling multipliers: length 1 for [`Allocation::Proportional`],
    /// `M` for [`Allocation::Equal`].
    pub zeta: Vec<f64>,
    /// Local-time multipliers.
    pub mu: Vec<f64>,
    /// Energy multipliers.
    pub lambda: Vec<f64>,
    /// Offload-capacity multipliers.
    pub eta: Vec<f64>,
}

impl DualPoint {
    pub fn zeros(allocation: Allocation, m: usize) -> Self {
        let nz = zeta_len(allocation, m);
        Self {
            zeta: vec![0.0; nz],
            mu: vec![0.0; m],
            lambda: vec![0.0; m],
            eta: vec![0.0; m],
        }
    }

    pub fn m(&self) -> usize {
        self.mu.len()
    }

    pub fn dim(&self) -> usize {
        self.zeta.len() + 3 * self.m()
    }

    pub fn zeta_total(&self) -> f64 {
        self.zeta.iter().sum()
    }

    /// Flat `[zeta, mu, lambda, eta]` vector.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.zeta);
        v.extend_from_slice(&self.mu);
        v.extend_from_slice(&self.lambda);
        v.extend_from_slice(&self.eta);
        v
    }

    pub fn from_slice(allocation: Allocation, m: usize, v: &[f64]) -> Self {
        let nz = zeta_len(allocation, m);
        assert_eq!(v.len(), nz + 3 * m, "dual vector length");
        Self {
            zeta: v[..nz].to_vec(),
            mu: v[nz..nz + m].to_vec(),
            lambda: v[nz + m..nz + 2 * m].to_vec(),
            eta: v[nz + 2 * m..].to_vec(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.to_vec().iter().all(|&x| x >= 0.0)
    }
}

fn zeta_len(allocation: Allocation, m: usize) -> usize {
    match allocation {
        Allocation::Proportional => 1,
        Allocation::Equal => m,
    }
}

/// Quantities whose signs decide the Lagrangian maximizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchValues {
    /// Offload power density `e_off / t_off` (J/s).
    pub rho: Vec<f64>,
    /// Offload-time switch: offload the whole window when negative.
    pub s_off: Vec<f64>,
    /// Local-time switch: compute for the whole frame when negative.
    pub u: Vec<f64>,
    /// Offloaded-bits switch: offload at the cap when negative.
    pub v: Vec<f64>,
    /// Relay-time switch: relay for the whole frame when negative.
    pub s_relay: f64,
}

/// Which interval endpoints were picked on an exactly-zero switch value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tie {
    RelayTime,
    LocalTime(usize),
    OffloadTime(usize),
    OffloadBits(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub primal: PrimalSolution,
    /// Ties were resolved to the lower endpoint.
    pub ties: Vec<Tie>,
}

/// Per-instance constants for the dual of one allocation rule.
#[derive(Debug, Clone)]
pub(crate) struct DualModel<'a> {
    pub inst: &'a Instance,
    pub allocation: Allocation,
    pub tau_lb: f64,
    /// Offload window `T - tau_lb`.
    pub window: f64,
    /// Relayed bits per second, `(B_w / 2) log2(1 + min gamma)`.
    pub relay_per_sec: f64,
    /// Remote-compute seconds per offloaded bit: `C / f_max` or `C M / f_max`.
    pub remote_cost: f64,
    /// Box bound on each `R_MEC,k`.
    pub r_max: f64,
    pub snr: Vec<f64>,
}

impl<'a> DualModel<'a> {
    pub fn new(inst: &'a Instance, allocation: Allocation) -> Result<Self> {
        let c = inst.common_cycles_per_bit()?;
        let tau_lb = inst.feasibility()?;
        let s = inst.system();
        let share = match allocation {
            Allocation::Proportional => s.mec_cpu_max,
            Allocation::Equal => s.mec_cpu_max / inst.m() as f64,
        };
        let window = s.frame - tau_lb;
        let remote_cost = c / share;
        Ok(Self {
            inst,
            allocation,
            tau_lb,
            window,
            relay_per_sec: inst.relay_rate_per_second(),
            remote_cost,
            r_max: window / remote_cost,
            snr: (0..inst.m()).map(|k| inst.node_snr_per_watt(k)).collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.inst.m()
    }

    pub fn dim(&self) -> usize {
        zeta_len(self.allocation, self.m()) + 3 * self.m()
    }

    fn zeta_for(&self, dual: &DualPoint, k: usize) -> f64 {
        match self.allocation {
            Allocation::Proportional => dual.zeta[0],
            Allocation::Equal => dual.zeta[k],
        }
    }

    pub fn switch_values(&self, dual: &DualPoint) -> SwitchValues {
        let s = self.inst.system();
        let alpha = s.alpha;
        let bw = s.bandwidth;
        let zeta = dual.zeta_total();
        let m = self.m();
        let mut out = SwitchValues {
            rho: vec![0.0; m],
            s_off: vec![0.0; m],
            u: vec![0.0; m],
            v: vec![0.0; m],
            s_relay: zeta - alpha * self.relay_per_sec,
        };
        for (k, node) in self.inst.nodes().iter().enumerate() {
            let (eta, lambda, snr) = (dual.eta[k], dual.lambda[k], self.snr[k]);
            let rho = if snr > 0.0 {
                (eta * bw / (lambda.max(LAMBDA_FLOOR) * math::LN_2) - 1.0 / snr).max(0.0)
            } else {
                0.0
            };
            let x = rho * snr;
            out.rho[k] = rho;
            out.s_off[k] = if rho > 0.0 {
                zeta - eta * bw * math::log2_1p(x) + eta * bw * math::LOG2_E * x / (x + 1.0)
            } else {
                zeta
            };
            out.u[k] = dual.mu[k] + lambda * node.local_power() - (1.0 - alpha) * node.local_rate();
            out.v[k] = self.zeta_for(dual, k) * self.remote_cost + eta - (1.0 - alpha);
        }
        out
    }

    /// Maximizer of the Lagrangian over the box for this dual point.
    pub fn candidate(&self, dual: &DualPoint) -> Candidate {
        let sw = self.switch_values(dual);
        let frame = self.inst.system().frame;
        let m = self.m();
        let mut ties = Vec::new();

        if sw.s_relay == 0.0 {
            ties.push(Tie::RelayTime);
        }
        let tau_r = if sw.s_relay < 0.0 { frame } else { self.tau_lb };

        let mut t_loc = vec![0.0; m];
        let mut t_off = vec![0.0; m];
        let mut e_off = vec![0.0; m];
        let mut r_mec = vec![0.0; m];
        for k in 0..m {
            if sw.u[k] == 0.0 {
                ties.push(Tie::LocalTime(k));
            }
            if sw.u[k] < 0.0 {
                t_loc[k] = frame;
            }
            if sw.v[k] == 0.0 {
                ties.push(Tie::OffloadBits(k));
            }
            if sw.v[k] < 0.0 {
                r_mec[k] = self.r_max;
            }
            let (t, e, tie) = self.best_offload(k, dual, &sw);
            if tie {
                ties.push(Tie::OffloadTime(k));
            }
            t_off[k] = t;
            e_off[k] = e;
        }
        let f_mec = vec![0.0; m];
        Candidate {
            primal: PrimalSolution::assemble(self.inst, tau_r, t_loc, t_off, e_off, r_mec, f_mec),
            ties,
        }
    }

    /// Maximizes `-zeta t - lambda e + eta t B log2(1 + e snr / t)` over
    /// `t in [0, window]`, `e in [0, E_k]`.
    fn best_offload(&self, k: usize, dual: &DualPoint, sw: &SwitchValues) -> (f64, f64, bool) {
        let energy = self.inst.nodes()[k].energy;
        let (eta, rho, s_off) = (dual.eta[k], sw.rho[k], sw.s_off[k]);
        if energy <= 0.0 || eta <= 0.0 || rho <= 0.0 || self.window <= 0.0 {
            return (0.0, 0.0, false);
        }
        if s_off >= 0.0 {
            return (0.0, 0.0, s_off == 0.0);
        }
        if rho * self.window <= energy {
            return (self.window, rho * self.window, false);
        }
        // Battery-limited: e = E and t solves psi(E snr / t) = zeta / (eta B).
        let snr = self.snr[k];
        let zeta = dual.zeta_total();
        let bw = self.inst.system().bandwidth;
        let t_min = energy / rho;
        let t_opt = if zeta <= 0.0 {
            f64::INFINITY
        } else {
            energy * snr / invert_psi(zeta / (eta * bw))
        };
        (t_opt.clamp(t_min, self.window), energy, false)
    }

    /// Lagrangian value at an arbitrary primal point.
    pub fn lagrangian(&self, dual: &DualPoint, p: &PrimalSolution) -> f64 {
        let objective = self.inst.objective(p.tau_r * self.relay_per_sec, &p.r_local, &p.r_mec);
        let residual = self.residuals(p);
        objective
            - dual
                .to_vec()
                .iter()
                .zip(&residual)
                .map(|(y, r)| y * r)
                .sum::<f64>()
    }

    /// Constraint residuals in dual-vector order.
    pub fn residuals(&self, p: &PrimalSolution) -> Vec<f64> {
        let s = self.inst.system();
        let m = self.m();
        let base = p.tau_r + p.t_off.iter().sum::<f64>() - s.frame;
        let mut out = Vec::with_capacity(self.dim());
        match self.allocation {
            Allocation::Proportional => {
                out.push(base + self.remote_cost * p.r_mec.iter().sum::<f64>());
            }
            Allocation::Equal => {
                out.extend(p.r_mec.iter().map(|r| base + self.remote_cost * r));
            }
        }
        out.extend(p.t_loc.iter().map(|t| t - s.frame));
        for (k, node) in self.inst.nodes().iter().enumerate() {
            out.push(node.local_power() * p.t_loc[k] + p.e_off[k] - node.energy);
        }
        for k in 0..m {
            out.push(p.r_mec[k] - offload_capacity(self.inst.system().bandwidth, self.snr[k], p.t_off[k], p.e_off[k]));
        }
        out
    }

    /// Heuristic multiplier magnitudes, one per dual coordinate.
    ///
    /// `zeta` is bounded by the larger of the relaying and the remote-compute
    /// value of a second; `eta` by `1 - alpha`; `lambda` by the bits per joule
    /// of offloading the whole battery over a frame, or of local computing,
    /// whichever is smaller; `mu` by the local bit rate.
    pub fn scales(&self) -> Vec<f64> {
        let s = self.inst.system();
        let w = (1.0 - s.alpha).max(1e-6);
        let m = self.m();
        let zeta_unit = (s.alpha * self.relay_per_sec).max(w / self.remote_cost);
        let mut out = Vec::with_capacity(self.dim());
        match self.allocation {
            Allocation::Proportional => out.push(zeta_unit),
            Allocation::Equal => out.extend(core::iter::repeat_n(zeta_unit / m as f64, m)),
        }
        let nodes = self.inst.nodes();
        out.extend(nodes.iter().map(|n| w * n.local_rate()));
        out.extend(nodes.iter().map(|n| {
            let local = w / (n.chip_coeff * n.cpu_rate * n.cpu_rate);
            let offload = w * s.bandwidth * s.frame / (math::LN_2 * n.energy.max(1e-9));
            local.min(offload)
        }));
        out.extend(core::iter::repeat_n(w, m));
        out
    }
}

/// Inverse of `psi(x) = log2(1 + x) - x / ((1 + x) ln 2)` on `x > 0`.
fn invert_psi(c: f64) -> f64 {
    fn psi(x: f64) -> f64 {
        if x < 1e-3 {
            // Series of ln(1 + x) - x / (1 + x); avoids cancellation.
            x * x * (0.5 - x * (2.0 / 3.0 - 0.75 * x)) * math::LOG2_E
        } else {
            (libm::log1p(x) - x / (1.0 + x)) * math::LOG2_E
        }
    }
    // Newton on u = ln x; dpsi/du = x^2 / ((1 + x)^2 ln 2).
    let mut u = if c > 2.0 {
        (c + math::LOG2_E) * math::LN_2
    } else {
        0.5 * math::ln(2.0 * c * math::LN_2)
    };
    let (mut lo, mut hi) = (-745.0f64, 709.0f64);
    for _ in 0..60 {
        let x = libm::exp(u);
        let f = psi(x) - c;
        if f > 0.0 {
            hi = hi.min(u);
        } else {
            lo = lo.max(u);
        }
        let r = x / (1.0 + x);
        let df = r * r * math::LOG2_E;
        let mut next = u - f / df;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-14 * (1.0 + u.abs()) {
            u = next;
            break;
        }
        u = next;
    }
    libm::exp(u)
}

/// Switch values of the proportional-allocation dual.
pub fn switch_values(instance: &Instance, dual: &DualPoint) -> Result<SwitchValues> {
    Ok(DualModel::new(instance, Allocation::Proportional)?.switch_values(dual))
}

/// Lagrangian maximizer at `dual` (proportional allocation).
pub fn primal_from_dual(instance: &Instance, dual: &DualPoint) -> Result<Candidate> {
    Ok(DualModel::new(instance, Allocation::Proportional)?.candidate(dual))
}

pub fn lagrangian_value(instance: &Instance, dual: &DualPoint, primal: &PrimalSolution) -> Result<f64> {
    Ok(DualModel::new(instance, Allocation::Proportional)?.lagrangian(dual, primal))
}

/// Constraint residuals at `primal`, ordered `(zeta; mu; lambda; eta)`.
///
/// The dual function's subgradient is the negation of this vector.
pub fn subgradient(instance: &Instance, primal: &PrimalSolution) -> Result<Vec<f64>> {
    Ok(DualModel::new(instance, Allocation::Proportional)?.residuals(primal))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSettings {
    /// Relative width of the dual-value bracket at which to stop.
    pub tolerance: f64,
    /// `None` selects `50 n^2` for an `n`-dimensional dual.
    pub max_iterations: Option<usize>,
    /// Initial ellipsoid radius in units of the multiplier scales.
    pub initial_radius: f64,
    /// Radius doublings allowed when the optimum lands near the boundary.
    pub max_restarts: usize,
    pub record_trace: bool,
}

impl Default for DualSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: None,
            initial_radius: 10.0,
            max_restarts: 3,
            record_trace: false,
        }
    }
}

impl DualSettings {
    pub fn iteration_cap(&self, dim: usize) -> usize {
        self.max_iterations.unwrap_or(50 * dim * dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Dual value at the centre; NaN on feasibility cuts.
    pub dual_value: f64,
    pub best_dual_value: f64,
    pub log_volume: f64,
}

/// Central-cut ellipsoid `{y : (y - c)^T P^-1 (y - c) <= 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidState {
    pub center: Vec<f64>,
    /// Row-major `n x n` shape matrix `P`.
    pub shape: Vec<f64>,
    pub iteration: usize,
    pub best_dual_value: f64,
    /// `ln det P`, tracked through the updates.
    pub log_det: f64,
}

impl EllipsoidState {
    pub fn new(center: Vec<f64>, semi_axes: &[f64]) -> Self {
        let n = center.len();
        let mut shape = vec![0.0; n * n];
        let mut log_det = 0.0;
        for (i, &r) in semi_axes.iter().enumerate() {
            shape[i * n + i] = r * r;
            log_det += 2.0 * math::ln(r);
        }
        Self {
            center,
            shape,
            iteration: 0,
            best_dual_value: f64::INFINITY,
            log_det,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `sqrt(a^T P a)`: half-width of the ellipsoid along `a`.
    pub fn width_along(&self, a: &[f64]) -> f64 {
        let pa = self.shape_times(a);
        math::sqrt(dot(a, &pa).max(0.0))
    }

    fn shape_times(&self, a: &[f64]) -> Vec<f64> {
        let n = self.dim();
        self.shape.chunks_exact(n).map(|row| dot(row, a)).collect()
    }

    /// Keeps the half `{y : a^T (y - c) <= 0}`. Returns `false` when the
    /// cut direction has no width, leaving the state untouched.
    pub fn cut(&mut self, a: &[f64]) -> bool {
        self.deep_cut(a, 0.0)
    }

    /// Keeps `{y : a^T (y - c) <= -depth * sqrt(a^T P a)}` with `depth` in
    /// `[0, 1)`; larger values are clamped just below one.
    pub fn deep_cut(&mut self, a: &[f64], depth: f64) -> bool {
        let pa = self.shape_times(a);
        let apa = dot(a, &pa);
        self.cut_along(&pa, apa, depth)
    }

    /// Deep cut with `P a` and `a^T P a` already at hand.
    fn cut_along(&mut self, pa: &[f64], apa: f64, depth: f64) -> bool {
        let n = self.dim();
        let nf = n as f64;
        let depth = depth.clamp(0.0, 1.0 - 1e-9);
        if !(apa > 0.0) || !apa.is_finite() {
            return false;
        }
        let norm = math::sqrt(apa);
        let b: Vec<f64> = pa.iter().map(|v| v / norm).collect();
        let step = (1.0 + nf * depth) / (nf + 1.0);
        for (c, bi) in self.center.iter_mut().zip(&b) {
            *c -= step * bi;
        }
        let grow = nf * nf * (1.0 - depth * depth) / (nf * nf - 1.0);
        let shrink = 2.0 * step / (1.0 + depth);
        for i in 0..n {
            let bi = b[i] * shrink;
            let row = &mut self.shape[i * n..(i + 1) * n];
            for (p, &bj) in row.iter_mut().zip(&b) {
                *p = grow * (*p - bi * bj);
            }
        }
        self.log_det += nf * math::ln(grow) + math::ln((nf - 1.0) * (1.0 - depth) / ((nf + 1.0) * (1.0 + depth)));
        self.iteration += 1;
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualOutcome {
    pub dual: DualPoint,
    /// Smallest dual value found: an upper bound on the primal optimum.
    pub dual_value: f64,
    /// Certified lower end of the bracket around the dual optimum.
    pub lower_bound: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub trace: Vec<TraceRow>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes the dual function over the nonnegative orthant.
pub fn solve_dual(instance: &Instance, settings: &DualSettings) -> Result<DualOutcome> {
    solve_dual_with(instance, Allocation::Proportional, settings)
}

pub fn solve_dual_with(
    instance: &Instance,
    allocation: Allocation,
    settings: &DualSettings,
) -> Result<DualOutcome> {
    let model = DualModel::new(instance, allocation)?;
    run_ellipsoid(&model, settings)
}

pub(crate) fn run_ellipsoid(model: &DualModel<'_>, settings: &DualSettings) -> Result<DualOutcome> {
    let n = model.dim();
    let m = model.m();
    let scales = model.scales();
    let cap = settings.iteration_cap(n);

    let mut best_vec = scales.clone();
    let mut best_value = f64::INFINITY;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut radius = settings.initial_radius;
    let mut restarts = 0;

    loop {
        let semi: Vec<f64> = scales.iter().map(|s| s * radius).collect();
        let mut ell = EllipsoidState::new(scales.clone(), &semi);
        let mut lower = f64::NEG_INFINITY;
        let mut converged = false;

        while iterations < cap {
            iterations += 1;
            let negative = ell
                .center
                .iter()
                .enumerate()
                .filter(|(_, &y)| y < 0.0)
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i);
            let (ok, value) = if let Some(i) = negative {
                // Cut along -e_i: P a is minus column i of P.
                let pa: Vec<f64> = (0..n).map(|j| -ell.shape[j * n + i]).collect();
                let apa = ell.shape[i * n + i];
                let depth = -ell.center[i] / math::sqrt(apa.max(0.0));
                (ell.cut_along(&pa, apa, depth), f64::NAN)
            } else {
                let dual = DualPoint::from_slice(model.allocation, m, &ell.center);
                let cand = model.candidate(&dual);
                let value = model.lagrangian(&dual, &cand.primal);
                if value < best_value {
                    best_value = value;
                    best_vec.clone_from(&ell.center);
                }
                ell.best_dual_value = best_value;
                let grad: Vec<f64> = model.residuals(&cand.primal).iter().map(|r| -r).collect();
                let pa = ell.shape_times(&grad);
                let apa = dot(&grad, &pa);
                let width = math::sqrt(apa.max(0.0));
                lower = lower.max(value - width);
                if width == 0.0 {
                    converged = true;
                    (true, value)
                } else {
                    (ell.cut_along(&pa, apa, (value - best_value) / width), value)
                }
            };
            if settings.record_trace {
                trace.push(TraceRow {
                    iteration: iterations,
                    dual_value: value,
                    best_dual_value: best_value,
                    log_volume: 0.5 * ell.log_det,
                });
            }
            if converged || best_value - lower <= settings.tolerance * best_value.abs().max(1.0) {
                converged = true;
                break;
            }
            if !ok {
                // Degenerate shape: the ellipsoid has collapsed numerically.
                converged = true;
                break;
            }
        }

        let near_boundary = best_vec
            .iter()
            .zip(&scales)
            .map(|(y, s)| {
                let d = (y - s) / (s * radius);
                d * d
            })
            .sum::<f64>()
            > 0.25;
        if near_boundary && restarts < settings.max_restarts && iterations < cap {
            restarts += 1;
            radius *= 2.0;
            continue;
        }

        let dual = DualPoint::from_slice(model.allocation, m, &best_vec);
        if !converged {
            return Err(Error::MaxIterationsExceeded {
                iterations,
                best: dual,
                best_value,
            });
        }
        return Ok(DualOutcome {
            dual,
            dual_value: best_value,
            lower_bound: lower,
            iterations,
            restarts,
            trace,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChannelGains;

    fn instance(alpha: f64, m: usize) -> Instance {
        let mut ch = ChannelGains::uniform(1.0, m);
        ch.pt_pr = 1e-6;
        for (k, g) in ch.iot.iter_mut().enumerate() {
            *g = 2.0 + k as f64;
        }
        Instance::table1(alpha, 50.0, 1.0, ch).unwrap()
    }

    #[test]
    fn psi_inverse_roundtrip() {
        for &x in &[1e-6, 1e-3, 0.5, 3.0, 1e3, 1e15, 1e20] {
            let c = (libm::log1p(x) - x / (1.0 + x)) * math::LOG2_E;
            let back = invert_psi(c);
            assert!((back - x).abs() / x < 1e-6, "{x} -> {back}");
        }
    }

    #[test]
    fn rho_clamps_to_zero_for_large_lambda() {
        let inst = instance(0.5, 1);
        let model = DualModel::new(&inst, Allocation::Proportional).unwrap();
        let dual = DualPoint {
            zeta: vec![3.0],
            mu: vec![0.0],
            lambda: vec![1e30],
            eta: vec![0.5],
        };
        let sw = model.switch_values(&dual);
        assert_eq!(sw.rho[0], 0.0);
        assert_eq!(sw.s_off[0], 3.0);
    }

    #[test]
    fn relay_switch_sign() {
        let inst = instance(1.0, 1);
        let model = DualModel::new(&inst, Allocation::Proportional).unwrap();
        let sw = model.switch_values(&DualPoint::zeros(Allocation::Proportional, 1));
        assert!(sw.s_relay < 0.0);
        let inst0 = instance(0.0, 1);
        let model0 = DualModel::new(&inst0, Allocation::Proportional).unwrap();
        let mut d = DualPoint::zeros(Allocation::Proportional, 1);
        d.zeta[0] = 7.5;
        assert_eq!(model0.switch_values(&d).s_relay, 7.5);
    }

    #[test]
    fn positive_switches_give_idle_candidate() {
        let inst = instance(0.5, 2);
        let model = DualModel::new(&inst, Allocation::Proportional).unwrap();
        let dual = DualPoint {
            zeta: vec![1e12],
            mu: vec![1e12; 2],
            lambda: vec![1e12; 2],
            eta: vec![1.0; 2],
        };
        let sw = model.switch_values(&dual);
        assert!(sw.s_relay > 0.0 && sw.u.iter().chain(&sw.v).chain(&sw.s_off).all(|&x| x > 0.0));
        let cand = model.candidate(&dual);
        assert_eq!(cand.primal.tau_r, model.tau_lb);
        assert!(cand.primal.t_loc.iter().chain(&cand.primal.t_off).all(|&x| x == 0.0));
        assert!(cand.primal.r_mec.iter().chain(&cand.primal.e_off).all(|&x| x == 0.0));
    }

    #[test]
    fn zero_multipliers_reduce_to_objective() {
        let inst = instance(0.3, 2);
        let model = DualModel::new(&inst, Allocation::Proportional).unwrap();
        let zero = DualPoint::zeros(Allocation::Proportional, 2);
        let p = PrimalSolution::assemble(
            &inst,
            0.07,
            vec![0.05, 0.1],
            vec![0.01, 0.0],
            vec![0.2, 0.0],
            vec![1e5, 0.0],
            vec![0.0; 2],
        );
        assert_eq!(model.lagrangian(&zero, &p), p.objective);
    }

    #[test]
    fn residual_layout() {
        let inst = instance(0.5, 2);
        let model = DualModel::new(&inst, Allocation::Proportional).unwrap();
        let mut p = PrimalSolution::idle(&inst, model.tau_lb);
        p.t_loc[1] = inst.system().frame;
        let r = model.residuals(&p);
        assert_eq!(r.len(), 7);
        assert!((r[0] - (model.tau_lb - 0.1)).abs() < 1e-15);
        assert!(r[0] < 0.0);
        assert_eq!(r[2], 0.0);
    }

    #[test]
    fn ellipsoid_volume_decreases() {
        let mut e = EllipsoidState::new(vec![0.0; 4], &[1.0, 2.0, 3.0, 4.0]);
        let mut last = e.log_det;
        for i in 0..50 {
            let a: Vec<f64> = (0..4).map(|j| ((i * 7 + j * 3) % 5) as f64 - 2.0).collect();
            if a.iter().all(|&x| x == 0.0) {
                continue;
            }
            assert!(e.cut(&a));
            assert!(e.log_det < last);
            last = e.log_det;
        }
    }

    #[test]
    fn ellipsoid_minimizes_a_quadratic() {
        // min (y0 - 1)^2 + 4 (y1 - 2)^2 + |y2 - 0.5| on y >= 0.
        let f = |y: &[f64]| (y[0] - 1.0).powi(2) + 4.0 * (y[1] - 2.0).powi(2) + (y[2] - 0.5).abs();
        let mut e = EllipsoidState::new(vec![1.0; 3], &[10.0; 3]);
        let mut best = f64::INFINITY;
        for _ in 0..2000 {
            let y = e.center.clone();
            best = best.min(f(&y));
            let g = [2.0 * (y[0] - 1.0), 8.0 * (y[1] - 2.0), (y[2] - 0.5).signum()];
            if !e.cut(&g) {
                break;
            }
        }
        assert!(best < 1e-8, "{best}");
    }
}
