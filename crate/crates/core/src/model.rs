//! Scenario data, rate formulas, constraint evaluation and the feasibility gate.
//!
//! Everything is SI: watts, seconds, hertz, joules and bits. Power values quoted
//! in dBm are converted once with [`dbm_to_watt`] at the configuration boundary.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// `P_W = 10^((P_dBm - 30) / 10)`.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    math::powf(10.0, (dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * libm::log10(watt) + 30.0
}

/// Frame-level constants shared by every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Frame duration `T` (s).
    pub frame: f64,
    /// Cellular bandwidth `B_w` (Hz).
    pub bandwidth: f64,
    /// Total in-band noise power `sigma^2` (W).
    pub noise_power: f64,
    /// Primary transmitter power (W).
    pub pt_power: f64,
    /// Access-point relaying power (W).
    pub ap_power: f64,
    /// MEC server CPU rate (cycles/s).
    pub mec_cpu_max: f64,
    /// Weight of the relaying rate in the objective, in `[0, 1]`.
    pub alpha: f64,
    /// Path-loss exponents: PT-PR, AP-PR, PT-AP, IoT-AP.
    pub path_loss: [f64; 4],
}

impl SystemParams {
    /// Parameters of the reference evaluation scenario.
    pub fn table1(alpha: f64) -> Self {
        Self {
            frame: 0.1,
            bandwidth: 1.4e6,
            noise_power: dbm_to_watt(-132.24),
            pt_power: dbm_to_watt(43.0),
            ap_power: dbm_to_watt(30.0),
            mec_cpu_max: 1e12,
            alpha,
            path_loss: [4.0, 4.0, 4.0, 2.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("system.frame", self.frame)?;
        positive("system.bandwidth", self.bandwidth)?;
        positive("system.noise_power", self.noise_power)?;
        positive("system.pt_power", self.pt_power)?;
        positive("system.ap_power", self.ap_power)?;
        positive("system.mec_cpu_max", self.mec_cpu_max)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("system.alpha", "must lie in [0, 1]"));
        }
        for (i, &eta) in self.path_loss.iter().enumerate() {
            if !eta.is_finite() || eta < 1.0 {
                return Err(invalid(format!("system.path_loss[{i}]"), "must be >= 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub d_pt_pr: f64,
    pub d_pt_ap: f64,
    pub d_ap_pr: f64,
    /// Node-to-access-point distances, one per node.
    pub d_iot: Vec<f64>,
}

impl Geometry {
    /// Access point on the straight PT-PR segment, every node at `d_node`.
    pub fn collinear(d_pt_pr: f64, d_pt_ap: f64, d_node: f64, m: usize) -> Self {
        Self {
            d_pt_pr,
            d_pt_ap,
            d_ap_pr: d_pt_pr - d_pt_ap,
            d_iot: alloc::vec![d_node; m],
        }
    }

    fn validate(&self) -> Result<()> {
        positive("geometry.d_pt_pr", self.d_pt_pr)?;
        positive("geometry.d_pt_ap", self.d_pt_ap)?;
        positive("geometry.d_ap_pr", self.d_ap_pr)?;
        for (k, &d) in self.d_iot.iter().enumerate() {
            positive(&format!("geometry.d_iot[{k}]"), d)?;
        }
        Ok(())
    }
}

/// Computation and battery parameters of one IoT node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// CPU cycles needed per bit `C_k`.
    pub cycles_per_bit: f64,
    /// Local CPU rate `f_k` (cycles/s).
    pub cpu_rate: f64,
    /// Chip energy coefficient `w_k`.
    pub chip_coeff: f64,
    /// Battery energy `E_k` (J). Zero is allowed and disables the node.
    pub energy: f64,
}

impl Node {
    pub fn table1(energy: f64) -> Self {
        Self {
            cycles_per_bit: 1e4,
            cpu_rate: 1e10,
            chip_coeff: 1e-28,
            energy,
        }
    }

    /// Bits computed locally in `t_loc` seconds.
    pub fn local_bits(&self, t_loc: f64) -> f64 {
        t_loc * self.cpu_rate / self.cycles_per_bit
    }

    /// Local bits per second, `f_k / C_k`.
    pub fn local_rate(&self) -> f64 {
        self.cpu_rate / self.cycles_per_bit
    }

    /// Energy per second of local computation, `w_k f_k^3 / C_k`.
    pub fn local_power(&self) -> f64 {
        self.chip_coeff * self.cpu_rate * self.cpu_rate * self.cpu_rate / self.cycles_per_bit
    }

    /// Local-only bits with the battery and the frame as the only limits.
    pub fn local_only_bits(&self, frame: f64) -> f64 {
        let t = frame.min(self.energy / self.local_power());
        self.local_bits(t)
    }

    fn validate(&self, k: usize) -> Result<()> {
        positive(&format!("nodes[{k}].cycles_per_bit"), self.cycles_per_bit)?;
        positive(&format!("nodes[{k}].cpu_rate"), self.cpu_rate)?;
        positive(&format!("nodes[{k}].chip_coeff"), self.chip_coeff)?;
        nonnegative(&format!("nodes[{k}].energy"), self.energy)
    }
}

/// Squared channel magnitudes `|h|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGains {
    pub pt_pr: f64,
    pub pt_ap: f64,
    pub ap_pr: f64,
    pub iot: Vec<f64>,
}

impl ChannelGains {
    pub fn uniform(gain: f64, m: usize) -> Self {
        Self {
            pt_pr: gain,
            pt_ap: gain,
            ap_pr: gain,
            iot: alloc::vec![gain; m],
        }
    }

    fn validate(&self) -> Result<()> {
        nonnegative("channels.pt_pr", self.pt_pr)?;
        nonnegative("channels.pt_ap", self.pt_ap)?;
        nonnegative("channels.ap_pr", self.ap_pr)?;
        for (k, &g) in self.iot.iter().enumerate() {
            nonnegative(&format!("channels.iot[{k}]"), g)?;
        }
        Ok(())
    }
}

/// A complete scenario. Construct through [`Instance::new`] so the
/// per-node arrays are guaranteed to agree in length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    system: SystemParams,
    geometry: Geometry,
    nodes: Vec<Node>,
    channels: ChannelGains,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    system: SystemParams,
    geometry: Geometry,
    nodes: Vec<Node>,
    channels: ChannelGains,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.system, raw.geometry, raw.nodes, raw.channels)
    }
}

impl From<Instance> for RawInstance {
    fn from(inst: Instance) -> Self {
        Self {
            system: inst.system,
            geometry: inst.geometry,
            nodes: inst.nodes,
            channels: inst.channels,
        }
    }
}

impl Instance {
    pub fn new(
        system: SystemParams,
        geometry: Geometry,
        nodes: Vec<Node>,
        channels: ChannelGains,
    ) -> Result<Self> {
        let m = nodes.len();
        if m == 0 {
            return Err(invalid("nodes", "at least one node is required"));
        }
        if geometry.d_iot.len() != m {
            return Err(Error::LengthMismatch {
                field: "geometry.d_iot",
                expected: m,
                found: geometry.d_iot.len(),
            });
        }
        if channels.iot.len() != m {
            return Err(Error::LengthMismatch {
                field: "channels.iot",
                expected: m,
                found: channels.iot.len(),
            });
        }
        system.validate()?;
        geometry.validate()?;
        for (k, node) in nodes.iter().enumerate() {
            node.validate(k)?;
        }
        channels.validate()?;
        Ok(Self {
            system,
            geometry,
            nodes,
            channels,
        })
    }

    /// Reference scenario with `m` identical nodes at 10 m, access point
    /// `d_pt_ap` metres from the PT on the 100 m PT-PR segment.
    pub fn table1(alpha: f64, d_pt_ap: f64, energy: f64, channels: ChannelGains) -> Result<Self> {
        let m = channels.iot.len();
        Self::new(
            SystemParams::table1(alpha),
            Geometry::collinear(100.0, d_pt_ap, 10.0, m),
            alloc::vec![Node::table1(energy); m],
            channels,
        )
    }

    pub fn system(&self) -> &SystemParams {
        &self.system
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn channels(&self) -> &ChannelGains {
        &self.channels
    }

    /// Number of IoT nodes `M`.
    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let mut system = self.system.clone();
        system.alpha = alpha;
        system.validate()?;
        Ok(Self { system, ..self.clone() })
    }

    /// Shared cycles-per-bit, or an error if nodes disagree.
    pub fn common_cycles_per_bit(&self) -> Result<f64> {
        let c = self.nodes[0].cycles_per_bit;
        if self.nodes.iter().all(|n| n.cycles_per_bit == c) {
            Ok(c)
        } else {
            Err(Error::HeterogeneousCycles)
        }
    }

    pub fn direct_snr(&self) -> f64 {
        let s = &self.system;
        link_snr(
            s.pt_power,
            self.channels.pt_pr,
            self.geometry.d_pt_pr,
            s.path_loss[0],
            s.noise_power,
        )
    }

    /// `min(gamma_PT-AP, gamma_PT-PR + gamma_AP-PR)` for decode-and-forward.
    pub fn relay_snr(&self) -> f64 {
        let s = &self.system;
        let first_hop = link_snr(
            s.pt_power,
            self.channels.pt_ap,
            self.geometry.d_pt_ap,
            s.path_loss[2],
            s.noise_power,
        );
        let combined = self.direct_snr()
            + link_snr(
                s.ap_power,
                self.channels.ap_pr,
                self.geometry.d_ap_pr,
                s.path_loss[1],
                s.noise_power,
            );
        first_hop.min(combined)
    }

    /// Relayed bits per second of relaying time, `(B_w / 2) log2(1 + gamma)`.
    pub fn relay_rate_per_second(&self) -> f64 {
        0.5 * self.system.bandwidth * math::log2_1p(self.relay_snr())
    }

    /// Bits delivered to the PR by relaying for `tau_r` seconds.
    pub fn relay_rate(&self, tau_r: f64) -> f64 {
        tau_r * self.relay_rate_per_second()
    }

    /// Bits the direct PT-PR link carries over a whole frame.
    pub fn direct_rate(&self) -> f64 {
        self.system.frame * self.system.bandwidth * math::log2_1p(self.direct_snr())
    }

    /// Received SNR per watt of transmit power on node `k`'s uplink,
    /// `|h_k|^2 d_k^(-eta4) / sigma^2`.
    pub fn node_snr_per_watt(&self, k: usize) -> f64 {
        let s = &self.system;
        self.channels.iot[k] * math::powf(self.geometry.d_iot[k], -s.path_loss[3]) / s.noise_power
    }

    /// Upper bound on node `k`'s offloaded bits for the given time and energy.
    pub fn offload_capacity(&self, k: usize, t_off: f64, e_off: f64) -> f64 {
        offload_capacity(self.system.bandwidth, self.node_snr_per_watt(k), t_off, e_off)
    }

    /// Smallest relaying time for which the relayed rate matches the direct link.
    pub fn tau_r_lower_bound(&self) -> Result<f64> {
        let direct = self.direct_snr();
        if direct == 0.0 {
            return Ok(0.0);
        }
        let relay = self.relay_snr();
        if relay == 0.0 {
            return Err(Error::RelayPathDegenerate);
        }
        Ok(2.0 * self.system.frame * math::log2_1p(direct) / math::log2_1p(relay))
    }

    /// `tau_r^lb`, mapping every failure of the gate onto [`Error::InfeasibleInstance`].
    pub fn feasibility(&self) -> Result<f64> {
        let tau_lb = match self.tau_r_lower_bound() {
            Ok(t) => t,
            Err(Error::RelayPathDegenerate) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if tau_lb <= self.system.frame {
            Ok(tau_lb)
        } else {
            Err(Error::InfeasibleInstance {
                tau_r_lb: tau_lb,
                direct_rate: self.direct_rate(),
            })
        }
    }

    /// `alpha R_relay + (1 - alpha) sum_k (R_k + R_MEC,k)`.
    pub fn objective(&self, r_relay: f64, r_local: &[f64], r_mec: &[f64]) -> f64 {
        let alpha = self.system.alpha;
        let compute: f64 = r_local.iter().sum::<f64>() + r_mec.iter().sum::<f64>();
        alpha * r_relay + (1.0 - alpha) * compute
    }
}

/// `power * gain * distance^(-exponent) / sigma2`.
pub fn link_snr(power: f64, gain: f64, distance: f64, exponent: f64, sigma2: f64) -> f64 {
    power * gain * math::powf(distance, -exponent) / sigma2
}

/// `t B log2(1 + e s / t)` with `s` the SNR per watt; zero at `t = 0`.
pub fn offload_capacity(bandwidth: f64, snr_per_watt: f64, t_off: f64, e_off: f64) -> f64 {
    if t_off <= 0.0 || e_off <= 0.0 {
        return 0.0;
    }
    t_off * bandwidth * math::log2_1p(e_off * snr_per_watt / t_off)
}

/// One primal point of the joint problem together with its derived rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalSolution {
    pub tau_r: f64,
    pub t_loc: Vec<f64>,
    pub t_off: Vec<f64>,
    pub e_off: Vec<f64>,
    pub r_mec: Vec<f64>,
    pub f_mec: Vec<f64>,
    pub objective: f64,
    pub r_relay: f64,
    pub r_local: Vec<f64>,
}

impl PrimalSolution {
    /// Fills in relay bits, local bits and the objective from the decision variables.
    pub fn assemble(
        instance: &Instance,
        tau_r: f64,
        t_loc: Vec<f64>,
        t_off: Vec<f64>,
        e_off: Vec<f64>,
        r_mec: Vec<f64>,
        f_mec: Vec<f64>,
    ) -> Self {
        let r_relay = instance.relay_rate(tau_r);
        let r_local: Vec<f64> = instance
            .nodes()
            .iter()
            .zip(&t_loc)
            .map(|(n, &t)| n.local_bits(t))
            .collect();
        let objective = instance.objective(r_relay, &r_local, &r_mec);
        Self {
            tau_r,
            t_loc,
            t_off,
            e_off,
            r_mec,
            f_mec,
            objective,
            r_relay,
            r_local,
        }
    }

    /// No computation, relaying for `tau_r`.
    pub fn idle(instance: &Instance, tau_r: f64) -> Self {
        let m = instance.m();
        let z = alloc::vec![0.0; m];
        Self::assemble(instance, tau_r, z.clone(), z.clone(), z.clone(), z.clone(), z)
    }

    pub fn total_computation(&self) -> f64 {
        self.r_local.iter().sum::<f64>() + self.r_mec.iter().sum::<f64>()
    }
}

/// `alpha R_relay + (1 - alpha) sum (R_k + R_MEC,k)` recomputed from the variables.
pub fn objective(instance: &Instance, solution: &PrimalSolution) -> f64 {
    let r_local: Vec<f64> = instance
        .nodes()
        .iter()
        .zip(&solution.t_loc)
        .map(|(n, &t)| n.local_bits(t))
        .collect();
    instance.objective(instance.relay_rate(solution.tau_r), &r_local, &solution.r_mec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Offloaded bits within the uplink capacity.
    OffloadCapacity,
    /// Relayed bits at least the direct-link bits.
    RelayRate,
    /// Local computation within the frame.
    LocalTime,
    /// Remote computation within the time left after relaying and offloading.
    RemoteTime,
    /// Battery budget.
    Energy,
    /// MEC CPU shares within the server rate.
    MecCpu,
    /// Variable bounds: nonnegativity and `tau_r <= T`.
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSlack {
    pub kind: ConstraintKind,
    pub node: Option<usize>,
    /// `(rhs - lhs) / scale`; negative means violated.
    pub slack: f64,
}

impl fmt::Display for ConstraintSlack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(k) => write!(f, "{:?}[{k}]", self.kind),
            None => write!(f, "{:?}", self.kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub slacks: Vec<ConstraintSlack>,
    pub violations: Vec<ConstraintSlack>,
}

impl ConstraintReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> Option<ConstraintSlack> {
        self.slacks
            .iter()
            .copied()
            .min_by(|a, b| a.slack.total_cmp(&b.slack))
    }
}

/// Slack of every constraint of the joint problem at `solution`.
///
/// Each slack is divided by the magnitude of the terms on the constraint's
/// right-hand side (1 when those are all zero), so `tol` is relative.
pub fn check_constraints(instance: &Instance, solution: &PrimalSolution, tol: f64) -> ConstraintReport {
    let s = instance.system();
    let m = instance.m();
    let mut slacks = Vec::with_capacity(6 * m + 3);
    let mut push = |kind, node, rhs: f64, lhs: f64, scale: f64| {
        let scale = if scale > 0.0 { scale } else { 1.0 };
        slacks.push(ConstraintSlack {
            kind,
            node,
            slack: (rhs - lhs) / scale,
        });
    };

    let total_off: f64 = solution.t_off.iter().sum();
    let window = s.frame - solution.tau_r - total_off;
    let window_scale = s.frame.max(solution.tau_r + total_off);

    let direct = instance.direct_rate();
    let relayed = instance.relay_rate(solution.tau_r);
    push(ConstraintKind::RelayRate, None, relayed, direct, direct);

    let lowest = [solution.tau_r]
        .iter()
        .chain(&solution.t_loc)
        .chain(&solution.t_off)
        .chain(&solution.e_off)
        .chain(&solution.r_mec)
        .chain(&solution.f_mec)
        .fold(f64::INFINITY, |acc, &x| acc.min(x));
    push(ConstraintKind::Bounds, None, lowest.min(0.0), 0.0, 1.0);
    push(ConstraintKind::Bounds, None, s.frame, solution.tau_r, s.frame);

    let cpu_total: f64 = solution.f_mec.iter().sum();
    push(ConstraintKind::MecCpu, None, s.mec_cpu_max, cpu_total, s.mec_cpu_max);

    for (k, node) in instance.nodes().iter().enumerate() {
        // Scaled by the most the node could ever offload, like the other
        // rows, so round-off on a vanishing allocation is not blown up.
        let cap = instance.offload_capacity(k, solution.t_off[k], solution.e_off[k]);
        let cap_range = instance.offload_capacity(k, s.frame, node.energy).max(cap);
        push(ConstraintKind::OffloadCapacity, Some(k), cap, solution.r_mec[k], cap_range);

        push(ConstraintKind::LocalTime, Some(k), s.frame, solution.t_loc[k], s.frame);

        let r = solution.r_mec[k];
        let f = solution.f_mec[k];
        let remote_time = if r <= 0.0 {
            0.0
        } else if f > 0.0 {
            r * node.cycles_per_bit / f
        } else {
            f64::INFINITY
        };
        push(ConstraintKind::RemoteTime, Some(k), window, remote_time, window_scale);

        let used = node.local_power() * solution.t_loc[k] + solution.e_off[k];
        push(ConstraintKind::Energy, Some(k), node.energy, used, node.energy);
    }

    let violations = slacks.iter().copied().filter(|c| !(c.slack >= -tol)).collect();
    ConstraintReport { slacks, violations }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, "must be finite and > 0"))
    }
}

fn nonnegative(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, "must be finite and >= 0"))
    }
}

fn invalid(field: impl Into<String>, reason: &'static str) -> Error {
    Error::InvalidParameter {
        field: field.into(),
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_instance(d_pt_ap: f64) -> Instance {
        Instance::table1(0.5, d_pt_ap, 1.0, ChannelGains::uniform(1.0, 1)).unwrap()
    }

    #[test]
    fn link_snr_table1_values() {
        let snr = link_snr(19.953, 1e-3, 100.0, 4.0, 5.97e-17);
        // 19.953 * 1e-3 * 1e-8 / 5.97e-17
        assert!((snr - 3.342_211e6).abs() / 3.342e6 < 1e-5, "{snr}");
        assert_eq!(link_snr(19.953, 0.0, 100.0, 4.0, 5.97e-17), 0.0);
        assert_eq!(link_snr(2.0, 3.0, 1.0, 7.0, 0.5), 12.0);
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watt(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watt(43.0) - 19.952_623_149_688_8).abs() < 1e-9);
        assert!((dbm_to_watt(-132.24) - 5.970_352_865_838_4e-17).abs() < 1e-27);
        assert!((watt_to_dbm(dbm_to_watt(-17.5)) + 17.5).abs() < 1e-12);
    }

    #[test]
    fn relay_rate_matches_hand_evaluation() {
        let inst = unit_instance(20.0);
        let sigma2 = dbm_to_watt(-132.24);
        let p_pt = dbm_to_watt(43.0);
        let g_pt_ap = p_pt * 20f64.powi(-4) / sigma2;
        let g_pt_pr = p_pt * 100f64.powi(-4) / sigma2;
        let g_ap_pr = 1.0 * 80f64.powi(-4) / sigma2;
        let gamma = g_pt_ap.min(g_pt_pr + g_ap_pr);
        let expected = 0.1 * 1.4e6 / 2.0 * (1.0 + gamma).log2();
        let got = inst.relay_rate(0.1);
        assert!((got - expected).abs() / expected < 1e-12);
        assert_eq!(inst.relay_rate(0.0), 0.0);
        assert!((inst.relay_rate(0.05) * 2.0 - got).abs() / got < 1e-15);
    }

    #[test]
    fn direct_rate_values() {
        let mut ch = ChannelGains::uniform(1.0, 1);
        ch.pt_pr = 1e-3;
        let inst = Instance::table1(0.5, 50.0, 1.0, ch.clone()).unwrap();
        let d = inst.direct_rate();
        assert!((d - 3.04e6).abs() / 3.04e6 < 5e-3, "{d}");

        ch.pt_pr = 0.0;
        let inst = Instance::table1(0.5, 50.0, 1.0, ch).unwrap();
        assert_eq!(inst.direct_rate(), 0.0);
    }

    #[test]
    fn local_bits_arithmetic() {
        let n = Node::table1(1.0);
        assert!((n.local_bits(0.1) - 1e5).abs() < 1e-9);
        assert_eq!(n.local_bits(0.0), 0.0);
        let half = Node {
            cycles_per_bit: 5e3,
            ..n.clone()
        };
        assert!((half.local_bits(0.1) - 2.0 * n.local_bits(0.1)).abs() < 1e-9);
        assert!((n.local_only_bits(0.1) - 1e5).abs() < 1e-9);
    }

    #[test]
    fn offload_capacity_edges() {
        assert_eq!(offload_capacity(1.4e6, 1e15, 0.0, 1.0), 0.0);
        assert_eq!(offload_capacity(1.4e6, 1e15, 0.1, 0.0), 0.0);
        let c = offload_capacity(1.0, 1.0, 1.0, 1.0);
        assert!((c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn objective_weights() {
        let mut ch = ChannelGains::uniform(1.0, 2);
        ch.pt_pr = 1e-3;
        let inst = Instance::table1(0.5, 50.0, 1.0, ch).unwrap();
        assert_eq!(inst.objective(10.0, &[5.0, 5.0], &[4.0, 6.0]), 15.0);
        let a1 = inst.with_alpha(1.0).unwrap();
        assert_eq!(a1.objective(10.0, &[5.0, 5.0], &[4.0, 6.0]), 10.0);
        let a0 = inst.with_alpha(0.0).unwrap();
        assert_eq!(a0.objective(10.0, &[5.0, 5.0], &[4.0, 6.0]), 20.0);
    }

    #[test]
    fn lower_bound_cases() {
        let mut ch = ChannelGains::uniform(1.0, 1);
        ch.pt_pr = 0.0;
        let inst = Instance::table1(0.5, 50.0, 1.0, ch.clone()).unwrap();
        assert_eq!(inst.tau_r_lower_bound().unwrap(), 0.0);
        assert_eq!(inst.feasibility().unwrap(), 0.0);

        ch.pt_pr = 1e-3;
        ch.pt_ap = 0.0;
        let inst = Instance::table1(0.5, 50.0, 1.0, ch.clone()).unwrap();
        assert_eq!(inst.tau_r_lower_bound(), Err(Error::RelayPathDegenerate));
        match inst.feasibility() {
            Err(Error::InfeasibleInstance { tau_r_lb, .. }) => assert!(tau_r_lb > 0.1),
            other => panic!("{other:?}"),
        }

        // Relay SNR equal to direct SNR: bound is 2T.
        let inst = Instance::new(
            SystemParams::table1(0.5),
            Geometry::collinear(100.0, 100.0 - 1e-9, 10.0, 1),
            vec![Node::table1(1.0)],
            ChannelGains {
                pt_pr: 1.0,
                pt_ap: 1.0,
                ap_pr: 0.0,
                iot: vec![1.0],
            },
        )
        .unwrap();
        let lb = inst.tau_r_lower_bound().unwrap();
        assert!((lb - 0.2).abs() < 1e-6, "{lb}");
        assert!(inst.feasibility().is_err());
    }

    #[test]
    fn constraint_report_flags_overlong_local_time() {
        let mut ch = ChannelGains::uniform(1.0, 2);
        ch.pt_pr = 1e-6;
        let inst = Instance::table1(0.5, 50.0, 1.0, ch).unwrap();
        let lb = inst.feasibility().unwrap();
        let idle = PrimalSolution::idle(&inst, lb);
        assert!(check_constraints(&inst, &idle, 1e-9).is_feasible());

        let mut bad = idle.clone();
        bad.t_loc[1] = 0.2;
        let rep = check_constraints(&inst, &bad, 1e-6);
        assert!(rep
            .violations
            .iter()
            .any(|v| v.kind == ConstraintKind::LocalTime && v.node == Some(1)));
    }

    #[test]
    fn instance_rejects_bad_input() {
        let ch = ChannelGains::uniform(1.0, 2);
        let err = Instance::new(
            SystemParams::table1(0.5),
            Geometry::collinear(100.0, 50.0, 10.0, 3),
            vec![Node::table1(1.0); 2],
            ch.clone(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { field: "geometry.d_iot", .. }));

        let err = Instance::table1(1.5, 50.0, 1.0, ch.clone()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));

        let mut nodes = vec![Node::table1(1.0); 2];
        nodes[1].cycles_per_bit = 2e4;
        let inst = Instance::new(
            SystemParams::table1(0.5),
            Geometry::collinear(100.0, 50.0, 10.0, 2),
            nodes,
            ch,
        )
        .unwrap();
        assert_eq!(inst.common_cycles_per_bit(), Err(Error::HeterogeneousCycles));
    }
}
