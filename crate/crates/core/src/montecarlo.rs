//! Rayleigh-fading scenarios, paired α sweeps and their aggregation.
//!
//! Channels are drawn from ChaCha8 seeded with the sweep seed, using stream
//! `trial` for trial `trial`. Within a stream the draw order is fixed:
//! PT-PR, PT-AP, AP-PR, then the nodes in order. Every (α, placement,
//! energy) cell of one trial therefore sees the same fading realization,
//! and adding grid points never perturbs any draw.

use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::baseline::solve_equal_allocation;
use crate::error::{Error, Result};
use crate::math;
use crate::model::{ChannelGains, Geometry, Instance, Node, PrimalSolution, SystemParams};
use crate::recovery::{solve_instance, SolveSettings};

/// Mean squared gain of each link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeans {
    pub pt_pr: f64,
    pub pt_ap: f64,
    pub ap_pr: f64,
    pub iot: f64,
}

impl Default for ChannelMeans {
    fn default() -> Self {
        Self {
            pt_pr: 1e-3,
            pt_ap: 1.0,
            ap_pr: 1.0,
            iot: 5.0,
        }
    }
}

impl ChannelMeans {
    fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("channel_means.pt_pr", self.pt_pr),
            ("channel_means.pt_ap", self.pt_ap),
            ("channel_means.ap_pr", self.ap_pr),
            ("channel_means.iot", self.iot),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    field: field.into(),
                    reason: "must be finite and > 0",
                });
            }
        }
        Ok(())
    }
}

/// The generator for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Independent exponential squared gains for `m` nodes.
pub fn sample_channels<R: rand_core::RngCore + ?Sized>(
    rng: &mut R,
    means: &ChannelMeans,
    m: usize,
) -> Result<ChannelGains> {
    means.validate()?;
    let mut draw = |mean: f64| {
        // The rate is finite and positive after validation.
        Exp::new(1.0 / mean).expect("valid rate").sample(rng)
    };
    let pt_pr = draw(means.pt_pr);
    let pt_ap = draw(means.pt_ap);
    let ap_pr = draw(means.ap_pr);
    let iot = (0..m).map(|_| draw(means.iot)).collect();
    Ok(ChannelGains {
        pt_pr,
        pt_ap,
        ap_pr,
        iot,
    })
}

/// Relaying rate over the direct-link rate.
pub fn primary_gain(instance: &Instance, solution: &PrimalSolution) -> Result<f64> {
    let direct = instance.direct_rate();
    if !(direct > 0.0) {
        return Err(Error::DegenerateDirectLink);
    }
    Ok(solution.r_relay / direct)
}

/// Total computed bits over what the nodes manage with local computing only.
pub fn iot_gain(instance: &Instance, solution: &PrimalSolution) -> f64 {
    let frame = instance.system().frame;
    let base: f64 = instance.nodes().iter().map(|n| n.local_only_bits(frame)).sum();
    solution.total_computation() / base
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Shared system parameters; `alpha` is overridden by the grid.
    pub system: SystemParams,
    /// Node template; `energy` is overridden by the energy levels.
    pub node: Node,
    pub nodes: usize,
    pub d_pt_pr: f64,
    pub d_node: f64,
    pub alpha_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub channel_means: ChannelMeans,
    pub placements: Vec<f64>,
    pub energy_levels: Vec<f64>,
    pub solve: SolveSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            system: SystemParams::table1(0.5),
            node: Node::table1(1.0),
            nodes: 20,
            d_pt_pr: 100.0,
            d_node: 10.0,
            alpha_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            trials: 200,
            seed: 1,
            channel_means: ChannelMeans::default(),
            placements: alloc::vec![20.0, 50.0, 80.0],
            energy_levels: alloc::vec![0.5, 1.0],
            solve: SolveSettings::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason| {
            Err(Error::InvalidParameter {
                field: field.into(),
                reason,
            })
        };
        if self.trials == 0 {
            return bad("trials", "must be >= 1");
        }
        if self.nodes == 0 {
            return bad("nodes", "must be >= 1");
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("alpha_grid", "must be non-empty with values in [0, 1]");
        }
        if self.placements.is_empty() {
            return bad("placements", "must be non-empty");
        }
        if self.energy_levels.is_empty() {
            return bad("energy_levels", "must be non-empty");
        }
        self.channel_means.validate()?;
        // Build one instance per grid cell with dummy channels so geometry,
        // energies and system parameters are checked up front.
        let channels = ChannelGains::uniform(1.0, self.nodes);
        for &d in &self.placements {
            for &e in &self.energy_levels {
                self.instance(self.alpha_grid[0], d, e, channels.clone())?;
            }
        }
        Ok(())
    }

    pub fn instance(&self, alpha: f64, d_pt_ap: f64, energy: f64, channels: ChannelGains) -> Result<Instance> {
        let system = SystemParams {
            alpha,
            ..self.system
        };
        let node = Node {
            energy,
            ..self.node.clone()
        };
        Instance::new(
            system,
            Geometry::collinear(self.d_pt_pr, d_pt_ap, self.d_node, self.nodes),
            alloc::vec![node; self.nodes],
            channels,
        )
    }

    /// Number of (placement, energy, trial) work units.
    pub fn units(&self) -> usize {
        self.placements.len() * self.energy_levels.len() * self.trials
    }

    /// Decodes a work unit index into (placement, energy, trial) indices,
    /// trial varying fastest.
    pub fn unit(&self, index: usize) -> (usize, usize, usize) {
        let trial = index % self.trials;
        let rest = index / self.trials;
        (rest / self.energy_levels.len(), rest % self.energy_levels.len(), trial)
    }
}

/// Metrics of one solved paired trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub relay_rate: f64,
    pub computation_rate: f64,
    pub primary_gain: f64,
    pub iot_gain: f64,
    pub optimal_utility: f64,
    pub equal_utility: f64,
    pub utility_gap: f64,
}

pub const METRICS: [&str; 7] = [
    "relay_rate",
    "computation_rate",
    "primary_gain",
    "iot_gain",
    "optimal_utility",
    "equal_utility",
    "utility_gap",
];

impl TrialMetrics {
    pub fn values(&self) -> [f64; 7] {
        [
            self.relay_rate,
            self.computation_rate,
            self.primary_gain,
            self.iot_gain,
            self.optimal_utility,
            self.equal_utility,
            self.utility_gap,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Solved(TrialMetrics),
    Infeasible {
        #[serde(with = "crate::serde_float")]
        tau_r_lb: f64,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub alpha: f64,
    pub d_pt_ap: f64,
    pub energy: f64,
    pub trial: usize,
    pub outcome: TrialOutcome,
}

/// Solves one (placement, energy, trial) unit at every α of the grid with
/// both allocations. Records come back in α-grid order.
pub fn run_unit(config: &SweepConfig, index: usize) -> Result<Vec<TrialRecord>> {
    let (p, e, trial) = config.unit(index);
    let mut rng = trial_rng(config.seed, trial as u64);
    let channels = sample_channels(&mut rng, &config.channel_means, config.nodes)?;
    let d_pt_ap = config.placements[p];
    let energy = config.energy_levels[e];
    config
        .alpha_grid
        .iter()
        .map(|&alpha| {
            let inst = config.instance(alpha, d_pt_ap, energy, channels.clone())?;
            Ok(TrialRecord {
                alpha,
                d_pt_ap,
                energy,
                trial,
                outcome: run_trial(&inst, &config.solve),
            })
        })
        .collect()
}

/// Optimal and equal-allocation solves of one instance, reduced to metrics.
pub fn run_trial(instance: &Instance, settings: &SolveSettings) -> TrialOutcome {
    let failed = |e: Error| TrialOutcome::Failed {
        error: alloc::format!("{e}"),
    };
    match instance.feasibility() {
        Ok(_) => {}
        Err(Error::InfeasibleInstance { tau_r_lb, .. }) => return TrialOutcome::Infeasible { tau_r_lb },
        Err(e) => return failed(e),
    }
    let optimal = match solve_instance(instance, settings) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let equal = match solve_equal_allocation(instance, settings) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let sol = &optimal.solution;
    let primary = match primary_gain(instance, sol) {
        Ok(g) => g,
        Err(e) => return failed(e),
    };
    TrialOutcome::Solved(TrialMetrics {
        relay_rate: sol.r_relay,
        computation_rate: sol.total_computation(),
        primary_gain: primary,
        iot_gain: iot_gain(instance, sol),
        optimal_utility: sol.objective,
        equal_utility: equal.solution.objective,
        utility_gap: sol.objective - equal.solution.objective,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            math::sqrt(ss / (n - 1) as f64)
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub d_pt_ap: f64,
    pub energy: f64,
    pub n_feasible: usize,
    pub n_total: usize,
    /// One summary per entry of [`METRICS`].
    pub metrics: Vec<Summary>,
}

impl SweepCell {
    pub fn feasible_fraction(&self) -> f64 {
        self.n_feasible as f64 / self.n_total as f64
    }

    pub fn metric(&self, name: &str) -> Option<Summary> {
        METRICS.iter().position(|m| *m == name).map(|i| self.metrics[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Cells ordered by placement, then energy, then α.
    pub cells: Vec<SweepCell>,
    /// Every trial record, ordered like the cells and by trial within a cell.
    pub records: Vec<TrialRecord>,
}

/// One CSV row: `alpha, d_pt_ap, energy, metric, mean, std, n_feasible, n_total`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub alpha: f64,
    pub d_pt_ap: f64,
    pub energy: f64,
    pub metric: &'static str,
    pub mean: f64,
    pub std: f64,
    pub n_feasible: usize,
    pub n_total: usize,
}

pub const CSV_HEADER: [&str; 8] = [
    "alpha",
    "d_pt_ap",
    "energy",
    "metric",
    "mean",
    "std",
    "n_feasible",
    "n_total",
];

impl SweepReport {
    pub fn cell(&self, alpha: f64, d_pt_ap: f64, energy: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.alpha == alpha && c.d_pt_ap == d_pt_ap && c.energy == energy)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.cells
            .iter()
            .flat_map(|c| {
                METRICS.iter().zip(&c.metrics).map(move |(name, s)| CsvRow {
                    alpha: c.alpha,
                    d_pt_ap: c.d_pt_ap,
                    energy: c.energy,
                    metric: name,
                    mean: s.mean,
                    std: s.std,
                    n_feasible: c.n_feasible,
                    n_total: c.n_total,
                })
            })
            .collect()
    }
}

/// Builds the report from the outputs of [`run_unit`] for every unit index,
/// in any order.
pub fn aggregate(config: &SweepConfig, units: Vec<(usize, Vec<TrialRecord>)>) -> SweepReport {
    let mut units = units;
    units.sort_by_key(|(i, _)| *i);
    let n_alpha = config.alpha_grid.len();
    let mut cells = Vec::new();
    let mut records = Vec::new();
    for chunk in units.chunks(config.trials) {
        for a in 0..n_alpha {
            let cell_records: Vec<&TrialRecord> = chunk.iter().filter_map(|(_, r)| r.get(a)).collect();
            let solved: Vec<TrialMetrics> = cell_records
                .iter()
                .filter_map(|r| match r.outcome {
                    TrialOutcome::Solved(m) => Some(m),
                    _ => None,
                })
                .collect();
            let first = cell_records[0];
            let metrics = (0..METRICS.len())
                .map(|i| {
                    let values: Vec<f64> = solved.iter().map(|m| m.values()[i]).collect();
                    Summary::of(&values)
                })
                .collect();
            cells.push(SweepCell {
                alpha: first.alpha,
                d_pt_ap: first.d_pt_ap,
                energy: first.energy,
                n_feasible: solved.len(),
                n_total: cell_records.len(),
                metrics,
            });
            records.extend(cell_records.into_iter().cloned());
        }
    }
    SweepReport { cells, records }
}

/// Sequential sweep. Solver failures end up in the records; only an
/// invalid configuration is an error.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let units = (0..config.units())
        .map(|i| run_unit(config, i).map(|r| (i, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, units))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_split_is_stable() {
        let means = ChannelMeans::default();
        let a = sample_channels(&mut trial_rng(7, 3), &means, 4).unwrap();
        let b = sample_channels(&mut trial_rng(7, 3), &means, 4).unwrap();
        let c = sample_channels(&mut trial_rng(7, 4), &means, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // More nodes only appends draws.
        let d = sample_channels(&mut trial_rng(7, 3), &means, 6).unwrap();
        assert_eq!(a.iot[..], d.iot[..4]);
        assert_eq!(a.pt_pr, d.pt_pr);
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.2909944487358056).abs() < 1e-15);
        assert_eq!(Summary::of(&[5.0]).std, 0.0);
        assert!(Summary::of(&[]).mean.is_nan());
    }

    #[test]
    fn unit_indexing() {
        let cfg = SweepConfig {
            trials: 3,
            ..SweepConfig::default()
        };
        assert_eq!(cfg.units(), 3 * 2 * 3);
        assert_eq!(cfg.unit(0), (0, 0, 0));
        assert_eq!(cfg.unit(4), (0, 1, 1));
        assert_eq!(cfg.unit(17), (2, 1, 2));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SweepConfig {
            alpha_grid: alloc::vec![1.5],
            ..SweepConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig {
            placements: alloc::vec![100.0],
            ..SweepConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
