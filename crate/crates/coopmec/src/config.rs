//! TOML configuration.
//!
//! Every section is optional and falls back to the reference scenario.
//! Power levels take either a `_dbm` or a `_watt` key. Channel gains are
//! drawn from `[channel_means]` with the configured seed unless given
//! explicitly under `[channels]`; explicit values win link by link.

use std::fs;
use std::path::Path;

use coopmec_core::dual::DualSettings;
use coopmec_core::model::dbm_to_watt;
use coopmec_core::montecarlo::{sample_channels, trial_rng, ChannelMeans, SweepConfig};
use coopmec_core::{Geometry, Instance, Node, SolveSettings, SystemParams};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Model(#[from] coopmec_core::Error),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub nodes: NodeSection,
    #[serde(default)]
    pub channels: ChannelSection,
    #[serde(default)]
    pub channel_means: MeansSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub certify: CertifySection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub frame: Option<f64>,
    pub bandwidth: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub noise_power_watt: Option<f64>,
    pub pt_power_dbm: Option<f64>,
    pub pt_power_watt: Option<f64>,
    pub ap_power_dbm: Option<f64>,
    pub ap_power_watt: Option<f64>,
    pub mec_cpu_max: Option<f64>,
    pub alpha: Option<f64>,
    /// PT-PR, AP-PR, PT-AP, IoT-AP.
    pub path_loss: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub d_pt_pr: Option<f64>,
    pub d_pt_ap: Option<f64>,
    /// Defaults to `d_pt_pr - d_pt_ap`.
    pub d_ap_pr: Option<f64>,
    pub d_node: Option<f64>,
    pub d_iot: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSection {
    pub count: Option<usize>,
    pub cycles_per_bit: Option<f64>,
    pub cpu_rate: Option<f64>,
    pub chip_coeff: Option<f64>,
    pub energy: Option<f64>,
    pub energies: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub pt_pr: Option<f64>,
    pub pt_ap: Option<f64>,
    pub ap_pr: Option<f64>,
    pub iot: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeansSection {
    pub pt_pr: Option<f64>,
    pub pt_ap: Option<f64>,
    pub ap_pr: Option<f64>,
    pub iot: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub alpha_grid: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub placements: Option<Vec<f64>>,
    pub energy_levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub initial_radius: Option<f64>,
    pub max_restarts: Option<usize>,
    pub validation_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub nodes: Option<usize>,
    pub trials: Option<usize>,
    pub grid: Option<usize>,
    pub zoom_levels: Option<usize>,
    pub starts: Option<usize>,
    pub local_steps: Option<usize>,
}

/// Settings for the oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifySettings {
    pub nodes: usize,
    pub trials: usize,
    /// Grid points per axis; `None` picks 60 for one node and 25 for two.
    pub grid: Option<usize>,
    pub zoom_levels: usize,
    pub starts: usize,
    pub local_steps: usize,
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub system: SystemParams,
    pub geometry: Geometry,
    pub nodes: Vec<Node>,
    pub channels: ChannelSection,
    pub means: ChannelMeans,
    pub sweep: SweepConfig,
    pub solve: SolveSettings,
    pub certify: CertifySettings,
}

fn power(dbm: Option<f64>, watt: Option<f64>, name: &str, default_dbm: f64) -> Result<f64, ConfigError> {
    match (dbm, watt) {
        (Some(_), Some(_)) => Err(invalid(
            &format!("system.{name}"),
            format!("set either {name}_dbm or {name}_watt, not both"),
        )),
        (Some(d), None) => Ok(dbm_to_watt(d)),
        (None, Some(w)) => Ok(w),
        (None, None) => Ok(dbm_to_watt(default_dbm)),
    }
}

impl ConfigFile {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_owned(),
            source: Box::new(e),
        })
    }

    pub fn resolve(&self) -> Result<Config, ConfigError> {
        let reference = SystemParams::table1(0.5);
        let s = &self.system;
        let system = SystemParams {
            frame: s.frame.unwrap_or(reference.frame),
            bandwidth: s.bandwidth.unwrap_or(reference.bandwidth),
            noise_power: power(s.noise_power_dbm, s.noise_power_watt, "noise_power", -132.24)?,
            pt_power: power(s.pt_power_dbm, s.pt_power_watt, "pt_power", 43.0)?,
            ap_power: power(s.ap_power_dbm, s.ap_power_watt, "ap_power", 30.0)?,
            mec_cpu_max: s.mec_cpu_max.unwrap_or(reference.mec_cpu_max),
            alpha: s.alpha.unwrap_or(reference.alpha),
            path_loss: s.path_loss.unwrap_or(reference.path_loss),
        };
        system.validate()?;

        let n = &self.nodes;
        let count = match (&n.energies, n.count) {
            (Some(e), Some(c)) if e.len() != c => {
                return Err(invalid(
                    "nodes.energies",
                    format!("has {} entries but nodes.count is {c}", e.len()),
                ))
            }
            (Some(e), _) => e.len(),
            (None, c) => c.unwrap_or(20),
        };
        if count == 0 {
            return Err(invalid("nodes.count", "must be >= 1"));
        }
        if n.energy.is_some() && n.energies.is_some() {
            return Err(invalid("nodes.energy", "set either energy or energies, not both"));
        }
        let template = Node {
            cycles_per_bit: n.cycles_per_bit.unwrap_or(1e4),
            cpu_rate: n.cpu_rate.unwrap_or(1e10),
            chip_coeff: n.chip_coeff.unwrap_or(1e-28),
            energy: n.energy.unwrap_or(1.0),
        };
        let nodes: Vec<Node> = match &n.energies {
            Some(list) => list
                .iter()
                .map(|&energy| Node {
                    energy,
                    ..template.clone()
                })
                .collect(),
            None => vec![template.clone(); count],
        };

        let g = &self.geometry;
        let d_pt_pr = g.d_pt_pr.unwrap_or(100.0);
        let d_pt_ap = g.d_pt_ap.unwrap_or(50.0);
        let d_node = g.d_node.unwrap_or(10.0);
        if g.d_node.is_some() && g.d_iot.is_some() {
            return Err(invalid("geometry.d_node", "set either d_node or d_iot, not both"));
        }
        let d_iot = match &g.d_iot {
            Some(d) if d.len() != count => {
                return Err(invalid(
                    "geometry.d_iot",
                    format!("has {} entries for {count} nodes", d.len()),
                ))
            }
            Some(d) => d.clone(),
            None => vec![d_node; count],
        };
        let geometry = Geometry {
            d_pt_pr,
            d_pt_ap,
            d_ap_pr: g.d_ap_pr.unwrap_or(d_pt_pr - d_pt_ap),
            d_iot,
        };
        if let Some(iot) = &self.channels.iot {
            if iot.len() != count {
                return Err(invalid(
                    "channels.iot",
                    format!("has {} entries for {count} nodes", iot.len()),
                ));
            }
        }

        let defaults = ChannelMeans::default();
        let m = &self.channel_means;
        let means = ChannelMeans {
            pt_pr: m.pt_pr.unwrap_or(defaults.pt_pr),
            pt_ap: m.pt_ap.unwrap_or(defaults.pt_ap),
            ap_pr: m.ap_pr.unwrap_or(defaults.ap_pr),
            iot: m.iot.unwrap_or(defaults.iot),
        };

        let r = &self.solver;
        let dual_defaults = DualSettings::default();
        let solve = SolveSettings {
            dual: DualSettings {
                tolerance: r.tolerance.unwrap_or(dual_defaults.tolerance),
                max_iterations: r.max_iterations,
                initial_radius: r.initial_radius.unwrap_or(dual_defaults.initial_radius),
                max_restarts: r.max_restarts.unwrap_or(dual_defaults.max_restarts),
                record_trace: false,
            },
            validation_tol: r.validation_tol.unwrap_or(SolveSettings::default().validation_tol),
        };

        let seed = self.seed.unwrap_or(1);
        let w = &self.sweep;
        let sweep_defaults = SweepConfig::default();
        let sweep = SweepConfig {
            system: system.clone(),
            node: template,
            nodes: count,
            d_pt_pr,
            d_node,
            alpha_grid: w.alpha_grid.clone().unwrap_or(sweep_defaults.alpha_grid),
            trials: w.trials.unwrap_or(sweep_defaults.trials),
            seed,
            channel_means: means,
            placements: w.placements.clone().unwrap_or(sweep_defaults.placements),
            energy_levels: w.energy_levels.clone().unwrap_or(sweep_defaults.energy_levels),
            solve,
        };

        let c = &self.certify;
        let certify = CertifySettings {
            nodes: c.nodes.unwrap_or(1),
            trials: c.trials.unwrap_or(20),
            grid: c.grid,
            zoom_levels: c.zoom_levels.unwrap_or(4),
            starts: c.starts.unwrap_or(20),
            local_steps: c.local_steps.unwrap_or(2000),
        };

        Ok(Config {
            seed,
            system,
            geometry,
            nodes,
            channels: self.channels.clone(),
            means,
            sweep,
            solve,
            certify,
        })
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: shown.clone(),
            source,
        })?;
        ConfigFile::parse(&text, &shown)?.resolve()
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        ConfigFile::parse(text, "<inline>")?.resolve()
    }

    /// Sets the seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.sweep.seed = seed;
    }

    pub fn set_tolerance(&mut self, tolerance: f64) {
        self.solve.dual.tolerance = tolerance;
        self.sweep.solve.dual.tolerance = tolerance;
    }

    pub fn set_max_iterations(&mut self, max: usize) {
        self.solve.dual.max_iterations = Some(max);
        self.sweep.solve.dual.max_iterations = Some(max);
    }

    /// The single instance described by the file: channels drawn from the
    /// seed's first trial stream, overridden by any explicit gains.
    pub fn instance(&self) -> Result<Instance, ConfigError> {
        let mut rng = trial_rng(self.seed, 0);
        let mut gains = sample_channels(&mut rng, &self.means, self.nodes.len())?;
        let c = &self.channels;
        if let Some(v) = c.pt_pr {
            gains.pt_pr = v;
        }
        if let Some(v) = c.pt_ap {
            gains.pt_ap = v;
        }
        if let Some(v) = c.ap_pr {
            gains.ap_pr = v;
        }
        if let Some(v) = &c.iot {
            gains.iot.clone_from(v);
        }
        Ok(Instance::new(
            self.system.clone(),
            self.geometry.clone(),
            self.nodes.clone(),
            gains,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_scenario() {
        let cfg = Config::from_toml("").unwrap();
        assert_eq!(cfg.system, SystemParams::table1(0.5));
        assert_eq!(cfg.nodes.len(), 20);
        assert_eq!(cfg.geometry, Geometry::collinear(100.0, 50.0, 10.0, 20));
        assert_eq!(cfg.sweep.trials, 200);
    }

    #[test]
    fn power_units() {
        let cfg = Config::from_toml("[system]\npt_power_watt = 2.5\nap_power_dbm = 20\n").unwrap();
        assert_eq!(cfg.system.pt_power, 2.5);
        assert!((cfg.system.ap_power - 0.1).abs() < 1e-15);
        let err = Config::from_toml("[system]\npt_power_watt = 2.5\npt_power_dbm = 20\n").unwrap_err();
        assert!(err.to_string().contains("pt_power"), "{err}");
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = Config::from_toml("[system]\nframe = \"fast\"\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("frame") && text.contains("line 2"), "{text}");
        let err = Config::from_toml("[system]\nframes = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("frames"), "{err}");
        let err = Config::from_toml("[system]\nframe = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("system.frame"), "{err}");
    }

    #[test]
    fn explicit_channels_override_draws() {
        let cfg = Config::from_toml("[nodes]\ncount = 2\n[channels]\npt_ap = 0.0\niot = [1.0, 2.0]\n").unwrap();
        let inst = cfg.instance().unwrap();
        assert_eq!(inst.channels().pt_ap, 0.0);
        assert_eq!(inst.channels().iot, vec![1.0, 2.0]);
        let err = Config::from_toml("[nodes]\ncount = 2\n[channels]\niot = [1.0]\n").unwrap_err();
        assert!(err.to_string().contains("channels.iot"));
    }
}
