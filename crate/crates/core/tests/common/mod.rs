#![allow(dead_code)]

use coopmec_core::montecarlo::{sample_channels, trial_rng, ChannelMeans};
use coopmec_core::{ChannelGains, Instance};

pub const PLACEMENTS: [f64; 3] = [20.0, 50.0, 80.0];

/// Feasible Rayleigh instances with Table 1 parameters, found by walking
/// the trial streams of `seed` in order.
pub fn feasible_instances(seed: u64, m: usize, alpha: f64, energy: f64, count: usize) -> Vec<Instance> {
    let means = ChannelMeans::default();
    let mut out = Vec::new();
    let mut trial = 0u64;
    while out.len() < count {
        let ch = sample_channels(&mut trial_rng(seed, trial), &means, m).unwrap();
        let d = PLACEMENTS[(trial % 3) as usize];
        trial += 1;
        let inst = Instance::table1(alpha, d, energy, ch).unwrap();
        if inst.feasibility().is_ok() {
            out.push(inst);
        }
    }
    out
}

/// A feasible deterministic instance with distinct node channels.
pub fn fixed_instance(alpha: f64, m: usize) -> Instance {
    let mut ch = ChannelGains::uniform(1.0, m);
    ch.pt_pr = 1e-6;
    for (k, g) in ch.iot.iter_mut().enumerate() {
        *g = 0.5 + 1.7 * k as f64;
    }
    Instance::table1(alpha, 50.0, 1.0, ch).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
