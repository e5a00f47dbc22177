//! Shared fixtures for the pipeline benchmarks.

use morbench_core::gramians::{empirical_wc, empirical_wo, GramianScales, GramianSet};
use morbench_core::thermal_block::{build, variant_theta, ThermalBlockConfig, ThetaSpec};
use morbench_core::{AffineLTISystem, ParameterPoint, SimGrid};

pub struct Fixture {
    pub system: AffineLTISystem,
    pub theta: ParameterPoint,
    pub grid: SimGrid,
    pub wc: GramianSet,
    pub wo: GramianSet,
}

/// Thermal block at a benchmark-friendly size with precomputed Gramians.
pub fn thermal_fixture(grid_n: usize, steps: usize) -> Fixture {
    let system = build(&ThermalBlockConfig::with_grid(grid_n)).expect("benchmark system");
    let theta = variant_theta(ThetaSpec::Fixed);
    let grid = SimGrid::new(1e-3, steps).expect("grid");
    let scales = GramianScales::for_system(&system);
    let wc = empirical_wc(&system, &theta, grid, &scales).expect("wc");
    let wo = empirical_wo(&system, &theta, grid, &scales).expect("wo");
    Fixture {
        system,
        theta,
        grid,
        wc,
        wo,
    }
}
