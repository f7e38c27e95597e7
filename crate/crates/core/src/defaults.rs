//! Default campaign parameters, in one place.
//!
//! Star campaign: N = 40 (M = 39), sigma = 0.2, alpha = 1.5, beta = 1, 50 runs
//! per point, 10 repeats. Modularity campaign: N = 100, M = 1500, sigma = 0.2,
//! alpha = 2, beta = 1, 40 ensembles.

pub const MASTER_SEED: u64 = 20_230_613;

pub const STAR_NODES: usize = 40;
pub const STAR_SIGMA: f64 = 0.2;
pub const STAR_ALPHA: f64 = 1.5;
pub const STAR_BETA: f64 = 1.0;
pub const STAR_RUNS_PER_POINT: usize = 50;
pub const STAR_REPEATS: usize = 10;
/// Events per star run; the flip is read off at the end.
pub const STAR_MAX_STEPS: u64 = 10_000;

pub const MOD_NODES: usize = 100;
pub const MOD_EDGES: usize = 1500;
pub const MOD_SIGMA: f64 = 0.2;
pub const MOD_ALPHA: f64 = 2.0;
pub const MOD_BETA: f64 = 1.0;
pub const MOD_ENSEMBLES: usize = 40;
/// Stationarity window, in events per node.
pub const MOD_WINDOW_PER_NODE: u64 = 1_000;
/// Hard event budget, in events per node.
pub const MOD_BUDGET_PER_NODE: u64 = 20_000;
pub const MOD_STATIONARITY_TOL: f64 = 0.01;
/// rho0 grid 0.01..=0.15 in steps of 0.01.
pub const MOD_RHO0_STEPS: (usize, usize, f64) = (1, 15, 100.0);
/// Omega grid 0.05..=0.95 in steps of 0.05.
pub const MOD_OMEGA_STEPS: (usize, usize, f64) = (1, 19, 20.0);
/// rho0 values of the three cross-sections: below, at and above the local-spread onset.
pub const MOD_CROSS_RHO0: [f64; 3] = [0.03, 0.06, 0.09];

pub const PHASE_GLOBAL_MIN: f64 = 0.9;
pub const PHASE_LOCAL_LOW: f64 = 0.35;
pub const PHASE_LOCAL_HIGH: f64 = 0.65;
pub const PHASE_NONE_MARGIN: f64 = 0.05;

/// `lo/den, ..., hi/den`; dividing keeps grid values identical to their literals.
pub fn grid((lo, hi, den): (usize, usize, f64)) -> Vec<f64> {
    (lo..=hi).map(|i| i as f64 / den).collect()
}
