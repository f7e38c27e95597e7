//! The two reproduction campaigns: hub flip curves on a star and the
//! adoption phase diagram on two-community networks.
//!
//! Every replica draws its randomness from a seed derived from the master seed
//! and the replica's coordinates, so results are identical for any worker count.

use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefNetwork, ModelParams, SignPattern};
use crate::defaults as d;
use crate::dynamics::{run, run_ensemble, SimulationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::markov::StarChain;
use crate::scenario::{
    modularity_population, star_population_on, triad, zealot_count, Scenario, Variant, MODULARITY_ZEALOT,
};
use crate::seeding::{derive_seed, derive_seed_path, rng_from_seed};
use crate::stats::{fmt_sig6, Summary};

/// Runs `f` on a rayon pool with `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::param("workers", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::param("workers", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// How the end state of a stochastic star run is judged as flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlipRule {
    /// Project the hub onto the nearest state of the deterministic chain and
    /// check whether that state is a flip state.
    NearestState,
    /// The hub's sign pattern equals the dissimilar zealots' pattern.
    SignPattern,
}

/// Decides whether a hub belief network counts as flipped.
#[derive(Debug, Clone)]
pub struct FlipDetector {
    rule: FlipRule,
    target: SignPattern,
    lattice: Vec<(Vec<f64>, bool)>,
}

impl FlipDetector {
    pub fn new(rule: FlipRule, chain: &StarChain) -> Self {
        let lattice = chain
            .matrix
            .states
            .iter()
            .map(|s| (s.to_f64(), chain.targets.contains(s)))
            .collect();
        FlipDetector {
            rule,
            target: chain.scenario.target(),
            lattice,
        }
    }

    pub fn is_flipped(&self, hub: &BeliefNetwork) -> bool {
        match self.rule {
            FlipRule::SignPattern => self.target.matches(hub.weights()),
            FlipRule::NearestState => {
                let dist = |state: &[f64]| -> f64 {
                    state.iter().zip(hub.weights()).map(|(a, b)| (a - b) * (a - b)).sum()
                };
                self.lattice
                    .iter()
                    .min_by(|a, b| dist(&a.0).total_cmp(&dist(&b.0)))
                    .is_some_and(|(_, flip)| *flip)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Config {
    pub scenario: Scenario,
    pub variant: Variant,
    pub n: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub runs_per_point: usize,
    pub repeats: usize,
    pub max_steps: u64,
    pub flip_rule: FlipRule,
    pub seed: u64,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Fig2Config {
            scenario: Scenario::Stabilizing,
            variant: Variant::ZealotSimilar,
            n: d::STAR_NODES,
            sigma: d::STAR_SIGMA,
            alpha: d::STAR_ALPHA,
            beta: d::STAR_BETA,
            runs_per_point: d::STAR_RUNS_PER_POINT,
            repeats: d::STAR_REPEATS,
            max_steps: d::STAR_MAX_STEPS,
            flip_rule: FlipRule::NearestState,
            seed: d::MASTER_SEED,
        }
    }
}

impl Fig2Config {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.beta, self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.n < 2 {
            return Err(Error::param("n", format!("a star needs at least 2 nodes, got {}", self.n)));
        }
        for (field, value) in [("runs_per_point", self.runs_per_point), ("repeats", self.repeats)] {
            if value < 1 {
                return Err(Error::param(field, "must be at least 1"));
            }
        }
        if self.max_steps < 1 {
            return Err(Error::param("max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub scenario: Scenario,
    pub variant: Variant,
    pub m: usize,
    pub mean_flip: f64,
    pub std_flip: f64,
    /// Stationary flip probability of the deterministic chain; only for the
    /// all-zealot variant.
    pub analytical: Option<f64>,
}

/// Flip proportion over `runs_per_point` runs, repeated `repeats` times, for
/// every number of dissimilar leaves `m = 0..=n-1`.
pub fn flip_curve(cfg: &Fig2Config) -> Result<Vec<Fig2Row>> {
    cfg.validate()?;
    let params = cfg.params()?;
    let k = cfg.n - 1;
    let chain = StarChain::new(cfg.scenario, cfg.alpha, cfg.beta)?;
    let detector = FlipDetector::new(cfg.flip_rule, &chain);
    let graph = Arc::new(SocialGraph::star(cfg.n)?);
    let variant_index = match cfg.variant {
        Variant::ZealotSimilar => 0,
        Variant::FreeSimilar => 1,
    };
    let metric = |t: &Trajectory| f64::from(u8::from(detector.is_flipped(t.final_state.beliefs(0))));

    (0..=k)
        .into_par_iter()
        .map(|m| {
            let pop = star_population_on(graph.clone(), cfg.scenario, cfg.variant, m)?;
            let proportions = (0..cfg.repeats as u64)
                .into_par_iter()
                .map(|repeat| {
                    let seed = derive_seed_path(
                        cfg.seed,
                        &[u64::from(cfg.scenario.number()), variant_index, m as u64, repeat],
                    );
                    let sim = SimulationConfig::fixed_length(params, cfg.max_steps, seed, cfg.scenario.target());
                    run_ensemble(&pop, &sim, cfg.runs_per_point, metric).map(|e| e.summary.mean)
                })
                .collect::<Result<Vec<f64>>>()?;
            let summary = Summary::of(&proportions);
            let analytical = match cfg.variant {
                Variant::ZealotSimilar => Some(chain.flip_probability(m, k)?),
                Variant::FreeSimilar => None,
            };
            Ok(Fig2Row {
                scenario: cfg.scenario,
                variant: cfg.variant,
                m,
                mean_flip: summary.mean,
                std_flip: summary.std_dev,
                analytical,
            })
        })
        .collect()
}

pub const FIG2_HEADER: &str = "scenario,variant,m,mean_flip,std_flip,analytical";

/// Writes `fig2.csv` rows; the analytical field is empty when absent.
pub fn write_fig2_csv<W: Write>(mut out: W, rows: &[Fig2Row]) -> io::Result<()> {
    writeln!(out, "{FIG2_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scenario,
            r.variant,
            r.m,
            fmt_sig6(r.mean_flip),
            fmt_sig6(r.std_flip),
            r.analytical.map(fmt_sig6).unwrap_or_default()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    None,
    Local,
    Global,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::None => "none",
            Phase::Local => "local",
            Phase::Global => "global",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseThresholds {
    pub global_min: f64,
    pub local_low: f64,
    pub local_high: f64,
    /// No diffusion when the final adoption is at most `rho0 + none_margin`.
    pub none_margin: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        PhaseThresholds {
            global_min: d::PHASE_GLOBAL_MIN,
            local_low: d::PHASE_LOCAL_LOW,
            local_high: d::PHASE_LOCAL_HIGH,
            none_margin: d::PHASE_NONE_MARGIN,
        }
    }
}

/// Labels a stationary adoption level. Global and no-diffusion checks come
/// first, then the local band; values between bands go to the nearest band
/// edge, ties to the lower phase.
pub fn classify_phase(rho0: f64, rho_inf: f64, th: &PhaseThresholds) -> Phase {
    let none_max = rho0 + th.none_margin;
    if rho_inf >= th.global_min {
        Phase::Global
    } else if rho_inf <= none_max {
        Phase::None
    } else if rho_inf >= th.local_low && rho_inf <= th.local_high {
        Phase::Local
    } else if rho_inf < th.local_low {
        if th.local_low - rho_inf < rho_inf - none_max {
            Phase::Local
        } else {
            Phase::None
        }
    } else if th.global_min - rho_inf < rho_inf - th.local_high {
        Phase::Global
    } else {
        Phase::Local
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Config {
    pub n: usize,
    pub m_edges: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub ensembles: usize,
    pub rho0_grid: Vec<f64>,
    pub omega_grid: Vec<f64>,
    pub cross_rho0: Vec<f64>,
    pub window_per_node: u64,
    pub budget_per_node: u64,
    pub stationarity_tol: f64,
    pub thresholds: PhaseThresholds,
    pub seed: u64,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Fig4Config {
            n: d::MOD_NODES,
            m_edges: d::MOD_EDGES,
            sigma: d::MOD_SIGMA,
            alpha: d::MOD_ALPHA,
            beta: d::MOD_BETA,
            ensembles: d::MOD_ENSEMBLES,
            rho0_grid: d::grid(d::MOD_RHO0_STEPS),
            omega_grid: d::grid(d::MOD_OMEGA_STEPS),
            cross_rho0: d::MOD_CROSS_RHO0.to_vec(),
            window_per_node: d::MOD_WINDOW_PER_NODE,
            budget_per_node: d::MOD_BUDGET_PER_NODE,
            stationarity_tol: d::MOD_STATIONARITY_TOL,
            thresholds: PhaseThresholds::default(),
            seed: d::MASTER_SEED,
        }
    }
}

impl Fig4Config {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.beta, self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.n < 2 {
            return Err(Error::param("n", "need at least 2 nodes"));
        }
        if self.ensembles < 1 {
            return Err(Error::param("ensembles", "must be at least 1"));
        }
        if self.window_per_node < 1 {
            return Err(Error::param("window_per_node", "must be at least 1"));
        }
        if self.budget_per_node < self.window_per_node {
            return Err(Error::param("budget_per_node", "must be at least window_per_node"));
        }
        if self.stationarity_tol.is_nan() || self.stationarity_tol < 0.0 {
            return Err(Error::param("stationarity_tol", "must be non-negative"));
        }
        let community = self.n.div_ceil(2);
        for (field, values) in [("rho0_grid", &self.rho0_grid), ("cross_rho0", &self.cross_rho0)] {
            for &rho0 in values {
                if !(0.0..=1.0).contains(&rho0) || zealot_count(self.n, rho0) > community {
                    return Err(Error::param(
                        field,
                        format!("rho0 = {rho0} does not fit in a community of {community} nodes"),
                    ));
                }
            }
        }
        if let Some(&omega) = self.omega_grid.iter().find(|o| !(0.0..=1.0).contains(*o)) {
            return Err(Error::param("omega_grid", format!("omega = {omega} is outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub rho0: f64,
    pub omega: f64,
    pub rho_infinity_mean: f64,
    pub rho_infinity_stderr: f64,
    pub phase: Phase,
}

/// Stationary adoption of one two-community replica.
pub fn modularity_replica(cfg: &Fig4Config, rho0: f64, omega: f64, ensemble: u64) -> Result<Trajectory> {
    let point_seed = derive_seed_path(cfg.seed, &[rho0.to_bits(), omega.to_bits(), ensemble]);
    let mut rng = rng_from_seed(derive_seed(point_seed, 0));
    let (graph, layout) = SocialGraph::two_community(cfg.n, cfg.m_edges, omega, &mut rng)?;
    let pop = modularity_population(Arc::new(graph), &layout, rho0, &mut rng)?;
    let n = cfg.n as u64;
    let sim = SimulationConfig {
        params: cfg.params()?,
        max_steps: cfg.budget_per_node * n,
        stationarity_window: cfg.window_per_node * n,
        stationarity_tol: cfg.stationarity_tol,
        seed: derive_seed(point_seed, 1),
        snapshot_every: 0,
        record_beliefs: false,
        target: triad(MODULARITY_ZEALOT).sign_pattern(),
    };
    run(&pop, &sim)
}

/// Mean and standard error of the stationary adoption over `ensembles`
/// independent graphs for every `(rho0, omega)` pair, rho0-major.
pub fn sweep_points(cfg: &Fig4Config, rho0s: &[f64], omegas: &[f64]) -> Result<Vec<PhasePoint>> {
    cfg.validate()?;
    let tasks: Vec<(f64, f64)> = rho0s
        .iter()
        .flat_map(|&r| omegas.iter().map(move |&o| (r, o)))
        .collect();
    tasks
        .into_par_iter()
        .map(|(rho0, omega)| {
            let values = (0..cfg.ensembles as u64)
                .into_par_iter()
                .map(|e| modularity_replica(cfg, rho0, omega, e).map(|t| t.final_window_adoption))
                .collect::<Result<Vec<f64>>>()?;
            let s = Summary::of(&values);
            Ok(PhasePoint {
                rho0,
                omega,
                rho_infinity_mean: s.mean,
                rho_infinity_stderr: s.std_err,
                phase: classify_phase(rho0, s.mean, &cfg.thresholds),
            })
        })
        .collect()
}

/// The full `rho0_grid x omega_grid` phase diagram.
pub fn modularity_sweep(cfg: &Fig4Config) -> Result<Vec<PhasePoint>> {
    sweep_points(cfg, &cfg.rho0_grid, &cfg.omega_grid)
}

/// Cross-sections at `cross_rho0` over `omega_grid`, reusing grid points when
/// the same rho0 was already swept (results are seeded by coordinates, so
/// recomputing would give the same numbers).
pub fn cross_sections(cfg: &Fig4Config, grid: &[PhasePoint]) -> Result<Vec<PhasePoint>> {
    let same = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let missing: Vec<f64> = cfg
        .cross_rho0
        .iter()
        .copied()
        .filter(|&r| !grid.iter().any(|p| same(p.rho0, r)))
        .collect();
    let extra = sweep_points(cfg, &missing, &cfg.omega_grid)?;
    let mut out = Vec::new();
    for &r in &cfg.cross_rho0 {
        for &o in &cfg.omega_grid {
            let point = grid
                .iter()
                .chain(&extra)
                .find(|p| same(p.rho0, r) && same(p.omega, o))
                .expect("every cross-section point was swept");
            out.push(point.clone());
        }
    }
    Ok(out)
}

pub const FIG4_HEADER: &str = "rho0,omega,rho_inf_mean,rho_inf_stderr,phase";

/// Writes `fig4_phase.csv` or `fig4_cross.csv` rows.
pub fn write_fig4_csv<W: Write>(mut out: W, points: &[PhasePoint]) -> io::Result<()> {
    writeln!(out, "{FIG4_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sig6(p.rho0),
            fmt_sig6(p.omega),
            fmt_sig6(p.rho_infinity_mean),
            fmt_sig6(p.rho_infinity_stderr),
            p.phase.as_str()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_labels() {
        let th = PhaseThresholds::default();
        assert_eq!(classify_phase(0.03, 0.03, &th), Phase::None);
        assert_eq!(classify_phase(0.03, 0.5, &th), Phase::Local);
        assert_eq!(classify_phase(0.03, 0.98, &th), Phase::Global);
        // between the bands: nearest edge
        assert_eq!(classify_phase(0.03, 0.12, &th), Phase::None);
        assert_eq!(classify_phase(0.03, 0.30, &th), Phase::Local);
        assert_eq!(classify_phase(0.03, 0.70, &th), Phase::Local);
        assert_eq!(classify_phase(0.03, 0.85, &th), Phase::Global);
        // exact tie between 0.65 and 0.9 goes to the lower phase
        assert_eq!(classify_phase(0.03, 0.775, &th), Phase::Local);
    }

    #[test]
    fn custom_thresholds() {
        let th = PhaseThresholds {
            global_min: 0.8,
            ..PhaseThresholds::default()
        };
        assert_eq!(classify_phase(0.03, 0.85, &th), Phase::Global);
    }

    #[test]
    fn nearest_state_and_sign_rules_differ_at_the_zero_state() {
        let chain = StarChain::new(Scenario::Stabilizing, 1.5, 1.0).unwrap();
        let nearest = FlipDetector::new(FlipRule::NearestState, &chain);
        let sign = FlipDetector::new(FlipRule::SignPattern, &chain);
        let near_zero = BeliefNetwork::triad(0.1, 1.0, 1.0).unwrap();
        assert!(sign.is_flipped(&near_zero));
        assert!(!nearest.is_flipped(&near_zero));
        let half = BeliefNetwork::triad(0.45, 0.9, 1.0).unwrap();
        assert!(sign.is_flipped(&half) && nearest.is_flipped(&half));
        let start = BeliefNetwork::triad(-0.9, 1.0, 1.0).unwrap();
        assert!(!sign.is_flipped(&start) && !nearest.is_flipped(&start));
    }

    #[test]
    fn small_flip_curve_is_reproducible_and_bounded() {
        let cfg = Fig2Config {
            n: 6,
            runs_per_point: 8,
            repeats: 3,
            max_steps: 400,
            ..Fig2Config::default()
        };
        let a = flip_curve(&cfg).unwrap();
        let b = with_workers(Some(2), || flip_curve(&cfg)).unwrap().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert_eq!(a[0].analytical, Some(0.0));
        assert!(a.iter().all(|r| (0.0..=1.0).contains(&r.mean_flip) && r.std_flip >= 0.0));
        let mut out = Vec::new();
        write_fig2_csv(&mut out, &a).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("scenario,variant,m,mean_flip,std_flip,analytical\n1,zealot-similar,0,"));
    }

    #[test]
    fn free_variant_has_no_analytical_column() {
        let cfg = Fig2Config {
            n: 4,
            runs_per_point: 2,
            repeats: 2,
            max_steps: 50,
            variant: Variant::FreeSimilar,
            ..Fig2Config::default()
        };
        let rows = flip_curve(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.analytical.is_none()));
        let mut out = Vec::new();
        write_fig2_csv(&mut out, &rows).unwrap();
        assert!(String::from_utf8(out).unwrap().lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = Fig2Config {
            alpha: -1.0,
            ..Fig2Config::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("alpha"));
        let bad = Fig4Config {
            rho0_grid: vec![0.9],
            ..Fig4Config::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("rho0_grid"));
        let bad = Fig4Config {
            omega_grid: vec![1.5],
            ..Fig4Config::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("omega_grid"));
    }

    #[test]
    fn tiny_sweep_with_cross_sections() {
        let cfg = Fig4Config {
            n: 20,
            m_edges: 60,
            ensembles: 2,
            rho0_grid: vec![0.1],
            omega_grid: vec![0.1, 0.5],
            cross_rho0: vec![0.1, 0.2],
            window_per_node: 20,
            budget_per_node: 200,
            ..Fig4Config::default()
        };
        let grid = modularity_sweep(&cfg).unwrap();
        assert_eq!(grid.len(), 2);
        let cross = cross_sections(&cfg, &grid).unwrap();
        assert_eq!(cross.len(), 4);
        assert_eq!(cross[0], grid[0]);
        assert_eq!(cross[2], sweep_points(&cfg, &[0.2], &[0.1]).unwrap()[0]);
        for p in grid.iter().chain(&cross) {
            assert!((0.0..=1.0).contains(&p.rho_infinity_mean));
            assert!(p.rho_infinity_stderr >= 0.0);
        }
        let mut out = Vec::new();
        write_fig4_csv(&mut out, &grid).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("rho0,omega,rho_inf_mean,rho_inf_stderr,phase\n0.1,0.1,"));
    }
}
