//! Asynchronous interaction dynamics.
//!
//! Each time step picks a sender uniformly among all nodes, one of the sender's
//! beliefs uniformly, and a receiver uniformly among the sender's neighbors.
//! The receiver moves the matching belief by the model increment, then clips.
//! Zealots send but never receive. A sender without neighbors wastes the step.

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefNetwork, ModelParams, SignPattern};
use crate::error::{Error, Result};
use crate::population::Population;
use crate::seeding::{derive_seed, rng_from_seed};
use crate::stats::{fmt_sig6, Summary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub params: ModelParams,
    /// Interaction-event budget.
    pub max_steps: u64,
    /// Events between two stationarity checks.
    pub stationarity_window: u64,
    /// Largest change in adoption fraction between two checks that counts as stationary.
    pub stationarity_tol: f64,
    pub seed: u64,
    /// Snapshot cadence in events; 0 records only the final state.
    pub snapshot_every: u64,
    /// Store every agent's beliefs in each snapshot.
    pub record_beliefs: bool,
    /// Sign pattern that counts as adoption.
    pub target: SignPattern,
}

impl SimulationConfig {
    /// A run that always spends its whole budget.
    pub fn fixed_length(params: ModelParams, max_steps: u64, seed: u64, target: SignPattern) -> Self {
        SimulationConfig {
            params,
            max_steps,
            stationarity_window: max_steps.max(1),
            stationarity_tol: 0.0,
            seed,
            snapshot_every: 0,
            record_beliefs: false,
            target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.max_steps < 1 {
            return Err(Error::param("max_steps", "must be at least 1"));
        }
        if self.stationarity_window < 1 {
            return Err(Error::param("stationarity_window", "must be at least 1"));
        }
        if self.stationarity_tol.is_nan() || self.stationarity_tol < 0.0 {
            return Err(Error::param("stationarity_tol", "must be non-negative"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimulationConfig {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Budget,
    Stationarity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub adoption: f64,
    pub beliefs: Option<Vec<BeliefNetwork>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub final_state: Population,
    pub terminated_by: Termination,
    /// Events executed.
    pub steps: u64,
    /// Adoption fraction averaged over the last `stationarity_window` events
    /// (or all events if fewer ran).
    pub final_window_adoption: f64,
}

impl Trajectory {
    /// A trajectory in which no event happened.
    pub fn empty(pop: Population) -> Self {
        Trajectory {
            snapshots: Vec::new(),
            final_state: pop,
            terminated_by: Termination::Budget,
            steps: 0,
            final_window_adoption: f64::NAN,
        }
    }

    /// CSV rows `step,adoption_fraction`, plus `hub_b<i>` columns with the
    /// beliefs of node `hub` when requested. Requires snapshots with beliefs
    /// in that case.
    pub fn write_csv<W: Write>(&self, mut out: W, hub: Option<usize>) -> io::Result<()> {
        let edges = self.final_state.beliefs(0).edge_count();
        write!(out, "step,adoption_fraction")?;
        if hub.is_some() {
            for e in 0..edges {
                write!(out, ",hub_b{e}")?;
            }
        }
        writeln!(out)?;
        for snap in &self.snapshots {
            write!(out, "{},{}", snap.step, fmt_sig6(snap.adoption))?;
            if let Some(h) = hub {
                let beliefs = snap.beliefs.as_ref().ok_or_else(|| {
                    io::Error::new(io::ErrorKind::InvalidInput, "snapshot has no recorded beliefs")
                })?;
                for w in beliefs[h].weights() {
                    write!(out, ",{}", fmt_sig6(*w))?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// What happened in one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionEvent {
    pub sender: usize,
    /// `None` when the sender had no neighbors.
    pub receiver: Option<usize>,
    pub edge: Option<usize>,
    /// Change actually applied to the receiver's belief (after clipping).
    pub delta: f64,
}

/// Executes one interaction event in place.
pub fn step<R: Rng + ?Sized>(pop: &mut Population, params: &ModelParams, rng: &mut R) -> InteractionEvent {
    let n = pop.node_count();
    let sender = rng.random_range(0..n);
    let neighbors = pop.graph().neighbors(sender);
    if neighbors.is_empty() {
        return InteractionEvent {
            sender,
            receiver: None,
            edge: None,
            delta: 0.0,
        };
    }
    let edge = rng.random_range(0..pop.beliefs[sender].edge_count());
    let receiver = neighbors[rng.random_range(0..neighbors.len())];
    if pop.is_zealot(receiver) {
        return InteractionEvent {
            sender,
            receiver: Some(receiver),
            edge: Some(edge),
            delta: 0.0,
        };
    }
    let sent = pop.beliefs[sender].weights()[edge];
    let target = &mut pop.beliefs[receiver];
    let before = target.weights()[edge];
    let delta = target
        .increment(sent, edge, params, rng)
        .expect("all agents share one edge set");
    target.apply_update(edge, delta).expect("edge in range");
    InteractionEvent {
        sender,
        receiver: Some(receiver),
        edge: Some(edge),
        delta: target.weights()[edge] - before,
    }
}

/// Fraction of nodes, zealots included, whose sign pattern equals `target`.
pub fn adoption_fraction(pop: &Population, target: &SignPattern) -> f64 {
    let adopted = pop
        .all_beliefs()
        .iter()
        .filter(|b| target.matches(b.weights()))
        .count();
    adopted as f64 / pop.node_count() as f64
}

/// Runs the dynamics until the budget is spent or the adoption fraction moves by
/// at most `stationarity_tol` between two consecutive window boundaries.
pub fn run(pop: &Population, cfg: &SimulationConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.target.len() != pop.beliefs(0).edge_count() {
        return Err(Error::param("target", "needs one sign per belief edge"));
    }
    let mut pop = pop.clone();
    let mut rng = rng_from_seed(cfg.seed);
    let n = pop.node_count();
    let mut adopted: Vec<bool> = pop
        .all_beliefs()
        .iter()
        .map(|b| cfg.target.matches(b.weights()))
        .collect();
    let mut adopted_count = adopted.iter().filter(|&&a| a).count();
    let fraction = |count: usize| count as f64 / n as f64;

    let window_len = cfg.stationarity_window.min(cfg.max_steps) as usize;
    let mut recent: VecDeque<usize> = VecDeque::with_capacity(window_len.min(1 << 20));
    let mut recent_sum = 0usize;

    let mut snapshots = Vec::new();
    let mut last_check = fraction(adopted_count);
    let mut terminated_by = Termination::Budget;
    let mut steps = 0u64;

    while steps < cfg.max_steps {
        let event = step(&mut pop, &cfg.params, &mut rng);
        steps += 1;
        if let Some(r) = event.receiver {
            let now = cfg.target.matches(pop.beliefs(r).weights());
            if now != adopted[r] {
                adopted[r] = now;
                if now {
                    adopted_count += 1;
                } else {
                    adopted_count -= 1;
                }
            }
        }

        if recent.len() == window_len {
            recent_sum -= recent.pop_front().unwrap_or(0);
        }
        recent.push_back(adopted_count);
        recent_sum += adopted_count;

        if cfg.snapshot_every > 0 && steps.is_multiple_of(cfg.snapshot_every) {
            snapshots.push(snapshot(&pop, steps, fraction(adopted_count), cfg.record_beliefs));
        }
        if steps.is_multiple_of(cfg.stationarity_window) && steps < cfg.max_steps {
            let now = fraction(adopted_count);
            if (now - last_check).abs() <= cfg.stationarity_tol {
                terminated_by = Termination::Stationarity;
                break;
            }
            last_check = now;
        }
    }

    if snapshots.last().map(|s| s.step) != Some(steps) {
        snapshots.push(snapshot(&pop, steps, fraction(adopted_count), cfg.record_beliefs));
    }
    let final_window_adoption = recent_sum as f64 / (recent.len() as f64 * n as f64);
    Ok(Trajectory {
        snapshots,
        final_state: pop,
        terminated_by,
        steps,
        final_window_adoption,
    })
}

fn snapshot(pop: &Population, step: u64, adoption: f64, with_beliefs: bool) -> Snapshot {
    Snapshot {
        step,
        adoption,
        beliefs: with_beliefs.then(|| pop.all_beliefs().to_vec()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutcome {
    pub outcomes: Vec<f64>,
    pub summary: Summary,
}

/// Runs `runs` replicas, replica `i` seeded with `derive_seed(cfg.seed, i)`,
/// and reduces each trajectory with `metric`. Replicas run on the current
/// rayon pool; results do not depend on scheduling.
pub fn run_ensemble<F>(template: &Population, cfg: &SimulationConfig, runs: usize, metric: F) -> Result<EnsembleOutcome>
where
    F: Fn(&Trajectory) -> f64 + Sync,
{
    if runs < 1 {
        return Err(Error::param("runs", "must be at least 1"));
    }
    let outcomes = (0..runs as u64)
        .into_par_iter()
        .map(|i| run(template, &cfg.with_seed(derive_seed(cfg.seed, i))).map(|t| metric(&t)))
        .collect::<Result<Vec<f64>>>()?;
    let summary = Summary::of(&outcomes);
    Ok(EnsembleOutcome { outcomes, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SocialGraph;
    use crate::population::Assignment;
    use crate::scenario::{star_population, Scenario, Variant};
    use crate::seeding::rng_from_seed;

    fn b(x: f64, y: f64, z: f64) -> BeliefNetwork {
        BeliefNetwork::triad(x, y, z).unwrap()
    }

    fn det() -> ModelParams {
        ModelParams::deterministic(1.5, 1.0).unwrap()
    }

    #[test]
    fn leaf_sender_always_reaches_hub() {
        let mut pop = star_population(Scenario::Stabilizing, Variant::ZealotSimilar, 6, 2).unwrap();
        let mut rng = rng_from_seed(3);
        let mut seen_leaf = 0;
        for _ in 0..500 {
            let ev = step(&mut pop, &det(), &mut rng);
            if ev.sender != 0 {
                seen_leaf += 1;
                assert_eq!(ev.receiver, Some(0));
            } else {
                // hub talks to zealot leaves only
                assert_eq!(ev.delta, 0.0);
            }
        }
        assert!(seen_leaf > 0);
    }

    #[test]
    fn zealot_receiver_is_untouched() {
        let g = SocialGraph::from_edges(2, [(0, 1)]).unwrap();
        let mut pop = Population::seed(
            g,
            &[
                Assignment::new([0], b(1.0, 1.0, 1.0), true),
                Assignment::new([1], b(-1.0, -1.0, -1.0), true),
            ],
        )
        .unwrap();
        let before = pop.clone();
        let mut rng = rng_from_seed(0);
        for _ in 0..100 {
            let ev = step(&mut pop, &ModelParams::new(1.5, 1.0, 0.2).unwrap(), &mut rng);
            assert_eq!(ev.delta, 0.0);
        }
        assert_eq!(pop, before);
    }

    #[test]
    fn hub_flips_on_dissimilar_message() {
        // two-node star: the single leaf is a {1,1,1} zealot
        let g = SocialGraph::star(2).unwrap();
        let mut pop = Population::seed(
            g,
            &[
                Assignment::new([0], b(-1.0, 1.0, 1.0), false),
                Assignment::new([1], b(1.0, 1.0, 1.0), true),
            ],
        )
        .unwrap();
        let mut rng = rng_from_seed(9);
        loop {
            let ev = step(&mut pop, &det(), &mut rng);
            if ev.receiver == Some(0) && ev.edge == Some(0) {
                break;
            }
        }
        assert_eq!(pop.beliefs(0).weights(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn isolated_sender_is_a_no_op() {
        let g = SocialGraph::from_edges(3, [(0, 1)]).unwrap();
        let mut pop = Population::uniform(g, b(0.5, 0.5, 0.5));
        let mut rng = rng_from_seed(1);
        let mut saw = false;
        for _ in 0..200 {
            let ev = step(&mut pop, &det(), &mut rng);
            if ev.sender == 2 {
                saw = true;
                assert_eq!(ev.receiver, None);
            }
        }
        assert!(saw);
    }

    #[test]
    fn all_zealots_stop_after_one_window() {
        let pop = star_population(Scenario::Stabilizing, Variant::ZealotSimilar, 10, 3).unwrap();
        // hub is not a zealot here, so build an all-zealot population instead
        let all = Population::seed(
            pop.graph().clone(),
            &[Assignment::new(0..10, b(1.0, 1.0, 1.0), true)],
        )
        .unwrap();
        let cfg = SimulationConfig {
            params: det(),
            max_steps: 10_000,
            stationarity_window: 100,
            stationarity_tol: 0.0,
            seed: 0,
            snapshot_every: 0,
            record_beliefs: false,
            target: Scenario::Stabilizing.target(),
        };
        let t = run(&all, &cfg).unwrap();
        assert_eq!(t.terminated_by, Termination::Stationarity);
        assert_eq!(t.steps, 100);
        assert_eq!(t.final_window_adoption, 1.0);
    }

    #[test]
    fn no_dissimilar_leaves_keeps_hub_fixed() {
        let pop = star_population(Scenario::Stabilizing, Variant::ZealotSimilar, 40, 0).unwrap();
        let cfg = SimulationConfig::fixed_length(det(), 5_000, 4, Scenario::Stabilizing.target());
        let t = run(&pop, &cfg).unwrap();
        assert_eq!(t.final_state.beliefs(0).weights(), &[-1.0, 1.0, 1.0]);
        assert_eq!(t.terminated_by, Termination::Budget);
    }

    #[test]
    fn all_dissimilar_leaves_absorb_hub() {
        let pop = star_population(Scenario::Stabilizing, Variant::ZealotSimilar, 40, 39).unwrap();
        let mut cfg = SimulationConfig::fixed_length(det(), 2_000, 4, Scenario::Stabilizing.target());
        cfg.snapshot_every = 1;
        cfg.record_beliefs = true;
        let t = run(&pop, &cfg).unwrap();
        let first_flip = t
            .snapshots
            .iter()
            .position(|s| s.beliefs.as_ref().unwrap()[0].weights() == [1.0, 1.0, 1.0])
            .expect("hub flips");
        assert!(t.snapshots[first_flip..]
            .iter()
            .all(|s| s.beliefs.as_ref().unwrap()[0].weights() == [1.0, 1.0, 1.0]));
    }

    #[test]
    fn snapshots_are_ordered_and_reproducible() {
        let pop = star_population(Scenario::Destabilizing, Variant::FreeSimilar, 12, 4).unwrap();
        let mut cfg = SimulationConfig::fixed_length(
            ModelParams::new(1.5, 1.0, 0.2).unwrap(),
            1_003,
            77,
            Scenario::Destabilizing.target(),
        );
        cfg.snapshot_every = 10;
        let a = run(&pop, &cfg).unwrap();
        let b = run(&pop, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.snapshots.windows(2).all(|w| w[0].step < w[1].step));
        assert_eq!(a.snapshots.len(), 101);
        assert_eq!(a.snapshots.last().unwrap().step, 1_003);
        assert!(a.snapshots.iter().all(|s| (0.0..=1.0).contains(&s.adoption)));
    }

    #[test]
    fn ensemble_of_one_has_zero_dispersion() {
        let pop = star_population(Scenario::Stabilizing, Variant::ZealotSimilar, 10, 5).unwrap();
        let cfg = SimulationConfig::fixed_length(det(), 500, 1, Scenario::Stabilizing.target());
        let out = run_ensemble(&pop, &cfg, 1, |t| t.final_window_adoption).unwrap();
        assert_eq!(out.summary.mean, out.outcomes[0]);
        assert_eq!(out.summary.std_dev, 0.0);
        assert!(run_ensemble(&pop, &cfg, 0, |_| 0.0).is_err());
    }

    #[test]
    fn adoption_counts_zealots_and_fractional_beliefs() {
        let g = SocialGraph::star(4).unwrap();
        let pop = Population::seed(
            g,
            &[
                Assignment::new([0], b(0.5, 1.0, 1.0), false),
                Assignment::new([1], b(1.0, 1.0, 1.0), true),
                Assignment::new([2, 3], b(-1.0, 1.0, 1.0), false),
            ],
        )
        .unwrap();
        assert_eq!(adoption_fraction(&pop, &Scenario::Stabilizing.target()), 0.5);
    }

    #[test]
    fn trajectory_csv() {
        let pop = star_population(Scenario::Stabilizing, Variant::ZealotSimilar, 5, 2).unwrap();
        let mut cfg = SimulationConfig::fixed_length(det(), 4, 1, Scenario::Stabilizing.target());
        cfg.snapshot_every = 2;
        cfg.record_beliefs = true;
        let t = run(&pop, &cfg).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out, Some(0)).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "step,adoption_fraction,hub_b0,hub_b1,hub_b2");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("2,"));

        cfg.record_beliefs = false;
        let t = run(&pop, &cfg).unwrap();
        assert!(t.write_csv(Vec::new(), Some(0)).is_err());
        let mut out = Vec::new();
        Trajectory::empty(pop).write_csv(&mut out, None).unwrap();
        assert_eq!(out, b"step,adoption_fraction\n");
    }
}
