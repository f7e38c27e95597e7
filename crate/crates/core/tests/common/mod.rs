#![allow(dead_code)]

use std::collections::HashSet;

use contagion_core::dynamics::step;
use contagion_core::markov::{ExactBeliefState, StarChain};
use contagion_core::seeding::rng_from_seed;
use contagion_core::{Assignment, BeliefNetwork, ModelParams, Population, Rate, Scenario, SocialGraph};
use rand::Rng;

/// Outcome of one check: `Ok(detail)` or `Err(reason)`.
pub type Check = Result<String, String>;

/// Hand-written 5-state matrix of the stabilizing star at alpha = 1.5,
/// beta = 1. Rows are destinations, columns are sources.
pub const STABILIZING_STATES: [&str; 5] = ["{-1,1,1}", "{1,1,1}", "{0.5,1,1}", "{0,1,1}", "{-0.5,1,1}"];
pub const STABILIZING_MATRIX: [[(u32, u32); 5]; 5] = [
    [(2, 3), (0, 0), (0, 0), (0, 0), (0, 1)],
    [(1, 0), (3, 2), (1, 0), (1, 0), (1, 0)],
    [(0, 0), (0, 1), (2, 2), (0, 0), (0, 0)],
    [(0, 0), (0, 0), (0, 1), (2, 2), (0, 0)],
    [(0, 0), (0, 0), (0, 0), (0, 1), (2, 2)],
];

pub fn check_stabilizing_matrix() -> Check {
    let chain = StarChain::new(Scenario::Stabilizing, 1.5, 1.0).map_err(|e| e.to_string())?;
    let m = &chain.matrix;
    if m.len() != STABILIZING_STATES.len() {
        return Err(format!("{} states instead of 5", m.len()));
    }
    let states: Vec<ExactBeliefState> = STABILIZING_STATES.iter().map(|s| s.parse().unwrap()).collect();
    let mut mismatches = Vec::new();
    for (i, dest) in states.iter().enumerate() {
        for (j, src) in states.iter().enumerate() {
            let (u, v) = STABILIZING_MATRIX[i][j];
            match m.entry(dest, src) {
                Some(r) if r == Rate::new(u, v) => {}
                other => mismatches.push(format!("{dest}<-{src}: {other:?}")),
            }
        }
    }
    if mismatches.is_empty() {
        Ok("25/25 coefficients equal".into())
    } else {
        Err(mismatches.join("; "))
    }
}

/// Largest |central difference - gradient| over `samples` random networks.
/// The energy is linear in each single weight, so a central difference with a
/// coarse step is exact up to rounding.
pub fn gradient_oracle_error(samples: usize, seed: u64) -> f64 {
    const H: f64 = 0.25;
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let n = rng.random_range(3..=6);
        let edges = n * (n - 1) / 2;
        let weights: Vec<f64> = (0..edges).map(|_| rng.random_range(-0.75..=0.75)).collect();
        let net = BeliefNetwork::new(n, weights.clone()).unwrap();
        for e in 0..edges {
            let shifted = |d: f64| {
                let mut w = weights.clone();
                w[e] += d;
                BeliefNetwork::new(n, w).unwrap().internal_energy()
            };
            let fd = (shifted(H) - shifted(-H)) / (2.0 * H);
            worst = worst.max((fd - net.energy_gradient(e).unwrap()).abs());
        }
    }
    worst
}

fn random_graph(rng: &mut impl Rng) -> SocialGraph {
    let n = rng.random_range(2..=40);
    let p: f64 = rng.random_range(0.02..0.5);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    SocialGraph::from_edges(n, edges).unwrap()
}

fn random_population(rng: &mut impl Rng) -> Population {
    let graph = random_graph(rng);
    let concepts = rng.random_range(3..=5);
    let edges = concepts * (concepts - 1) / 2;
    let assignments: Vec<Assignment> = (0..graph.node_count())
        .map(|node| {
            let w = (0..edges).map(|_| rng.random_range(-1.0..=1.0)).collect();
            Assignment::new([node], BeliefNetwork::new(concepts, w).unwrap(), rng.random_bool(0.3))
        })
        .collect();
    Population::seed(graph, &assignments).unwrap()
}

/// Runs `events` interaction events over a series of random graphs and
/// populations with large, noisy updates, asserting after every event that
/// zealots are untouched and every weight stays in [-1, 1].
pub fn check_zealots_and_bounds(events: u64, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let per_graph = 20_000;
    let mut done = 0u64;
    let mut graphs = 0;
    let mut clipped = 0u64;
    while done < events {
        let mut pop = random_population(&mut rng);
        graphs += 1;
        let params = ModelParams::new(rng.random_range(0.5..4.0), rng.random_range(0.0..3.0), rng.random_range(0.0..1.0))
            .unwrap();
        let zealots: HashSet<usize> = pop.zealots().collect();
        let frozen: Vec<(usize, BeliefNetwork)> = zealots.iter().map(|&z| (z, pop.beliefs(z).clone())).collect();
        for _ in 0..per_graph.min(events - done) {
            let ev = step(&mut pop, &params, &mut rng);
            done += 1;
            if let Some(r) = ev.receiver {
                if zealots.contains(&r) && ev.delta != 0.0 {
                    return Err(format!("zealot {r} changed by {} at event {done}", ev.delta));
                }
                let w = pop.beliefs(r).weights();
                if w.iter().any(|x| !(-1.0..=1.0).contains(x)) {
                    return Err(format!("node {r} left [-1, 1]: {w:?} at event {done}"));
                }
                if w.iter().any(|x| x.abs() == 1.0) {
                    clipped += 1;
                }
            }
        }
        for (z, before) in &frozen {
            if pop.beliefs(*z) != before {
                return Err(format!("zealot {z} drifted on graph {graphs}"));
            }
        }
    }
    Ok(format!("{done} events on {graphs} graphs, {clipped} receivers at a bound"))
}
