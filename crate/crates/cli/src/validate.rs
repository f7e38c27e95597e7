//! Invariant suite behind the `validate` command.

use std::collections::HashSet;

use contagion_core::dynamics::step;
use contagion_core::markov::{stationary_residual, StarChain};
use contagion_core::seeding::{derive_seed, rng_from_seed};
use contagion_core::{Assignment, BeliefNetwork, ModelParams, Population, Scenario, SocialGraph};
use rand::Rng;

use crate::config::ValidateConfig;

pub struct CheckOutcome {
    pub name: &'static str,
    pub result: Result<String, String>,
}

type CheckFn<'a> = Box<dyn Fn() -> Result<String, String> + 'a>;

pub fn run_suite(cfg: &ValidateConfig) -> Vec<CheckOutcome> {
    let checks: [(&'static str, CheckFn); 4] = [
        ("star chains are column-stochastic", Box::new(chain_columns)),
        ("stationary vectors are fixed points", Box::new(stationary_vectors)),
        (
            "gradient equals central difference",
            Box::new(|| gradient(cfg.gradient_samples, derive_seed(cfg.seed, 0))),
        ),
        (
            "zealots fixed, beliefs bounded",
            Box::new(|| zealots_and_bounds(cfg.events, derive_seed(cfg.seed, 1))),
        ),
    ];
    checks
        .into_iter()
        .map(|(name, f)| CheckOutcome { name, result: f() })
        .collect()
}

fn chain_columns() -> Result<String, String> {
    let mut sizes = Vec::new();
    for s in Scenario::ALL {
        let chain = StarChain::new(s, 1.5, 1.0).map_err(|e| e.to_string())?;
        if let Some(bad) = chain.matrix.column_sums().iter().find(|r| (r.u, r.v) != (3, 3)) {
            return Err(format!("scenario {s}: a column sums to {bad}"));
        }
        sizes.push(chain.matrix.len().to_string());
    }
    Ok(format!("state counts {}", sizes.join(", ")))
}

fn stationary_vectors() -> Result<String, String> {
    let k = 39;
    let mut worst = 0.0f64;
    for s in Scenario::ALL {
        let chain = StarChain::new(s, 1.5, 1.0).map_err(|e| e.to_string())?;
        for m in 0..=k {
            let (u, v) = StarChain::rates(m, k);
            let pi = chain.stationary(m, k).map_err(|e| e.to_string())?;
            worst = worst
                .max(stationary_residual(&chain.matrix, u, v, &pi))
                .max((pi.iter().sum::<f64>() - 1.0).abs());
        }
    }
    if worst < 1e-10 {
        Ok(format!("worst deviation {worst:.2e}"))
    } else {
        Err(format!("worst deviation {worst:.2e}"))
    }
}

fn gradient(samples: usize, seed: u64) -> Result<String, String> {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let n = rng.random_range(3..=6);
        let w: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.random_range(-0.75..=0.75)).collect();
        let net = BeliefNetwork::new(n, w.clone()).map_err(|e| e.to_string())?;
        for e in 0..w.len() {
            let energy = |shift: f64| {
                let mut v = w.clone();
                v[e] += shift;
                BeliefNetwork::new(n, v).map(|b| b.internal_energy())
            };
            let fd = (energy(0.25).map_err(|e| e.to_string())? - energy(-0.25).map_err(|e| e.to_string())?) / 0.5;
            worst = worst.max((fd - net.energy_gradient(e).map_err(|e| e.to_string())?).abs());
        }
    }
    if worst <= 1e-12 {
        Ok(format!("{samples} networks, worst deviation {worst:.2e}"))
    } else {
        Err(format!("worst deviation {worst:.2e}"))
    }
}

fn random_population(rng: &mut impl Rng) -> Population {
    let n = rng.random_range(2..=40);
    let p = rng.random_range(0.02..0.5);
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|_| rng.random_bool(p))
        .collect();
    let graph = SocialGraph::from_edges(n, edges).expect("simple graph");
    let concepts = rng.random_range(3..=5);
    let assignments: Vec<Assignment> = (0..n)
        .map(|node| {
            let w = (0..concepts * (concepts - 1) / 2).map(|_| rng.random_range(-1.0..=1.0)).collect();
            Assignment::new([node], BeliefNetwork::new(concepts, w).expect("weights in range"), rng.random_bool(0.3))
        })
        .collect();
    Population::seed(graph, &assignments).expect("one assignment per node")
}

fn zealots_and_bounds(events: u64, seed: u64) -> Result<String, String> {
    let mut rng = rng_from_seed(seed);
    let mut done = 0;
    let mut graphs = 0;
    while done < events {
        let mut pop = random_population(&mut rng);
        graphs += 1;
        let params = ModelParams::new(rng.random_range(0.5..4.0), rng.random_range(0.0..3.0), rng.random_range(0.0..1.0))
            .map_err(|e| e.to_string())?;
        let zealots: HashSet<usize> = pop.zealots().collect();
        let frozen: Vec<BeliefNetwork> = zealots.iter().map(|&z| pop.beliefs(z).clone()).collect();
        for _ in 0..20_000.min(events - done) {
            let ev = step(&mut pop, &params, &mut rng);
            done += 1;
            let Some(r) = ev.receiver else { continue };
            if zealots.contains(&r) && ev.delta != 0.0 {
                return Err(format!("zealot {r} changed at event {done}"));
            }
            if pop.beliefs(r).weights().iter().any(|x| !(-1.0..=1.0).contains(x)) {
                return Err(format!("node {r} left [-1, 1] at event {done}"));
            }
        }
        if zealots.iter().zip(&frozen).any(|(&z, b)| pop.beliefs(z) != b) {
            return Err(format!("a zealot drifted on graph {graphs}"));
        }
    }
    Ok(format!("{done} events on {graphs} graphs"))
}
