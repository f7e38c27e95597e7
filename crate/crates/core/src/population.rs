use std::sync::Arc;

use crate::belief::BeliefNetwork;
use crate::error::{Error, Result};
use crate::graph::SocialGraph;

/// Agents on a social graph. Zealots send beliefs but never update.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    graph: Arc<SocialGraph>,
    pub(crate) beliefs: Vec<BeliefNetwork>,
    zealot: Vec<bool>,
}

/// Initial beliefs and zealot flag for a group of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub nodes: Vec<usize>,
    pub beliefs: BeliefNetwork,
    pub zealot: bool,
}

impl Assignment {
    pub fn new(nodes: impl IntoIterator<Item = usize>, beliefs: BeliefNetwork, zealot: bool) -> Self {
        Assignment {
            nodes: nodes.into_iter().collect(),
            beliefs,
            zealot,
        }
    }
}

impl Population {
    /// Seeds a population from disjoint node groups that together cover the graph.
    pub fn seed(graph: impl Into<Arc<SocialGraph>>, assignments: &[Assignment]) -> Result<Self> {
        let graph = graph.into();
        let n = graph.node_count();
        let mut slots: Vec<Option<(BeliefNetwork, bool)>> = vec![None; n];
        let mut edge_count = None;
        for a in assignments {
            match edge_count {
                None => edge_count = Some(a.beliefs.edge_count()),
                Some(e) if e != a.beliefs.edge_count() => {
                    return Err(Error::InvalidPopulation(
                        "all agents must share the same concept count".into(),
                    ))
                }
                Some(_) => {}
            }
            for &v in &a.nodes {
                if v >= n {
                    return Err(Error::InvalidPopulation(format!("node {v} is not in the graph")));
                }
                if slots[v].is_some() {
                    return Err(Error::InvalidPopulation(format!("node {v} is assigned twice")));
                }
                slots[v] = Some((a.beliefs.clone(), a.zealot));
            }
        }
        if let Some(v) = slots.iter().position(Option::is_none) {
            return Err(Error::InvalidPopulation(format!("node {v} has no assignment")));
        }
        let (beliefs, zealot) = slots.into_iter().map(Option::unwrap).unzip();
        Ok(Population {
            graph,
            beliefs,
            zealot,
        })
    }

    /// Every node holds `beliefs`; nobody is a zealot.
    pub fn uniform(graph: impl Into<Arc<SocialGraph>>, beliefs: BeliefNetwork) -> Self {
        let graph = graph.into();
        let n = graph.node_count();
        Population {
            graph,
            beliefs: vec![beliefs; n],
            zealot: vec![false; n],
        }
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.beliefs.len()
    }

    pub fn beliefs(&self, node: usize) -> &BeliefNetwork {
        &self.beliefs[node]
    }

    pub fn all_beliefs(&self) -> &[BeliefNetwork] {
        &self.beliefs
    }

    pub fn is_zealot(&self, node: usize) -> bool {
        self.zealot[node]
    }

    pub fn zealots(&self) -> impl Iterator<Item = usize> + '_ {
        self.zealot.iter().enumerate().filter(|(_, &z)| z).map(|(v, _)| v)
    }
}
