//! A single agent's belief network.
//!
//! Concepts are the nodes of a small complete graph and every pair of concepts
//! carries a signed belief weight in `[-1, 1]`. Edges are stored in canonical
//! order: `(0,1), (0,2), ..., (0,n-1), (1,2), ...`. For the three-concept case
//! the edges `0, 1, 2` are the pairs `(0,1), (0,2), (1,2)`.
//!
//! The internal energy is the negated mean of the weight products over all
//! concept triangles, so coherent (balanced) triads lower it. Three-concept
//! networks take a direct path; larger ones loop over triangles.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of belief edges in a complete graph over `concept_count` concepts.
pub const fn edge_count(concept_count: usize) -> usize {
    concept_count * concept_count.saturating_sub(1) / 2
}

/// Number of concept triangles.
pub const fn triad_count(concept_count: usize) -> usize {
    if concept_count < 3 {
        0
    } else {
        concept_count * (concept_count - 1) * (concept_count - 2) / 6
    }
}

/// Inverse of [`edge_count`]; `None` when `edges` is not a triangular number of a
/// graph with at least three concepts.
pub fn concept_count_for_edges(edges: usize) -> Option<usize> {
    (3..).take_while(|&n| edge_count(n) <= edges).find(|&n| edge_count(n) == edges)
}

/// Canonical index of the belief between concepts `a` and `b`.
pub fn edge_index(concept_count: usize, a: usize, b: usize) -> Option<usize> {
    if a == b || a >= concept_count || b >= concept_count {
        return None;
    }
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    Some(pair_index(concept_count, a, b))
}

#[inline]
fn pair_index(n: usize, a: usize, b: usize) -> usize {
    // a < b
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

/// Concept pair `(a, b)` with `a < b` for a canonical edge index.
pub fn edge_endpoints(concept_count: usize, edge: usize) -> Option<(usize, usize)> {
    let mut base = 0;
    for a in 0..concept_count.saturating_sub(1) {
        let row = concept_count - a - 1;
        if edge < base + row {
            return Some((a, a + 1 + edge - base));
        }
        base += row;
    }
    None
}

/// Edge-index triples of every concept triangle, in lexicographic order of the
/// concept triples.
pub fn triads(concept_count: usize) -> Vec<[usize; 3]> {
    let n = concept_count;
    let mut out = Vec::with_capacity(triad_count(n));
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out.push([pair_index(n, a, b), pair_index(n, a, c), pair_index(n, b, c)]);
            }
        }
    }
    out
}

fn energy_general(weights: &[f64], concept_count: usize) -> f64 {
    let n = concept_count;
    let mut sum = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let ab = weights[pair_index(n, a, b)];
            for c in b + 1..n {
                sum += ab * weights[pair_index(n, a, c)] * weights[pair_index(n, b, c)];
            }
        }
    }
    -sum / triad_count(n) as f64
}

fn gradient_general(weights: &[f64], concept_count: usize, edge: usize) -> f64 {
    let n = concept_count;
    let (a, b) = edge_endpoints(n, edge).expect("edge checked by caller");
    let sum: f64 = (0..n)
        .filter(|&c| c != a && c != b)
        .map(|c| weights[edge_index(n, a, c).unwrap()] * weights[edge_index(n, b, c).unwrap()])
        .sum();
    -sum / triad_count(n) as f64
}

/// Model parameters of the update rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Social influence strength.
    pub alpha: f64,
    /// Drive towards internal coherence.
    pub beta: f64,
    /// Standard deviation of the update noise; zero selects the deterministic rule.
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        let params = ModelParams { alpha, beta, sigma };
        params.validate()?;
        Ok(params)
    }

    pub fn deterministic(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [("alpha", self.alpha), ("beta", self.beta), ("sigma", self.sigma)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::param(
                    field,
                    format!("must be finite and non-negative, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TriadStability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(value: f64) -> Sign {
        if value > 0.0 {
            Sign::Positive
        } else if value < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Zero => '0',
            Sign::Positive => '+',
        }
    }
}

/// Signs of the beliefs in canonical edge order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignPattern(pub Vec<Sign>);

impl SignPattern {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when `weights` carries exactly this pattern.
    pub fn matches(&self, weights: &[f64]) -> bool {
        self.0.len() == weights.len() && self.0.iter().zip(weights).all(|(s, &w)| *s == Sign::of(w))
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", s.as_char())?;
        }
        write!(f, ")")
    }
}

/// An agent's belief system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefNetwork {
    concept_count: usize,
    weights: Vec<f64>,
}

impl BeliefNetwork {
    pub fn new(concept_count: usize, weights: Vec<f64>) -> Result<Self> {
        if concept_count < 3 {
            return Err(Error::TooFewConcepts(concept_count));
        }
        let expected = edge_count(concept_count);
        if weights.len() != expected {
            return Err(Error::WeightCount {
                concepts: concept_count,
                expected,
                got: weights.len(),
            });
        }
        if let Some((edge, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(-1.0..=1.0).contains(*w))
        {
            return Err(Error::WeightOutOfRange { edge, value });
        }
        Ok(BeliefNetwork {
            concept_count,
            weights,
        })
    }

    /// Three-concept network with beliefs on `(0,1), (0,2), (1,2)`.
    pub fn triad(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(3, vec![x, y, z])
    }

    /// Infers the concept count from the number of weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let concepts = concept_count_for_edges(weights.len()).ok_or(Error::WeightCount {
            concepts: 3,
            expected: 3,
            got: weights.len(),
        })?;
        Self::new(concepts, weights)
    }

    pub fn concept_count(&self) -> usize {
        self.concept_count
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, edge: usize) -> Result<f64> {
        self.check_edge(edge)?;
        Ok(self.weights[edge])
    }

    fn check_edge(&self, edge: usize) -> Result<()> {
        if edge < self.weights.len() {
            Ok(())
        } else {
            Err(Error::UnknownEdge {
                edge,
                edge_count: self.weights.len(),
            })
        }
    }

    /// Internal energy: minus the mean triad product.
    pub fn internal_energy(&self) -> f64 {
        if self.concept_count == 3 {
            return -(self.weights[0] * self.weights[1] * self.weights[2]);
        }
        energy_general(&self.weights, self.concept_count)
    }

    /// Partial derivative of the internal energy with respect to one belief.
    pub fn energy_gradient(&self, edge: usize) -> Result<f64> {
        self.check_edge(edge)?;
        Ok(self.gradient_unchecked(edge))
    }

    #[inline]
    fn gradient_unchecked(&self, edge: usize) -> f64 {
        if self.concept_count == 3 {
            let w = &self.weights;
            // the two beliefs sharing a triangle with `edge`
            return match edge {
                0 => -(w[1] * w[2]),
                1 => -(w[0] * w[2]),
                _ => -(w[0] * w[1]),
            };
        }
        gradient_general(&self.weights, self.concept_count, edge)
    }

    /// Mean of the increment: `alpha * sender_belief - beta * dE/db_edge`.
    pub fn mean_increment(&self, sender_belief: f64, edge: usize, params: &ModelParams) -> Result<f64> {
        self.check_edge(edge)?;
        Ok(params.alpha * sender_belief - params.beta * self.gradient_unchecked(edge))
    }

    /// Increment applied to `edge` after receiving `sender_belief`. With
    /// `sigma > 0` this is one Gaussian draw around the deterministic value.
    pub fn increment<R: Rng + ?Sized>(
        &self,
        sender_belief: f64,
        edge: usize,
        params: &ModelParams,
        rng: &mut R,
    ) -> Result<f64> {
        let mean = self.mean_increment(sender_belief, edge, params)?;
        if params.sigma == 0.0 {
            return Ok(mean);
        }
        let z: f64 = StandardNormal.sample(rng);
        Ok(mean + params.sigma * z)
    }

    /// Adds `delta` to a belief and clips the result to `[-1, 1]`.
    pub fn apply_update(&mut self, edge: usize, delta: f64) -> Result<()> {
        self.check_edge(edge)?;
        let w = &mut self.weights[edge];
        *w = (*w + delta).clamp(-1.0, 1.0);
        Ok(())
    }

    pub fn updated(&self, edge: usize, delta: f64) -> Result<Self> {
        let mut next = self.clone();
        next.apply_update(edge, delta)?;
        Ok(next)
    }

    /// Balance label per triad; a zero sign product counts as unstable.
    pub fn classify_triads(&self) -> Vec<TriadStability> {
        triads(self.concept_count)
            .into_iter()
            .map(|[e0, e1, e2]| {
                if self.weights[e0] * self.weights[e1] * self.weights[e2] > 0.0 {
                    TriadStability::Stable
                } else {
                    TriadStability::Unstable
                }
            })
            .collect()
    }

    pub fn sign_pattern(&self) -> SignPattern {
        SignPattern(self.weights.iter().map(|&w| Sign::of(w)).collect())
    }
}

impl fmt::Display for BeliefNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, w) in self.weights.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(x: f64, y: f64, z: f64) -> BeliefNetwork {
        BeliefNetwork::triad(x, y, z).unwrap()
    }

    #[test]
    fn edge_indexing_round_trips() {
        for n in 3..8 {
            for e in 0..edge_count(n) {
                let (a, b) = edge_endpoints(n, e).unwrap();
                assert_eq!(edge_index(n, a, b), Some(e));
                assert_eq!(edge_index(n, b, a), Some(e));
            }
            assert_eq!(edge_endpoints(n, edge_count(n)), None);
        }
        assert_eq!(edge_index(3, 1, 1), None);
        assert_eq!(concept_count_for_edges(3), Some(3));
        assert_eq!(concept_count_for_edges(15), Some(6));
        assert_eq!(concept_count_for_edges(4), None);
    }

    #[test]
    fn energy_of_single_triads() {
        assert_eq!(net(1.0, 1.0, 1.0).internal_energy(), -1.0);
        assert_eq!(net(-1.0, 1.0, 1.0).internal_energy(), 1.0);
        assert_eq!(net(-1.0, -1.0, 1.0).internal_energy(), -1.0);
    }

    #[test]
    fn rejects_bad_networks() {
        assert_eq!(BeliefNetwork::new(2, vec![1.0]), Err(Error::TooFewConcepts(2)));
        assert!(matches!(BeliefNetwork::triad(1.5, 0.0, 0.0), Err(Error::WeightOutOfRange { edge: 0, .. })));
        assert!(matches!(BeliefNetwork::new(4, vec![0.0; 3]), Err(Error::WeightCount { expected: 6, .. })));
        assert!(BeliefNetwork::triad(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(net(-1.0, 1.0, 1.0).energy_gradient(0).unwrap(), -1.0);
        assert_eq!(net(1.0, -1.0, 1.0).energy_gradient(0).unwrap(), 1.0);
        assert!(matches!(net(1.0, 1.0, 1.0).energy_gradient(3), Err(Error::UnknownEdge { .. })));
    }

    #[test]
    fn general_path_agrees_with_triad_fast_path() {
        let b = net(0.3, -0.7, 0.9);
        assert_eq!(energy_general(b.weights(), 3), b.internal_energy());
        for e in 0..3 {
            assert_eq!(gradient_general(b.weights(), 3, e), b.energy_gradient(e).unwrap());
        }
    }

    #[test]
    fn deterministic_increments() {
        let p = ModelParams::deterministic(1.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = net(-1.0, 1.0, 1.0).increment(1.0, 0, &p, &mut rng).unwrap();
        assert_eq!(d, 2.5);
        let d = net(1.0, 1.0, 1.0).increment(-1.0, 0, &p, &mut rng).unwrap();
        assert_eq!(d, -0.5);
        // zero sender belief against a vanishing gradient
        let d = net(0.4, 0.0, 1.0).increment(0.0, 0, &p, &mut rng).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn noisy_increment_is_reproducible_and_centred() {
        let p = ModelParams::new(1.5, 1.0, 0.2).unwrap();
        let b = net(1.0, 1.0, 1.0);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20_000).map(|_| b.increment(-1.0, 0, &p, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        let a = draw(7);
        assert_eq!(a, draw(7));
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (a.len() - 1) as f64;
        assert!((mean + 0.5).abs() < 0.01, "mean {mean}");
        assert!((var.sqrt() - 0.2).abs() < 0.01, "sd {}", var.sqrt());
    }

    #[test]
    fn update_clips() {
        let b = net(-1.0, 1.0, 1.0).updated(0, 2.5).unwrap();
        assert_eq!(b.weights(), &[1.0, 1.0, 1.0]);
        let b = net(1.0, 1.0, 1.0).updated(0, -0.5).unwrap();
        assert_eq!(b.weights(), &[0.5, 1.0, 1.0]);
        let b = net(0.3, 1.0, 1.0).updated(0, 0.0).unwrap();
        assert_eq!(b.weights(), &[0.3, 1.0, 1.0]);
    }

    #[test]
    fn triad_labels() {
        use TriadStability::*;
        assert_eq!(net(1.0, 1.0, 1.0).classify_triads(), vec![Stable]);
        assert_eq!(net(-1.0, 1.0, 1.0).classify_triads(), vec![Unstable]);
        assert_eq!(net(-1.0, -1.0, 1.0).classify_triads(), vec![Stable]);
        assert_eq!(net(0.0, -1.0, 1.0).classify_triads(), vec![Unstable]);
        let four = BeliefNetwork::new(4, vec![1.0, 1.0, -1.0, 1.0, -1.0, -1.0]).unwrap();
        assert_eq!(four.classify_triads().len(), 4);
    }

    #[test]
    fn sign_patterns() {
        use Sign::*;
        assert_eq!(net(0.5, 1.0, 1.0).sign_pattern().0, vec![Positive, Positive, Positive]);
        assert_eq!(net(-0.2, 1.0, 1.0).sign_pattern().0, vec![Negative, Positive, Positive]);
        assert_eq!(net(0.0, 1.0, -1.0).sign_pattern().0, vec![Zero, Positive, Negative]);
        assert_eq!(net(0.0, 1.0, -1.0).sign_pattern().to_string(), "(0,+,-)");
    }

    #[test]
    fn params_validation_names_field() {
        let err = ModelParams::new(-1.0, 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("alpha"));
        assert!(ModelParams::new(1.0, f64::INFINITY, 0.0).is_err());
    }

    fn weights_strategy() -> impl Strategy<Value = BeliefNetwork> {
        (3usize..=6).prop_flat_map(|n| {
            proptest::collection::vec(-1.0f64..=1.0, edge_count(n))
                .prop_map(move |w| BeliefNetwork::new(n, w).unwrap())
        })
    }

    proptest! {
        #[test]
        fn updates_stay_bounded(deltas in proptest::collection::vec((0usize..3, -5.0f64..5.0), 0..200)) {
            let mut b = net(0.1, -0.2, 0.3);
            for (e, d) in deltas {
                b.apply_update(e, d).unwrap();
                prop_assert!(b.weights().iter().all(|w| (-1.0..=1.0).contains(w)));
            }
        }

        #[test]
        fn energy_is_bounded(b in weights_strategy()) {
            prop_assert!(b.internal_energy().abs() <= 1.0);
        }

        #[test]
        fn negating_two_beliefs_keeps_energy(x in -1.0f64..=1.0, y in -1.0f64..=1.0, z in -1.0f64..=1.0) {
            let e = net(x, y, z).internal_energy();
            prop_assert_eq!(net(-x, -y, z).internal_energy(), e);
            prop_assert_eq!(net(x, -y, -z).internal_energy(), e);
            prop_assert_eq!(net(-x, y, -z).internal_energy(), e);
        }
    }
}
