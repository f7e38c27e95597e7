//! Exact analysis of the deterministic dynamics of a star hub among zealots.
//!
//! With `sigma = 0` and fixed leaves, the hub can only visit a finite set of
//! belief states. Beliefs are tracked as exact rationals so that states such as
//! `{0.5,1,1}` compare and hash exactly. Each transition is weighted by `u` (a
//! given belief from a dissimilar leaf) or `v` (from a similar leaf), with
//! `u = m / 3k` and `v = (k - m) / 3k` for `m` dissimilar leaves out of `k`.
//!
//! Matrices are column-stochastic: `entries[dest][source]`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::belief::{concept_count_for_edges, edge_endpoints, edge_index, triad_count, Sign, SignPattern};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::stats::fmt_sig6;

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_CAP: usize = 10_000;
/// Convergence threshold between successive squarings.
pub const SQUARING_TOL: f64 = 1e-12;
const MAX_SQUARINGS: usize = 200;

/// Largest denominator accepted when converting floats to exact rationals.
pub const MAX_DENOMINATOR: i64 = 1 << 16;

/// Converts a float to the rational it represents exactly, provided its
/// denominator is a power of two no larger than [`MAX_DENOMINATOR`]. Values such
/// as `0.1` are rejected: their exact binary expansions overflow the state
/// arithmetic within a few updates.
pub fn rational_from_f64(x: f64) -> Result<Rational64> {
    if !x.is_finite() || x.abs() > 1e9 {
        return Err(Error::NotRational(x));
    }
    let mut denom: i64 = 1;
    while denom <= MAX_DENOMINATOR {
        let scaled = x * denom as f64;
        if scaled.fract() == 0.0 {
            return Ok(Rational64::new(scaled as i64, denom));
        }
        denom *= 2;
    }
    Err(Error::NotRational(x))
}

/// A hub belief vector with exact rational components in canonical edge order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExactBeliefState(pub Vec<Rational64>);

impl ExactBeliefState {
    pub fn new(weights: Vec<Rational64>) -> Result<Self> {
        if concept_count_for_edges(weights.len()).is_none() {
            return Err(Error::WeightCount {
                concepts: 3,
                expected: 3,
                got: weights.len(),
            });
        }
        let one = Rational64::one();
        if let Some((edge, w)) = weights.iter().enumerate().find(|(_, w)| w.abs() > one) {
            return Err(Error::WeightOutOfRange {
                edge,
                value: ratio_to_f64(w),
            });
        }
        Ok(ExactBeliefState(weights))
    }

    pub fn from_f64(weights: &[f64]) -> Result<Self> {
        Self::new(weights.iter().map(|&w| rational_from_f64(w)).collect::<Result<_>>()?)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(ratio_to_f64).collect()
    }

    pub fn concept_count(&self) -> usize {
        concept_count_for_edges(self.0.len()).expect("validated on construction")
    }

    pub fn sign_pattern(&self) -> SignPattern {
        SignPattern(
            self.0
                .iter()
                .map(|w| {
                    if w.is_positive() {
                        Sign::Positive
                    } else if w.is_negative() {
                        Sign::Negative
                    } else {
                        Sign::Zero
                    }
                })
                .collect(),
        )
    }

    /// Exact partial derivative of the internal energy with respect to `edge`.
    pub fn energy_gradient(&self, edge: usize) -> Result<Rational64> {
        let n = self.concept_count();
        let (a, b) = edge_endpoints(n, edge).ok_or(Error::UnknownEdge {
            edge,
            edge_count: self.0.len(),
        })?;
        let mut sum = Rational64::zero();
        for c in (0..n).filter(|&c| c != a && c != b) {
            let ac = self.0[edge_index(n, a, c).unwrap()];
            let bc = self.0[edge_index(n, b, c).unwrap()];
            sum = ac.checked_mul(&bc).and_then(|p| sum.checked_add(&p)).ok_or(Error::Overflow)?;
        }
        let triads = Rational64::from_integer(triad_count(n) as i64);
        Ok(-sum.checked_div(&triads).ok_or(Error::Overflow)?)
    }

    /// Deterministic update of `edge` after receiving `sent`, clipped to `[-1, 1]`.
    pub fn successor(&self, sent: Rational64, edge: usize, alpha: Rational64, beta: Rational64) -> Result<Self> {
        let grad = self.energy_gradient(edge)?;
        let raw = alpha
            .checked_mul(&sent)
            .and_then(|push| self.0[edge].checked_add(&push))
            .and_then(|x| beta.checked_mul(&grad).and_then(|pull| x.checked_sub(&pull)))
            .ok_or(Error::Overflow)?;
        let one = Rational64::one();
        let mut next = self.0.clone();
        next[edge] = raw.max(-one).min(one);
        Ok(ExactBeliefState(next))
    }
}

fn ratio_to_f64(r: &Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn fmt_ratio(r: &Rational64) -> String {
    let mut d = *r.denom();
    while d % 2 == 0 {
        d /= 2;
    }
    while d % 5 == 0 {
        d /= 5;
    }
    if d == 1 {
        format!("{}", ratio_to_f64(r))
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for ExactBeliefState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", fmt_ratio(w))?;
        }
        write!(f, "}}")
    }
}

impl FromStr for ExactBeliefState {
    type Err = Error;

    /// Parses `{-1,0.5,1}` (braces optional); components may be decimals or `p/q`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('{').trim_end_matches('}');
        let bad = |_| Error::UnknownState(s.to_string());
        let weights = body
            .split(',')
            .map(|part| {
                let part = part.trim();
                if let Some((p, q)) = part.split_once('/') {
                    let p: i64 = p.trim().parse().map_err(bad)?;
                    let q: i64 = q.trim().parse().map_err(bad)?;
                    if q == 0 {
                        return Err(Error::UnknownState(s.to_string()));
                    }
                    Ok(Rational64::new(p, q))
                } else {
                    let x: f64 = part.parse().map_err(|_| Error::UnknownState(s.to_string()))?;
                    rational_from_f64(x)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SenderKind {
    /// Differs from the hub's initial system; each message has weight `u`.
    Dissimilar,
    /// Shares the hub's initial system; each message has weight `v`.
    Similar,
}

/// A zealot belief system that can send any of its beliefs to the hub.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenderRepertoire {
    pub beliefs: ExactBeliefState,
    pub kind: SenderKind,
}

/// Transition weight `a*u + b*v`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rate {
    pub u: u32,
    pub v: u32,
}

impl Rate {
    pub const ZERO: Rate = Rate { u: 0, v: 0 };

    pub fn new(u: u32, v: u32) -> Self {
        Rate { u, v }
    }

    pub fn eval(self, u: f64, v: f64) -> f64 {
        self.u as f64 * u + self.v as f64 * v
    }

    fn add(&mut self, kind: SenderKind) {
        match kind {
            SenderKind::Dissimilar => self.u += 1,
            SenderKind::Similar => self.v += 1,
        }
    }
}

impl std::ops::Add for Rate {
    type Output = Rate;

    fn add(self, rhs: Rate) -> Rate {
        Rate::new(self.u + rhs.u, self.v + rhs.v)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |c: u32, sym: &str| match c {
            0 => String::new(),
            1 => sym.to_string(),
            _ => format!("{c}{sym}"),
        };
        match (self.u, self.v) {
            (0, 0) => write!(f, "0"),
            (_, 0) => write!(f, "{}", term(self.u, "u")),
            (0, _) => write!(f, "{}", term(self.v, "v")),
            _ => write!(f, "{}+{}", term(self.u, "u"), term(self.v, "v")),
        }
    }
}

fn check_senders(initial: &ExactBeliefState, senders: &[SenderRepertoire]) -> Result<()> {
    if let Some(s) = senders.iter().find(|s| s.beliefs.0.len() != initial.0.len()) {
        return Err(Error::param(
            "sender_repertoires",
            format!("sender {} does not match the hub's edge count", s.beliefs),
        ));
    }
    Ok(())
}

/// Breadth-first closure of `initial` under every (sender, belief) message.
/// States are returned in discovery order.
pub fn enumerate_states(
    initial: &ExactBeliefState,
    senders: &[SenderRepertoire],
    alpha: Rational64,
    beta: Rational64,
    cap: usize,
) -> Result<Vec<ExactBeliefState>> {
    check_senders(initial, senders)?;
    let mut index: HashMap<ExactBeliefState, usize> = HashMap::new();
    let mut states = vec![initial.clone()];
    index.insert(initial.clone(), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let current = states[i].clone();
        for sender in senders {
            for (edge, &sent) in sender.beliefs.0.iter().enumerate() {
                let next = current.successor(sent, edge, alpha, beta)?;
                if !index.contains_key(&next) {
                    if states.len() >= cap {
                        return Err(Error::StateCap { cap });
                    }
                    index.insert(next.clone(), states.len());
                    queue.push_back(states.len());
                    states.push(next);
                }
            }
        }
    }
    Ok(states)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    pub states: Vec<ExactBeliefState>,
    /// `entries[dest][source]`.
    pub entries: Vec<Vec<Rate>>,
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &ExactBeliefState) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    pub fn entry(&self, dest: &ExactBeliefState, source: &ExactBeliefState) -> Option<Rate> {
        Some(self.entries[self.index_of(dest)?][self.index_of(source)?])
    }

    pub fn column_sums(&self) -> Vec<Rate> {
        (0..self.len())
            .map(|c| self.entries.iter().fold(Rate::ZERO, |acc, row| acc + row[c]))
            .collect()
    }

    /// Numeric matrix for given `u`, `v`.
    pub fn numeric(&self, u: f64, v: f64) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|r| r.eval(u, v)).collect())
            .collect()
    }

    /// Symbolic table: a header of state labels, then one row per destination.
    pub fn write_symbolic<W: Write>(&self, mut out: W) -> io::Result<()> {
        let labels: Vec<String> = self.states.iter().map(|s| s.to_string()).collect();
        let width = labels.iter().map(String::len).max().unwrap_or(1).max(6);
        write!(out, "{:width$}", "")?;
        for l in &labels {
            write!(out, " {l:>width$}")?;
        }
        writeln!(out)?;
        for (label, row) in labels.iter().zip(&self.entries) {
            write!(out, "{label:width$}")?;
            for r in row {
                write!(out, " {:>width$}", r.to_string())?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Numeric CSV: header `state,<labels...>`, one row per destination.
    pub fn write_numeric_csv<W: Write>(&self, mut out: W, u: f64, v: f64) -> io::Result<()> {
        let quote = |s: &ExactBeliefState| format!("\"{s}\"");
        write!(out, "state")?;
        for s in &self.states {
            write!(out, ",{}", quote(s))?;
        }
        writeln!(out)?;
        for (s, row) in self.states.iter().zip(self.numeric(u, v)) {
            write!(out, "{}", quote(s))?;
            for x in row {
                write!(out, ",{}", fmt_sig6(x))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Accumulates `u` or `v` into `entries[dest][source]` for every message.
pub fn build_transition_matrix(
    states: &[ExactBeliefState],
    senders: &[SenderRepertoire],
    alpha: Rational64,
    beta: Rational64,
) -> Result<TransitionMatrix> {
    let Some(first) = states.first() else {
        return Err(Error::param("states", "empty state set"));
    };
    check_senders(first, senders)?;
    let index: HashMap<&ExactBeliefState, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let n = states.len();
    let mut entries = vec![vec![Rate::ZERO; n]; n];
    for (source, state) in states.iter().enumerate() {
        for sender in senders {
            for (edge, &sent) in sender.beliefs.0.iter().enumerate() {
                let next = state.successor(sent, edge, alpha, beta)?;
                let dest = *index.get(&next).ok_or_else(|| Error::ClosureViolation {
                    from: state.to_string(),
                })?;
                entries[dest][source].add(sender.kind);
            }
        }
    }
    Ok(TransitionMatrix {
        states: states.to_vec(),
        entries,
    })
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// `lim P^t e_initial` by repeated squaring. For a reducible chain this picks the
/// stationary distribution reached from `initial`.
pub fn stationary_from(matrix: &TransitionMatrix, u: f64, v: f64, initial: &ExactBeliefState) -> Result<Vec<f64>> {
    if !(u >= 0.0 && v >= 0.0) || (3.0 * (u + v) - 1.0).abs() > 1e-12 {
        return Err(Error::param("u, v", format!("need u, v >= 0 and 3(u+v) = 1, got u={u}, v={v}")));
    }
    let start = matrix
        .index_of(initial)
        .ok_or_else(|| Error::UnknownState(initial.to_string()))?;
    let column = |m: &[Vec<f64>]| m.iter().map(|row| row[start]).collect::<Vec<f64>>();
    let mut power = matrix.numeric(u, v);
    let mut prev = column(&power);
    for _ in 0..MAX_SQUARINGS {
        power = mat_mul(&power, &power);
        let next = column(&power);
        let diff = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if diff < SQUARING_TOL {
            let total: f64 = next.iter().sum();
            return Ok(next.into_iter().map(|p| p / total).collect());
        }
        prev = next;
    }
    Err(Error::NoConvergence {
        squarings: MAX_SQUARINGS,
    })
}

/// `max_i |(P pi)_i - pi_i|`.
pub fn stationary_residual(matrix: &TransitionMatrix, u: f64, v: f64, pi: &[f64]) -> f64 {
    matrix
        .numeric(u, v)
        .iter()
        .zip(pi)
        .map(|(row, p)| (row.iter().zip(pi).map(|(a, b)| a * b).sum::<f64>() - p).abs())
        .fold(0.0, f64::max)
}

/// Total stationary mass on `targets`.
pub fn flip_probability(matrix: &TransitionMatrix, pi: &[f64], targets: &[ExactBeliefState]) -> Result<f64> {
    targets.iter().try_fold(0.0, |acc, t| {
        let i = matrix.index_of(t).ok_or_else(|| Error::UnknownState(t.to_string()))?;
        Ok(acc + pi[i])
    })
}

/// Enumerated states whose sign pattern equals `pattern`.
pub fn states_matching(states: &[ExactBeliefState], pattern: &SignPattern) -> Vec<ExactBeliefState> {
    states.iter().filter(|s| &s.sign_pattern() == pattern).cloned().collect()
}

/// The hub chain of a star scenario.
#[derive(Debug, Clone)]
pub struct StarChain {
    pub scenario: Scenario,
    pub initial: ExactBeliefState,
    pub matrix: TransitionMatrix,
    /// States that count as a flip: same sign pattern as the dissimilar zealots.
    pub targets: Vec<ExactBeliefState>,
}

impl StarChain {
    pub fn new(scenario: Scenario, alpha: f64, beta: f64) -> Result<Self> {
        let alpha_q = rational_from_f64(alpha)?;
        let beta_q = rational_from_f64(beta)?;
        let initial = ExactBeliefState::from_f64(&scenario.hub_initial())?;
        let senders = scenario_senders(scenario)?;
        let states = enumerate_states(&initial, &senders, alpha_q, beta_q, DEFAULT_STATE_CAP)?;
        let matrix = build_transition_matrix(&states, &senders, alpha_q, beta_q)?;
        let targets = states_matching(&states, &scenario.target());
        Ok(StarChain {
            scenario,
            initial,
            matrix,
            targets,
        })
    }

    /// `(u, v)` for `m` dissimilar leaves out of `k`.
    pub fn rates(m: usize, k: usize) -> (f64, f64) {
        let k3 = 3.0 * k as f64;
        (m as f64 / k3, (k - m) as f64 / k3)
    }

    pub fn stationary(&self, m: usize, k: usize) -> Result<Vec<f64>> {
        if k == 0 || m > k {
            return Err(Error::param("m", format!("need 0 <= m <= k and k >= 1, got m={m}, k={k}")));
        }
        let (u, v) = Self::rates(m, k);
        stationary_from(&self.matrix, u, v, &self.initial)
    }

    pub fn flip_probability(&self, m: usize, k: usize) -> Result<f64> {
        let pi = self.stationary(m, k)?;
        flip_probability(&self.matrix, &pi, &self.targets)
    }

    /// Flip probability for every `m` in `0..=k`.
    pub fn curve(&self, k: usize) -> Result<Vec<CurvePoint>> {
        (0..=k)
            .map(|m| {
                Ok(CurvePoint {
                    m,
                    flip_probability: self.flip_probability(m, k)?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub flip_probability: f64,
}

/// Dissimilar and similar zealot repertoires of a star scenario.
pub fn scenario_senders(scenario: Scenario) -> Result<Vec<SenderRepertoire>> {
    Ok(vec![
        SenderRepertoire {
            beliefs: ExactBeliefState::from_f64(&scenario.dissimilar())?,
            kind: SenderKind::Dissimilar,
        },
        SenderRepertoire {
            beliefs: ExactBeliefState::from_f64(&scenario.similar())?,
            kind: SenderKind::Similar,
        },
    ])
}

/// Analytical flip-probability curve of a star scenario with `k` leaves.
pub fn analytical_curve(scenario: Scenario, k: usize, alpha: f64, beta: f64) -> Result<Vec<CurvePoint>> {
    if k < 1 {
        return Err(Error::param("k", "need at least one leaf"));
    }
    StarChain::new(scenario, alpha, beta)?.curve(k)
}
