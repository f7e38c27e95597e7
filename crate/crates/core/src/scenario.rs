//! Initial conditions of the star-network and two-community campaigns.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefNetwork, SignPattern};
use crate::error::{Error, Result};
use crate::graph::{CommunityLayout, SocialGraph};
use crate::population::{Assignment, Population};

/// Star-network setups.
///
/// In both cases the hub starts in the "similar" system and `m` leaves hold the
/// "dissimilar" one. The second scenario starts the hub at `{-1,-1,+1}` and
/// pushes it towards the `{+1,+1,+1}` family; flipping the signs of the first
/// two beliefs everywhere maps it onto the `{+1,+1,+1}` hub facing
/// `{-1,-1,+1}` zealots without changing any energy or update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scenario {
    /// Unstable hub `{-1,+1,+1}` among stable `{+1,+1,+1}` zealots.
    Stabilizing,
    /// Stable hub `{-1,-1,+1}` among zealots of a different stable kind `{+1,+1,+1}`.
    Destabilizing,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Stabilizing, Scenario::Destabilizing];

    pub fn number(self) -> u8 {
        match self {
            Scenario::Stabilizing => 1,
            Scenario::Destabilizing => 2,
        }
    }

    pub fn hub_initial(self) -> [f64; 3] {
        self.similar()
    }

    /// Beliefs of the leaves that differ from the hub.
    pub fn dissimilar(self) -> [f64; 3] {
        [1.0, 1.0, 1.0]
    }

    /// Beliefs of the leaves that share the hub's initial system.
    pub fn similar(self) -> [f64; 3] {
        match self {
            Scenario::Stabilizing => [-1.0, 1.0, 1.0],
            Scenario::Destabilizing => [-1.0, -1.0, 1.0],
        }
    }

    pub fn target(self) -> SignPattern {
        triad(self.dissimilar()).sign_pattern()
    }
}

impl TryFrom<u8> for Scenario {
    type Error = String;

    fn try_from(n: u8) -> std::result::Result<Self, String> {
        match n {
            1 => Ok(Scenario::Stabilizing),
            2 => Ok(Scenario::Destabilizing),
            _ => Err(format!("scenario must be 1 or 2, got {n}")),
        }
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        s.number()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let n: u8 = s.trim().parse().map_err(|_| format!("scenario must be 1 or 2, got `{s}`"))?;
        Scenario::try_from(n)
    }
}

/// Whether the hub-similar leaves are held fixed too.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Every leaf is a zealot.
    ZealotSimilar,
    /// Only dissimilar leaves are zealots; similar leaves may change.
    FreeSimilar,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::ZealotSimilar => "zealot-similar",
            Variant::FreeSimilar => "free-similar",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zealot-similar" => Ok(Variant::ZealotSimilar),
            "free-similar" => Ok(Variant::FreeSimilar),
            _ => Err(format!("variant must be `zealot-similar` or `free-similar`, got `{s}`")),
        }
    }
}

pub(crate) fn triad(w: [f64; 3]) -> BeliefNetwork {
    BeliefNetwork::triad(w[0], w[1], w[2]).expect("scenario weights are valid")
}

/// Star of `n` nodes: hub 0, leaves `1..=m` dissimilar zealots, remaining leaves similar.
pub fn star_population(scenario: Scenario, variant: Variant, n: usize, m: usize) -> Result<Population> {
    let graph = SocialGraph::star(n)?;
    star_population_on(Arc::new(graph), scenario, variant, m)
}

pub fn star_population_on(
    graph: Arc<SocialGraph>,
    scenario: Scenario,
    variant: Variant,
    m: usize,
) -> Result<Population> {
    let k = graph.node_count() - 1;
    if m > k {
        return Err(Error::param("m", format!("at most {k} leaves can be dissimilar, got {m}")));
    }
    Population::seed(
        graph,
        &[
            Assignment::new([0], triad(scenario.hub_initial()), false),
            Assignment::new(1..=m, triad(scenario.dissimilar()), true),
            Assignment::new(
                m + 1..=k,
                triad(scenario.similar()),
                variant == Variant::ZealotSimilar,
            ),
        ],
    )
}

/// Zealot system of the modularity campaign.
pub const MODULARITY_ZEALOT: [f64; 3] = [1.0, 1.0, 1.0];
/// Initial system of everyone else in the modularity campaign.
pub const MODULARITY_RESIDENT: [f64; 3] = [1.0, -1.0, -1.0];

/// Number of zealots for a seed fraction `rho0` of `n` nodes (rounded half up).
pub fn zealot_count(n: usize, rho0: f64) -> usize {
    ((rho0 * n as f64) + 0.5 + 1e-9).floor() as usize
}

/// `round(rho0 * n)` zealots placed uniformly at random in community 0; all
/// other nodes are non-zealot residents.
pub fn modularity_population<R: Rng + ?Sized>(
    graph: Arc<SocialGraph>,
    layout: &CommunityLayout,
    rho0: f64,
    rng: &mut R,
) -> Result<Population> {
    if !(0.0..=1.0).contains(&rho0) {
        return Err(Error::param("rho0", format!("must lie in [0, 1], got {rho0}")));
    }
    let mut seed_community = layout.members(0);
    let count = zealot_count(graph.node_count(), rho0);
    if count > seed_community.len() {
        return Err(Error::param(
            "rho0",
            format!(
                "{count} zealots do not fit in a community of {}",
                seed_community.len()
            ),
        ));
    }
    seed_community.shuffle(rng);
    let zealots: Vec<usize> = seed_community[..count].to_vec();
    let mut is_zealot = vec![false; graph.node_count()];
    for &z in &zealots {
        is_zealot[z] = true;
    }
    let residents = (0..graph.node_count()).filter(|&v| !is_zealot[v]);
    Population::seed(
        graph.clone(),
        &[
            Assignment::new(zealots, triad(MODULARITY_ZEALOT), true),
            Assignment::new(residents, triad(MODULARITY_RESIDENT), false),
        ],
    )
}
