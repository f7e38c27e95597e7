//! Per-command configuration: file loading, defaults and flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use contagion_core::defaults as d;
use contagion_core::experiments::{Fig2Config, Fig4Config};
use contagion_core::{ModelParams, Scenario, Variant};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Star,
    TwoCommunity,
    EdgeList,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Star => "star",
            GraphKind::TwoCommunity => "two-community",
            GraphKind::EdgeList => "edge-list",
        })
    }
}

/// A single simulation run. Size, length and model parameters left unset
/// take the star defaults for `graph = "star"` and the modularity defaults
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub graph: GraphKind,
    pub n: Option<usize>,
    /// Dissimilar leaves on a star.
    pub m: usize,
    pub scenario: Scenario,
    pub variant: Variant,
    pub m_edges: usize,
    pub omega: f64,
    pub rho0: f64,
    pub edge_list: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub steps: Option<u64>,
    pub snapshot_every: Option<u64>,
    pub hub_beliefs: bool,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            graph: GraphKind::Star,
            n: None,
            m: 0,
            scenario: Scenario::Stabilizing,
            variant: Variant::ZealotSimilar,
            m_edges: d::MOD_EDGES,
            omega: 0.15,
            rho0: 0.09,
            edge_list: None,
            alpha: None,
            beta: None,
            sigma: None,
            steps: None,
            snapshot_every: None,
            hub_beliefs: false,
            seed: d::MASTER_SEED,
        }
    }
}

impl SimulateConfig {
    /// Fills the fields left unset.
    pub fn resolve(mut self) -> Self {
        let (alpha, beta, sigma) = match self.graph {
            GraphKind::Star => (d::STAR_ALPHA, d::STAR_BETA, d::STAR_SIGMA),
            _ => (d::MOD_ALPHA, d::MOD_BETA, d::MOD_SIGMA),
        };
        let n = *self.n.get_or_insert(match self.graph {
            GraphKind::Star => d::STAR_NODES,
            _ => d::MOD_NODES,
        });
        let (steps, every) = match self.graph {
            GraphKind::Star => (d::STAR_MAX_STEPS, 100),
            _ => (d::MOD_BUDGET_PER_NODE * n as u64, 10_000),
        };
        self.steps.get_or_insert(steps);
        self.snapshot_every.get_or_insert(every);
        self.alpha.get_or_insert(alpha);
        self.beta.get_or_insert(beta);
        self.sigma.get_or_insert(sigma);
        self
    }

    pub fn params(&self) -> contagion_core::Result<ModelParams> {
        ModelParams::new(
            self.alpha.unwrap_or(f64::NAN),
            self.beta.unwrap_or(f64::NAN),
            self.sigma.unwrap_or(f64::NAN),
        )
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params().map_err(CliError::from)?;
        let n = self.n.unwrap_or(0);
        let bad = |field: &str, reason: String| Err(CliError::Config(format!("invalid parameter `{field}`: {reason}")));
        match self.graph {
            GraphKind::Star if n < 2 => return bad("n", "a star needs at least 2 nodes".into()),
            GraphKind::Star if self.m >= n => {
                return bad("m", format!("at most {} leaves can be dissimilar", n.saturating_sub(1)))
            }
            GraphKind::TwoCommunity if n < 2 => return bad("n", "need at least 2 nodes".into()),
            GraphKind::EdgeList if self.edge_list.is_none() => {
                return bad("edge_list", "required when graph = \"edge-list\"".into())
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return bad("omega", format!("must lie in [0, 1], got {}", self.omega));
        }
        if !(0.0..=1.0).contains(&self.rho0) {
            return bad("rho0", format!("must lie in [0, 1], got {}", self.rho0));
        }
        Ok(())
    }
}

/// The analytical star chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkovConfig {
    pub scenario: Scenario,
    pub alpha: f64,
    pub beta: f64,
    /// Leaves of the star (hub degree).
    pub k: usize,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        MarkovConfig {
            scenario: Scenario::Stabilizing,
            alpha: d::STAR_ALPHA,
            beta: d::STAR_BETA,
            k: d::STAR_NODES - 1,
        }
    }
}

impl MarkovConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        ModelParams::deterministic(self.alpha, self.beta)?;
        if self.k < 1 {
            return Err(CliError::Config("invalid parameter `k`: need at least one leaf".into()));
        }
        Ok(())
    }
}

/// The invariant suite run by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub events: u64,
    pub gradient_samples: usize,
    pub seed: u64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            events: 1_000_000,
            gradient_samples: 1_000,
            seed: d::MASTER_SEED,
        }
    }
}

/// A resolved configuration of any command.
pub trait CommandConfig: Serialize + DeserializeOwned + Default {
    const COMMAND: &'static str;
    fn check(&self) -> Result<(), CliError>;
}

impl CommandConfig for SimulateConfig {
    const COMMAND: &'static str = "simulate";
    fn check(&self) -> Result<(), CliError> {
        self.validate()
    }
}

impl CommandConfig for Fig2Config {
    const COMMAND: &'static str = "fig2";
    fn check(&self) -> Result<(), CliError> {
        Ok(self.validate()?)
    }
}

impl CommandConfig for Fig4Config {
    const COMMAND: &'static str = "fig4";
    fn check(&self) -> Result<(), CliError> {
        Ok(self.validate()?)
    }
}

impl CommandConfig for MarkovConfig {
    const COMMAND: &'static str = "markov";
    fn check(&self) -> Result<(), CliError> {
        self.validate()
    }
}

impl CommandConfig for ValidateConfig {
    const COMMAND: &'static str = "validate";
    fn check(&self) -> Result<(), CliError> {
        Ok(())
    }
}

/// Reads a configuration from a TOML file, or from the `config` section of a
/// run manifest (`.json`) written by an earlier run of the same command.
/// Missing fields take their defaults; unknown fields are rejected.
pub fn load_config<C: CommandConfig>(path: &Path) -> Result<C, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext == "json") {
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if manifest.command != C::COMMAND {
            return Err(CliError::Config(format!(
                "{}: manifest was written by `{}`, not `{}`",
                path.display(),
                manifest.command,
                C::COMMAND
            )));
        }
        serde_json::from_value(manifest.config).map_err(|e| CliError::Config(format!("{}: config: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// The file configuration, or the defaults when no file is given.
pub fn base_config<C: CommandConfig>(path: Option<&Path>) -> Result<C, CliError> {
    path.map_or_else(|| Ok(C::default()), load_config)
}
