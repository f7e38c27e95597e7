//! Weighted belief-network contagion.
//!
//! Each agent carries a small signed belief network and tries to lower its
//! internal energy while neighbors push individual beliefs towards their own.
//! The crate provides the agent model ([`belief`]), social graphs and
//! populations ([`graph`], [`population`], [`scenario`]), the asynchronous
//! simulation engine ([`dynamics`]), an exact Markov analysis of the
//! deterministic star dynamics ([`markov`]) and the two reproduction campaigns
//! ([`experiments`]).

pub mod belief;
pub mod defaults;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod markov;
pub mod population;
pub mod scenario;
pub mod seeding;
pub mod stats;

pub use belief::{BeliefNetwork, ModelParams, Sign, SignPattern, TriadStability};
pub use dynamics::{adoption_fraction, run, run_ensemble, step, SimulationConfig, Termination, Trajectory};
pub use error::{Error, Result};
pub use graph::{CommunityLayout, SocialGraph};
pub use markov::{ExactBeliefState, Rate, StarChain, TransitionMatrix};
pub use population::{Assignment, Population};
pub use scenario::{Scenario, Variant};
