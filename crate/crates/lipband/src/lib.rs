//! Stochastic multi-armed bandits with a Lipschitz continuity structure whose
//! constant is not known up front and must be carried over from past episodes.
//!
//! The crate is organized around the lifecycle of one bandit episode:
//!
//! - [`embed`] / [`instance`]: arm embeddings with cached pairwise distances,
//!   and Bernoulli mean-reward vectors with best-arm sets and gaps.
//! - [`kl`] / [`lipschitz`]: Bernoulli KL divergence and the tightest
//!   Lipschitz constant of an instance w.r.t. an embedding.
//! - [`oracle`]: the instance-dependent regret lower bound `C(mu, L)` as a
//!   small linear program over exploration rates, plus the closed-form
//!   scale-free bound and the continuity window of `C` in `L`.
//! - [`policy`]: a three-phase directed-exploration policy `pi(L)` that
//!   tracks the LP solution for a believed constant `L`.
//! - [`estimator`]: constant estimators across episodes (quantile with
//!   margin, running max, online per-round), threshold formulas, and the
//!   adversarial episode-pair construction.
//! - [`sim`]: seeded Bernoulli environments, episode execution with regret
//!   accounting, and the chain instance generator.
//! - [`experiments`]: reproducible experiment definitions behind the
//!   `lipband` CLI, emitting CSV traces and run manifests.

pub mod embed;
pub mod estimator;
pub mod experiments;
pub mod kl;
pub mod lipschitz;
pub mod instance;
pub mod oracle;
pub mod policy;
pub mod sim;
pub mod simplex;

pub use embed::ArmEmbedding;
pub use estimator::{EpisodeSummary, EstimatorConfig, LearnabilityProfile};
pub use instance::BanditInstance;
pub use kl::bernoulli_kl;
pub use lipschitz::{is_member, lipschitz_of, Lipschitz};
pub use oracle::{solve_lower_bound, ExplorationAllocation, LowerBoundSolution, LpStatus};
pub use policy::{DelPolicy, Phase, PolicyConfig, PolicyState};
pub use sim::{run_episode, Environment, EpisodeResult};

use std::fmt;

/// Library-level error for fallible constructors and experiment plumbing.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid argument or domain-type invariant violation.
    InvalidInput(String),
    /// Malformed experiment configuration.
    Config(String),
    /// Filesystem failure while emitting results.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
