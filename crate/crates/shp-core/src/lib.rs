//! Causal structure learning for multivariate event streams via structural
//! Hawkes processes.
//!
//! The model is a discrete-time Hawkes process over event types `V` in which
//! the intensity of type `v` in bin `k` may depend both on lagged counts of
//! all types and on *same-bin* counts of other types:
//!
//! ```text
//! lambda_v(k) = mu_v + sum_{v'} alpha_{v',v} * ( L_{v',k} + [v' != v] * X_{v',k} )
//! ```
//!
//! where `L_{v',k}` is the exponentially discounted sum of earlier bins of
//! `v'`. The same-bin (instantaneous) term is what makes edge directions
//! identifiable from aggregated data; the diagonal same-bin term is excluded
//! so a count never explains itself. Bin counts are conditionally Poisson
//! with mean `lambda_v(k) * delta`.
//!
//! The crate provides the full pipeline: simulation of ground-truth models
//! ([`sim`]), exact likelihood evaluation ([`likelihood`]), closed-form
//! minorization-maximization fitting ([`estimator`]), penalized hill-climbing
//! over DAGs ([`search`]), structure metrics ([`metrics`]), and experiment
//! drivers that probe when directions are recoverable ([`experiment`]).

// Bin and node indices are meaningful throughout (recursions over `k`,
// parent sums over `u`), so index loops are the house style here.
#![allow(clippy::needless_range_loop)]

pub mod counts;
pub mod error;
pub mod estimator;
pub mod events;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod likelihood;
pub mod metrics;
pub mod params;
pub mod search;
pub mod seed;
pub mod sim;

pub use counts::{bin_events, BinnedCounts};
pub use error::{ErrorClass, Result, ShpError};
pub use estimator::{fit, mm_step, responsibilities, FitConfig, FitResult};
pub use events::{ContinuousSequence, EventRecord};
pub use graph::CausalGraph;
pub use likelihood::{intensity, log_likelihood, penalized_score, IntensityMatrix};
pub use metrics::{compare_graphs, MetricReport};
pub use params::ShpParams;
pub use search::{hill_climb, threshold_graph, SearchConfig, SearchResult};
pub use sim::{
    random_dag, sample_params, simulate_continuous, simulate_discrete,
    simulate_instantaneous_pair, SimConfig,
};
