//! Ground-truth model generation and event simulation.
//!
//! Three generators cover the experimental protocols: [`simulate_continuous`]
//! draws a continuous-time Hawkes sequence by thinning (to be binned
//! afterwards, which is how instantaneous effects arise in practice),
//! [`simulate_discrete`] samples bin counts directly from the discrete model,
//! and [`simulate_instantaneous_pair`] produces the two-node same-bin-only
//! benchmark used by the identifiability experiments.

mod continuous;
mod discrete;

pub use continuous::simulate_continuous;
pub use discrete::{simulate_discrete, simulate_instantaneous_pair};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShpError};
use crate::graph::CausalGraph;
use crate::params::ShpParams;
use crate::seed::{self, STREAM_PARAMS};

/// Scenario description for synthetic data generation.
///
/// Ranges are unordered pairs and get normalized to `(min, max)` before
/// use. Baselines `mu` are rates per unit time (a node with `mu = 1e-4` and
/// `delta = 5` averages `5e-4` events per bin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_nodes: usize,
    /// Expected number of parents per node in the sampled DAG.
    pub avg_indegree: f64,
    /// Uniform sampling range for edge weights.
    pub alpha_range: (f64, f64),
    /// Uniform sampling range for baseline rates (per unit time).
    pub mu_range: (f64, f64),
    pub delta: f64,
    pub n_bins: usize,
    /// Kernel decay rate; must be finite for continuous simulation.
    pub beta: f64,
    /// Whether to also draw diagonal (lagged self-excitation) weights.
    pub self_excitation: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_nodes: 20,
            avg_indegree: 1.5,
            alpha_range: (0.3, 0.5),
            mu_range: (1e-4, 5e-4),
            delta: 5.0,
            n_bins: 20_000,
            beta: 1.0,
            self_excitation: false,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Normalizes ranges and checks feasibility, returning the cleaned copy.
    pub fn validated(&self) -> Result<Self> {
        let mut cfg = self.clone();
        if cfg.n_nodes == 0 {
            return Err(ShpError::InvalidConfig("n_nodes must be >= 1".into()));
        }
        for (name, range) in [
            ("alpha_range", &mut cfg.alpha_range),
            ("mu_range", &mut cfg.mu_range),
        ] {
            if !range.0.is_finite() || !range.1.is_finite() || range.0 < 0.0 || range.1 < 0.0
            {
                return Err(ShpError::InvalidConfig(format!(
                    "{name} must be finite and non-negative, got ({}, {})",
                    range.0, range.1
                )));
            }
            if range.0 > range.1 {
                std::mem::swap(&mut range.0, &mut range.1);
            }
        }
        if !cfg.delta.is_finite() || cfg.delta <= 0.0 {
            return Err(ShpError::BadDelta(cfg.delta));
        }
        if !cfg.beta.is_finite() || cfg.beta <= 0.0 {
            return Err(ShpError::InvalidConfig(format!(
                "beta must be positive and finite for simulation, got {}",
                cfg.beta
            )));
        }
        check_indegree(cfg.n_nodes, cfg.avg_indegree)?;
        Ok(cfg)
    }
}

fn check_indegree(n: usize, avg_indegree: f64) -> Result<()> {
    if !avg_indegree.is_finite() || avg_indegree < 0.0 {
        return Err(ShpError::InvalidConfig(format!(
            "avg_indegree must be finite and non-negative, got {avg_indegree}"
        )));
    }
    let max = (n as f64 - 1.0) / 2.0;
    if avg_indegree > max {
        return Err(ShpError::InvalidConfig(format!(
            "avg_indegree {avg_indegree} infeasible for {n} nodes (max {max})"
        )));
    }
    Ok(())
}

/// Default node names `v0..v{n-1}`.
pub fn default_node_names(n: usize) -> Vec<String> {
    (0..n).map(|v| format!("v{v}")).collect()
}

/// Samples a uniformly ordered DAG: a random permutation fixes the causal
/// order, then each forward pair becomes an edge independently with
/// probability `2 * avg_indegree / (n - 1)`, which makes the expected
/// in-degree come out at `avg_indegree`.
pub fn random_dag(n_nodes: usize, avg_indegree: f64, seed: u64) -> Result<CausalGraph> {
    if n_nodes == 0 {
        return Err(ShpError::InvalidConfig("n_nodes must be >= 1".into()));
    }
    check_indegree(n_nodes, avg_indegree)?;
    let mut rng = seed::rng(seed);
    let mut perm: Vec<usize> = (0..n_nodes).collect();
    perm.shuffle(&mut rng);
    let mut g = CausalGraph::new(default_node_names(n_nodes));
    if n_nodes > 1 {
        let p = 2.0 * avg_indegree / (n_nodes as f64 - 1.0);
        for i in 0..n_nodes {
            for j in (i + 1)..n_nodes {
                if rng.gen_bool(p) {
                    g.add_edge(perm[i], perm[j])?;
                }
            }
        }
    }
    Ok(g)
}

/// Draws edge weights and baselines for `g` from the configured ranges,
/// re-drawing everything (up to 100 attempts) until the sampled model is
/// stable. DAG weights with zero diagonal are nilpotent and always pass;
/// rejection only bites with self-excitation enabled.
pub fn sample_params(g: &CausalGraph, cfg: &SimConfig) -> Result<ShpParams> {
    let cfg = cfg.validated()?;
    if g.n_nodes() != cfg.n_nodes {
        return Err(ShpError::DimensionMismatch(format!(
            "graph over {} nodes, config says {}",
            g.n_nodes(),
            cfg.n_nodes
        )));
    }
    let mut rng = seed::rng(seed::split(cfg.seed, STREAM_PARAMS));
    let (a_lo, a_hi) = cfg.alpha_range;
    let (m_lo, m_hi) = cfg.mu_range;
    let mut last_rho = f64::NAN;
    for _ in 0..100 {
        let mut p = ShpParams::zeros(g.n_nodes(), cfg.beta, cfg.delta)?;
        for (u, v) in g.edges() {
            p.set_alpha(u, v, rng.gen_range(a_lo..=a_hi));
        }
        if cfg.self_excitation {
            for v in 0..g.n_nodes() {
                p.set_alpha(v, v, rng.gen_range(a_lo..=a_hi));
            }
        }
        for v in 0..g.n_nodes() {
            p.set_mu(v, rng.gen_range(m_lo..=m_hi));
        }
        last_rho = p.discrete_branching_radius();
        if last_rho < 1.0 {
            return Ok(p);
        }
    }
    Err(ShpError::Unstable {
        rho: last_rho,
        attempts: 100,
    })
}
