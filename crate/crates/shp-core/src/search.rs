//! Penalized-likelihood structure search over DAGs.
//!
//! Greedy hill-climbing from the empty graph: each sweep scores every
//! single-edge addition, deletion, and reversal that keeps the graph
//! acyclic, applies the best strictly improving one, and stops when none
//! improves the penalized score
//!
//! ```text
//! score(G) = sum_v loglik_v(Pa_G(v)) - alpha_s * |E(G)|
//! ```
//!
//! The score separates over target columns, so a move only touches the
//! families it rewires (one for add/delete, two for a reversal), and family
//! scores are memoized across sweeps keyed by `(v, parent set)`. Candidate
//! enumeration, tie-breaking (first best in enumeration order), and the
//! parallel fit scheduling are all deterministic, so a search is a pure
//! function of `(counts, config)`.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::BinnedCounts;
use crate::error::{Result, ShpError};
use crate::estimator::{fit, fit_column, FitConfig, FitContext};
use crate::graph::CausalGraph;
use crate::params::ShpParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Per-edge penalty. `None` picks `0.5 * ln(K)`, the BIC rate for one
    /// extra parameter on `K` observations.
    pub alpha_s: Option<f64>,
    pub fit: FitConfig,
    /// Upper bound on greedy sweeps (each sweep applies at most one move).
    pub max_sweeps: usize,
    /// Fit candidate families on the rayon pool. Results are identical
    /// either way; this only trades wall-clock for cores.
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            alpha_s: None,
            fit: FitConfig::default(),
            max_sweeps: 200,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub graph: CausalGraph,
    /// Parameters refit on the winning graph.
    pub params: ShpParams,
    /// Final penalized score.
    pub score: f64,
    /// Score after the initial (empty) graph and after each applied move.
    pub score_trace: Vec<f64>,
    /// Candidate neighbors scored across all sweeps.
    pub visited: usize,
}

/// Memoized family log-likelihoods keyed by `(target, sorted parents)`.
pub struct ScoreCache {
    map: HashMap<(usize, Vec<usize>), f64>,
    fits: usize,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self {
            map: HashMap::new(),
            fits: 0,
        }
    }

    pub fn get(&self, v: usize, parents: &[usize]) -> Option<f64> {
        debug_assert!(parents.windows(2).all(|w| w[0] < w[1]));
        self.map.get(&(v, parents.to_vec())).copied()
    }

    pub fn insert(&mut self, v: usize, parents: Vec<usize>, log_lik: f64) {
        self.fits += 1;
        self.map.insert((v, parents), log_lik);
    }

    /// Number of distinct families fitted so far.
    pub fn fit_count(&self) -> usize {
        self.fits
    }
}

impl Default for ScoreCache {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

/// All single-edge moves whose application keeps the graph acyclic, in a
/// fixed order: additions by `(src, dst)`, then deletions, then reversals
/// in edge order.
fn acyclic_moves(g: &CausalGraph) -> Vec<Move> {
    let n = g.n_nodes();
    let mut moves = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || g.has_edge(u, v) || g.has_edge(v, u) {
                continue;
            }
            let mut h = g.clone();
            h.add_edge(u, v).expect("checked endpoints");
            if h.is_acyclic() {
                moves.push(Move::Add(u, v));
            }
        }
    }
    for (u, v) in g.edges() {
        moves.push(Move::Delete(u, v));
    }
    for (u, v) in g.edges() {
        let mut h = g.clone();
        h.remove_edge(u, v);
        h.add_edge(v, u).expect("checked endpoints");
        if h.is_acyclic() {
            moves.push(Move::Reverse(u, v));
        }
    }
    moves
}

fn apply_move(g: &mut CausalGraph, m: Move) {
    match m {
        Move::Add(u, v) => g.add_edge(u, v).expect("validated move"),
        Move::Delete(u, v) => {
            g.remove_edge(u, v);
        }
        Move::Reverse(u, v) => {
            g.remove_edge(u, v);
            g.add_edge(v, u).expect("validated move");
        }
    }
}

/// The acyclic neighbor graphs of `g`, in enumeration order.
pub fn neighborhood(g: &CausalGraph) -> Vec<CausalGraph> {
    acyclic_moves(g)
        .into_iter()
        .map(|m| {
            let mut h = g.clone();
            apply_move(&mut h, m);
            h
        })
        .collect()
}

fn with_parent(parents: &[usize], p: usize) -> Vec<usize> {
    let mut out = parents.to_vec();
    let pos = out.partition_point(|&q| q < p);
    out.insert(pos, p);
    out
}

fn without_parent(parents: &[usize], p: usize) -> Vec<usize> {
    parents.iter().copied().filter(|&q| q != p).collect()
}

/// Families whose scores a move needs, beyond the current ones.
fn families_for(m: Move, parents: &[Vec<usize>]) -> Vec<(usize, Vec<usize>)> {
    match m {
        Move::Add(u, v) => vec![(v, with_parent(&parents[v], u))],
        Move::Delete(u, v) => vec![(v, without_parent(&parents[v], u))],
        Move::Reverse(u, v) => vec![
            (v, without_parent(&parents[v], u)),
            (u, with_parent(&parents[u], v)),
        ],
    }
}

fn ensure_scored(
    ctx: &FitContext,
    cfg: &SearchConfig,
    cache: &mut ScoreCache,
    families: Vec<(usize, Vec<usize>)>,
) -> Result<()> {
    let mut pending = Vec::new();
    let mut seen = HashSet::new();
    for fam in families {
        if cache.get(fam.0, &fam.1).is_none() && seen.insert(fam.clone()) {
            pending.push(fam);
        }
    }
    if pending.is_empty() {
        return Ok(());
    }
    let fitted: Vec<Result<f64>> = if cfg.parallel {
        pending
            .par_iter()
            .map(|(v, parents)| Ok(fit_column(ctx, *v, parents, &cfg.fit)?.log_lik))
            .collect()
    } else {
        pending
            .iter()
            .map(|(v, parents)| Ok(fit_column(ctx, *v, parents, &cfg.fit)?.log_lik))
            .collect()
    };
    for ((v, parents), ll) in pending.into_iter().zip(fitted) {
        cache.insert(v, parents, ll?);
    }
    Ok(())
}

/// Greedy penalized-likelihood search. Starts from the empty graph and
/// returns the local optimum together with refit parameters.
pub fn hill_climb(counts: &BinnedCounts, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.fit.validate()?;
    let ctx = FitContext::new(counts, cfg.fit.beta)?;
    let alpha_s = match cfg.alpha_s {
        Some(a) if a.is_finite() && a >= 0.0 => a,
        Some(a) => {
            return Err(ShpError::InvalidConfig(format!(
                "edge penalty alpha_s must be finite and non-negative, got {a}"
            )))
        }
        None => 0.5 * (counts.n_bins() as f64).ln(),
    };

    let n = counts.n_nodes();
    let mut graph = CausalGraph::new(counts.node_names().to_vec());
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cache = ScoreCache::new();
    ensure_scored(
        &ctx,
        cfg,
        &mut cache,
        (0..n).map(|v| (v, Vec::new())).collect(),
    )?;
    let mut family_ll: Vec<f64> = (0..n)
        .map(|v| cache.get(v, &[]).expect("scored above"))
        .collect();
    let mut score: f64 = family_ll.iter().sum();
    let mut score_trace = vec![score];
    let mut visited = 0;

    for _ in 0..cfg.max_sweeps {
        let moves = acyclic_moves(&graph);
        visited += moves.len();
        let needed: Vec<(usize, Vec<usize>)> = moves
            .iter()
            .flat_map(|&m| families_for(m, &parents))
            .collect();
        ensure_scored(&ctx, cfg, &mut cache, needed)?;

        let mut best: Option<(Move, f64)> = None;
        for &m in &moves {
            let mut delta = match m {
                Move::Add(_, _) => -alpha_s,
                Move::Delete(_, _) => alpha_s,
                Move::Reverse(_, _) => 0.0,
            };
            for (v, fam) in families_for(m, &parents) {
                delta += cache.get(v, &fam).expect("scored above") - family_ll[v];
            }
            let candidate = score + delta;
            // Strict inequalities: no move on ties with the current graph,
            // and the first best candidate in enumeration order wins.
            if candidate > score && best.is_none_or(|(_, b)| candidate > b) {
                best = Some((m, candidate));
            }
        }

        match best {
            Some((m, new_score)) => {
                for (v, fam) in families_for(m, &parents) {
                    family_ll[v] = cache.get(v, &fam).expect("scored above");
                    parents[v] = fam;
                }
                apply_move(&mut graph, m);
                score = new_score;
                score_trace.push(score);
            }
            None => break,
        }
    }

    let params = fit(&graph, counts, &cfg.fit)?.params;
    Ok(SearchResult {
        graph,
        params,
        score,
        score_trace,
        visited,
    })
}

/// The no-structure baseline: fit every column against all other nodes
/// (ignoring acyclicity) and keep edges whose fitted weight clears `tau`.
/// The result is a general digraph, not necessarily a DAG.
pub fn threshold_graph(
    counts: &BinnedCounts,
    tau: f64,
    fit_cfg: &FitConfig,
) -> Result<CausalGraph> {
    if tau.is_nan() || tau < 0.0 {
        return Err(ShpError::InvalidConfig(format!(
            "threshold tau must be non-negative, got {tau}"
        )));
    }
    fit_cfg.validate()?;
    let ctx = FitContext::new(counts, fit_cfg.beta)?;
    let n = counts.n_nodes();
    let mut g = CausalGraph::new(counts.node_names().to_vec());
    for v in 0..n {
        let parents: Vec<usize> = (0..n).filter(|&u| u != v).collect();
        let col = fit_column(&ctx, v, &parents, fit_cfg)?;
        for (j, &u) in parents.iter().enumerate() {
            if col.alpha[j] > tau {
                g.add_edge(u, v)?;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::simulate_instantaneous_pair;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn zero_counts(n: usize, k: usize) -> BinnedCounts {
        let nodes = (0..n).map(|v| format!("v{v}")).collect();
        BinnedCounts::from_columns(nodes, 1.0, vec![vec![0; k]; n]).unwrap()
    }

    #[test]
    fn empty_three_node_graph_has_six_neighbors() {
        let g = CausalGraph::new(names(&["a", "b", "c"]));
        assert_eq!(neighborhood(&g).len(), 6);
    }

    #[test]
    fn chain_neighborhood_excludes_the_cycle_closer() {
        // a -> b -> c: adds {a->c} (c->a closes a cycle), deletes both
        // edges, reverses both edges.
        let g = CausalGraph::with_edges(names(&["a", "b", "c"]), [(0, 1), (1, 2)]).unwrap();
        let neighbors = neighborhood(&g);
        assert_eq!(neighbors.len(), 5);
        for h in &neighbors {
            assert!(h.is_acyclic());
        }
    }

    #[test]
    fn move_order_is_deterministic() {
        let g = CausalGraph::with_edges(names(&["a", "b", "c"]), [(0, 1)]).unwrap();
        let m1 = acyclic_moves(&g);
        let m2 = acyclic_moves(&g);
        assert_eq!(m1, m2);
        assert_eq!(
            m1,
            vec![
                Move::Add(0, 2),
                Move::Add(1, 2),
                Move::Add(2, 0),
                Move::Add(2, 1),
                Move::Delete(0, 1),
                Move::Reverse(0, 1),
            ]
        );
    }

    #[test]
    fn all_zero_data_keeps_the_empty_graph() {
        let counts = zero_counts(4, 200);
        let res = hill_climb(&counts, &SearchConfig::default()).unwrap();
        assert_eq!(res.graph.edge_count(), 0);
        assert_eq!(res.score_trace.len(), 1);
        assert!(res.visited > 0);
    }

    #[test]
    fn recovers_the_direction_of_a_strong_instantaneous_edge() {
        let counts = simulate_instantaneous_pair(0.5, 1.0, 0.1, 4000, 11).unwrap();
        let cfg = SearchConfig {
            fit: FitConfig {
                beta: f64::INFINITY,
                ..FitConfig::default()
            },
            ..SearchConfig::default()
        };
        let res = hill_climb(&counts, &cfg).unwrap();
        assert_eq!(res.graph.edge_count(), 1, "score {}", res.score);
        assert!(res.graph.has_edge(0, 1), "expected x -> y");
        // Trace must improve strictly with each applied move.
        for w in res.score_trace.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn search_is_a_pure_function_of_its_inputs() {
        let counts = simulate_instantaneous_pair(0.4, 0.8, 0.2, 1500, 3).unwrap();
        let mut cfg = SearchConfig {
            fit: FitConfig {
                beta: f64::INFINITY,
                ..FitConfig::default()
            },
            ..SearchConfig::default()
        };
        let a = hill_climb(&counts, &cfg).unwrap();
        cfg.parallel = false;
        let b = hill_climb(&counts, &cfg).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.score, b.score);
        assert_eq!(a.score_trace, b.score_trace);
        assert_eq!(a.visited, b.visited);
    }

    #[test]
    fn cache_hits_return_identical_scores_without_refitting() {
        let counts = simulate_instantaneous_pair(0.5, 1.0, 0.1, 500, 5).unwrap();
        let ctx = FitContext::new(&counts, f64::INFINITY).unwrap();
        let cfg = FitConfig {
            beta: f64::INFINITY,
            ..FitConfig::default()
        };
        let mut cache = ScoreCache::new();
        let fresh = fit_column(&ctx, 1, &[0], &cfg).unwrap().log_lik;
        cache.insert(1, vec![0], fresh);
        assert_eq!(cache.fit_count(), 1);
        assert_eq!(cache.get(1, &[0]), Some(fresh));
        // A second fit of the same family lands on exactly the same value.
        let again = fit_column(&ctx, 1, &[0], &cfg).unwrap().log_lik;
        assert_eq!(fresh, again);
        assert_eq!(cache.get(2, &[0]), None);
        assert_eq!(cache.get(1, &[]), None);
    }

    #[test]
    fn threshold_graph_keeps_only_strong_edges() {
        let counts = simulate_instantaneous_pair(0.5, 1.0, 0.1, 4000, 11).unwrap();
        let cfg = FitConfig {
            beta: f64::INFINITY,
            ..FitConfig::default()
        };
        let g = threshold_graph(&counts, 0.1, &cfg).unwrap();
        assert!(g.has_edge(0, 1), "forward edge should clear tau");
        let none = threshold_graph(&counts, f64::INFINITY, &cfg).unwrap();
        assert_eq!(none.edge_count(), 0);
    }

    #[test]
    fn score_matches_full_penalized_likelihood() {
        let counts = simulate_instantaneous_pair(0.5, 1.0, 0.1, 2000, 29).unwrap();
        let cfg = SearchConfig {
            fit: FitConfig {
                beta: f64::INFINITY,
                ..FitConfig::default()
            },
            ..SearchConfig::default()
        };
        let res = hill_climb(&counts, &cfg).unwrap();
        let alpha_s = 0.5 * (counts.n_bins() as f64).ln();
        let reference = crate::likelihood::penalized_score(
            &res.params,
            &counts,
            &res.graph,
            alpha_s,
        )
        .unwrap();
        assert!(
            (res.score - reference).abs() <= 1e-6 * reference.abs().max(1.0),
            "search score {} vs reference {reference}",
            res.score
        );
    }
}
