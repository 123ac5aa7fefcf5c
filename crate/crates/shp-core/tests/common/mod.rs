//! Naive reference implementations used to cross-check the production code:
//! every quantity is recomputed here the slow, literal way (double sums, no
//! recursions, no shared state), so agreement is meaningful.

#![allow(dead_code)]
// Index loops below mirror the double sums they implement.
#![allow(clippy::needless_range_loop)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::Discrete;
use statrs::function::gamma::ln_gamma;

use shp_core::{BinnedCounts, CausalGraph, ShpParams};

pub fn decay_of(beta: f64, delta: f64) -> f64 {
    if beta.is_infinite() {
        0.0
    } else {
        (-beta * delta).exp()
    }
}

/// `L_{v,k} = sum_{i<k} decay^{k-i} X_{v,i}` by direct double summation.
pub fn naive_lag(counts: &BinnedCounts, beta: f64) -> Vec<Vec<f64>> {
    let decay = decay_of(beta, counts.delta());
    let mut lag = vec![vec![0.0; counts.n_bins()]; counts.n_nodes()];
    for v in 0..counts.n_nodes() {
        for k in 0..counts.n_bins() {
            let mut s = 0.0;
            for i in 0..k {
                s += decay.powi((k - i) as i32) * f64::from(counts.get(i, v));
            }
            lag[v][k] = s;
        }
    }
    lag
}

/// `lambda_v(k) = mu_v + sum_s alpha_{s,v} (L_{s,k} + [s != v] X_{s,k})`,
/// assembled term by term from the naive lag.
pub fn naive_intensity(params: &ShpParams, counts: &BinnedCounts) -> Vec<Vec<f64>> {
    let n = counts.n_nodes();
    let lag = naive_lag(counts, params.beta());
    let mut lam = vec![vec![0.0; counts.n_bins()]; n];
    for v in 0..n {
        for k in 0..counts.n_bins() {
            let mut l = params.mu(v);
            for s in 0..n {
                let mut w = lag[s][k];
                if s != v {
                    w += f64::from(counts.get(k, s));
                }
                l += params.alpha(s, v) * w;
            }
            lam[v][k] = l;
        }
    }
    lam
}

/// `ln P(X = x)` for `X ~ Poisson(mean)`, delegated to statrs except for the
/// degenerate zero-mean distribution.
pub fn poisson_ln_pmf(x: u32, mean: f64) -> f64 {
    if mean == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    statrs::distribution::Poisson::new(mean)
        .unwrap()
        .ln_pmf(u64::from(x))
}

/// Total log-likelihood as a flat sum of Poisson cell pmfs.
pub fn naive_log_likelihood(params: &ShpParams, counts: &BinnedCounts) -> f64 {
    let lam = naive_intensity(params, counts);
    let mut total = 0.0;
    for v in 0..counts.n_nodes() {
        for k in 0..counts.n_bins() {
            total += poisson_ln_pmf(counts.get(k, v), lam[v][k] * counts.delta());
        }
    }
    total
}

/// One multiplicative update computed straight from the update equations,
/// with explicit per-cell weights. Mirrors nothing of the production layout.
pub fn naive_mm_step(params: &ShpParams, counts: &BinnedCounts) -> ShpParams {
    let n = counts.n_nodes();
    let n_bins = counts.n_bins();
    let delta = counts.delta();
    let lam = naive_intensity(params, counts);
    let lag = naive_lag(counts, params.beta());
    let mut out = params.clone();
    for v in 0..n {
        let ratio = |k: usize| {
            let x = f64::from(counts.get(k, v));
            if x == 0.0 {
                0.0
            } else {
                x / lam[v][k]
            }
        };
        let mut num_mu = 0.0;
        for k in 0..n_bins {
            num_mu += ratio(k);
        }
        out.set_mu(v, params.mu(v) * num_mu / (n_bins as f64 * delta));
        for s in 0..n {
            if params.alpha(s, v) == 0.0 {
                continue;
            }
            let weight = |k: usize| {
                let mut w = lag[s][k];
                if s != v {
                    w += f64::from(counts.get(k, s));
                }
                w
            };
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..n_bins {
                num += ratio(k) * weight(k);
                den += weight(k);
            }
            let next = if den == 0.0 {
                0.0
            } else {
                params.alpha(s, v) * num / (delta * den)
            };
            out.set_alpha(s, v, next);
        }
    }
    out
}

/// Sum of `ln Gamma(x + 1)` over one column, the parameter-free pmf part.
pub fn lgamma_column_sum(counts: &BinnedCounts, v: usize) -> f64 {
    counts
        .column(v)
        .iter()
        .map(|&x| ln_gamma(f64::from(x) + 1.0))
        .sum()
}

pub struct Instance {
    pub graph: CausalGraph,
    pub params: ShpParams,
    pub counts: BinnedCounts,
}

/// A random small problem: a random DAG, positive rates on its support, and
/// arbitrary (not model-distributed) small counts.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    max_nodes: usize,
    max_bins: usize,
    max_count: u32,
    beta: f64,
    self_excitation: bool,
) -> Instance {
    let n = rng.gen_range(1..=max_nodes);
    let indegree_cap = (n as f64 - 1.0) / 2.0;
    let graph = shp_core::random_dag(n, indegree_cap.min(1.2), rng.gen()).unwrap();
    let delta = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
    let mut params = ShpParams::zeros(n, beta, delta).unwrap();
    for (u, v) in graph.edges() {
        params.set_alpha(u, v, rng.gen_range(0.1..=0.6));
    }
    if self_excitation {
        for v in 0..n {
            params.set_alpha(v, v, rng.gen_range(0.05..=0.3));
        }
    }
    for v in 0..n {
        params.set_mu(v, rng.gen_range(0.05..=0.5));
    }
    let n_bins = rng.gen_range(1..=max_bins);
    let mut columns = Vec::with_capacity(n);
    for _ in 0..n {
        let mut col = Vec::with_capacity(n_bins);
        for _ in 0..n_bins {
            // Skewed toward zero, the realistic regime for binned events.
            let x = if rng.gen_bool(0.55) {
                0
            } else {
                rng.gen_range(0..=max_count)
            };
            col.push(x);
        }
        columns.push(col);
    }
    let names = (0..n).map(|v| format!("v{v}")).collect();
    let counts = BinnedCounts::from_columns(names, delta, columns).unwrap();
    Instance {
        graph,
        params,
        counts,
    }
}
