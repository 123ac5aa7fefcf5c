//! Direct sampling of the discrete-time model.
//!
//! Because the same-bin dependency structure is a DAG, counts within one bin
//! can be drawn in topological order: once a node's parents have their
//! counts for the bin, its conditional mean is fully determined and its
//! count is one Poisson draw.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::counts::BinnedCounts;
use crate::error::{Result, ShpError};
use crate::graph::CausalGraph;
use crate::params::ShpParams;
use crate::seed;

fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> u32 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("positive mean").sample(rng) as u32
    }
}

/// Samples `n_bins` rows of counts under `params`, whose off-diagonal
/// support must sit on the acyclic graph `g`.
pub fn simulate_discrete(
    params: &ShpParams,
    g: &CausalGraph,
    n_bins: usize,
    seed_value: u64,
) -> Result<BinnedCounts> {
    params.validate()?;
    params.check_support(g)?;
    let order = g.topological_order()?;
    let radius = params.discrete_branching_radius();
    if radius >= 1.0 {
        return Err(ShpError::Unstable {
            rho: radius,
            attempts: 1,
        });
    }

    let n = params.n_nodes();
    let delta = params.delta();
    let decay = params.decay();
    let mut rng = seed::rng(seed_value);
    let mut columns = vec![vec![0u32; n_bins]; n];
    let mut lag = vec![0.0f64; n];
    let mut row = vec![0u32; n];
    for k in 0..n_bins {
        row.fill(0);
        for &v in &order {
            let mut rate = params.mu(v);
            for src in 0..n {
                let a = params.alpha(src, v);
                if a == 0.0 {
                    continue;
                }
                let same_bin = if src == v { 0.0 } else { f64::from(row[src]) };
                rate += a * (lag[src] + same_bin);
            }
            let x = poisson_draw(&mut rng, rate * delta);
            row[v] = x;
            columns[v][k] = x;
        }
        for v in 0..n {
            lag[v] = decay * (lag[v] + f64::from(row[v]));
        }
    }
    BinnedCounts::from_columns(g.node_names().to_vec(), delta, columns)
}

/// Samples `n` independent bins of the two-node same-bin-only model:
/// `X ~ Poisson(mu_x)` and `Y | X ~ Poisson(alpha * X + mu_y)`, which is the
/// thinned-sum representation `Y = sum_{i=1..X} Poisson(alpha) + Poisson(mu_y)`
/// collapsed into one conditional draw. Node names are `x` and `y`; the bin
/// width is 1, so rates are per bin.
pub fn simulate_instantaneous_pair(
    alpha: f64,
    mu_x: f64,
    mu_y: f64,
    n: usize,
    seed_value: u64,
) -> Result<BinnedCounts> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(ShpError::InvalidConfig(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    if !mu_x.is_finite() || mu_x <= 0.0 {
        return Err(ShpError::InvalidConfig(format!(
            "mu_x must be positive and finite, got {mu_x}"
        )));
    }
    if !mu_y.is_finite() || mu_y < 0.0 {
        return Err(ShpError::InvalidConfig(format!(
            "mu_y must be non-negative and finite, got {mu_y}"
        )));
    }
    if n == 0 {
        return Err(ShpError::InvalidConfig("need at least one sample".into()));
    }
    let mut rng = seed::rng(seed_value);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = poisson_draw(&mut rng, mu_x);
        let y = poisson_draw(&mut rng, alpha * f64::from(x) + mu_y);
        xs.push(x);
        ys.push(y);
    }
    BinnedCounts::from_columns(vec!["x".into(), "y".into()], 1.0, vec![xs, ys])
}
