//! Model parameters for a structural Hawkes process.

use serde::{Deserialize, Serialize};

use crate::counts::BinnedCounts;
use crate::error::{Result, ShpError};
use crate::graph::CausalGraph;

/// Full parameterization of a structural Hawkes process over `n` nodes.
///
/// `alpha[src][dst]` scales the influence of `src` counts on the intensity
/// of `dst`; off-diagonal entries act both lagged and within the same bin,
/// the diagonal acts lagged only. `mu` are baseline rates per unit time, so
/// an isolated node produces `mu * delta` events per bin in expectation.
/// `beta` is the decay rate of the excitation kernel `exp(-beta * t)`;
/// `beta = +inf` is accepted and switches every lagged term off, leaving the
/// pure same-bin model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShpParams {
    n: usize,
    /// Row-major: `alpha[src * n + dst]`.
    alpha: Vec<f64>,
    mu: Vec<f64>,
    #[serde(with = "crate::io::float_or_inf")]
    beta: f64,
    delta: f64,
}

impl ShpParams {
    /// All-zero rates with the given kernel decay and bin width.
    pub fn zeros(n: usize, beta: f64, delta: f64) -> Result<Self> {
        if beta <= 0.0 || beta.is_nan() {
            return Err(ShpError::InvalidConfig(format!(
                "kernel decay beta must be positive, got {beta}"
            )));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(ShpError::BadDelta(delta));
        }
        Ok(Self {
            n,
            alpha: vec![0.0; n * n],
            mu: vec![0.0; n],
            beta,
            delta,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn alpha(&self, src: usize, dst: usize) -> f64 {
        self.alpha[src * self.n + dst]
    }

    pub fn set_alpha(&mut self, src: usize, dst: usize, value: f64) {
        self.alpha[src * self.n + dst] = value;
    }

    pub fn mu(&self, v: usize) -> f64 {
        self.mu[v]
    }

    pub fn set_mu(&mut self, v: usize, value: f64) {
        self.mu[v] = value;
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// One-bin decay factor `exp(-beta * delta)`; zero when `beta = +inf`.
    pub fn decay(&self) -> f64 {
        if self.beta.is_infinite() {
            0.0
        } else {
            (-self.beta * self.delta).exp()
        }
    }

    /// Checks rates are finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        for (i, &a) in self.alpha.iter().enumerate() {
            if !a.is_finite() || a < 0.0 {
                return Err(ShpError::InvalidConfig(format!(
                    "alpha[{}][{}] = {a} must be finite and non-negative",
                    i / self.n,
                    i % self.n
                )));
            }
        }
        for (v, &m) in self.mu.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(ShpError::InvalidConfig(format!(
                    "mu[{v}] = {m} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }

    /// Checks every non-zero off-diagonal `alpha` sits on an edge of `g` and
    /// that dimensions agree. Diagonal entries are unconstrained by `g`.
    pub fn check_support(&self, g: &CausalGraph) -> Result<()> {
        if g.n_nodes() != self.n {
            return Err(ShpError::DimensionMismatch(format!(
                "params over {} nodes, graph over {}",
                self.n,
                g.n_nodes()
            )));
        }
        for src in 0..self.n {
            for dst in 0..self.n {
                if src != dst && self.alpha(src, dst) != 0.0 && !g.has_edge(src, dst) {
                    return Err(ShpError::SupportViolation {
                        src: g.node_names()[src].clone(),
                        dst: g.node_names()[dst].clone(),
                        value: self.alpha(src, dst),
                    });
                }
            }
        }
        Ok(())
    }

    /// Checks this parameterization matches a count matrix (node count and
    /// bin width).
    pub fn check_counts(&self, counts: &BinnedCounts) -> Result<()> {
        if counts.n_nodes() != self.n {
            return Err(ShpError::DimensionMismatch(format!(
                "params over {} nodes, counts over {}",
                self.n,
                counts.n_nodes()
            )));
        }
        if counts.delta() != self.delta {
            return Err(ShpError::DimensionMismatch(format!(
                "params delta {} vs counts delta {}",
                self.delta,
                counts.delta()
            )));
        }
        Ok(())
    }

    /// Spectral radius of the branching matrix `alpha`, by power iteration.
    /// Zero for any DAG support with zero diagonal (nilpotent matrix).
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.alpha, self.n)
    }

    /// Expected total offspring per event in the *binned* process: a parent
    /// event contributes `alpha * delta` same-bin offspring plus the whole
    /// discounted lagged tail, which sums to `alpha * delta * decay / (1 - decay)`.
    /// Stability of the fixed-point count equations needs
    /// `rho(alpha) * delta / (1 - decay) < 1`.
    pub fn discrete_branching_radius(&self) -> f64 {
        let decay = self.decay();
        self.spectral_radius() * self.delta / (1.0 - decay)
    }
}

fn apply(m: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let xi = x[i];
        if xi != 0.0 {
            for j in 0..n {
                y[j] += m[i * n + j] * xi;
            }
        }
    }
    y
}

/// Perron root of a non-negative `n x n` matrix (row-major) by power
/// iteration. Nilpotent supports (DAGs with zero diagonal) are detected
/// exactly: their iterates vanish within `n` multiplies. Everything else is
/// iterated as `m + I`, whose positive diagonal breaks the periodicity that
/// makes plain power iteration oscillate on cycle-structured matrices; the
/// shift is subtracted at the end.
pub(crate) fn spectral_radius(m: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0; n];
    for _ in 0..n {
        x = apply(m, n, &x);
        let norm = x.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if norm == 0.0 {
            return 0.0;
        }
        for v in &mut x {
            *v /= norm;
        }
    }
    let mut x = vec![1.0; n];
    let mut rho = 0.0;
    for _ in 0..300 {
        let mut y = apply(m, n, &x);
        for (yj, xj) in y.iter_mut().zip(&x) {
            *yj += xj;
        }
        let norm = y.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        rho = norm;
        for yj in &mut y {
            *yj /= norm;
        }
        x = y;
    }
    (rho - 1.0).max(0.0)
}
