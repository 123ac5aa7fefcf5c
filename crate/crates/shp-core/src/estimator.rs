//! Minorization-maximization fitting of structural Hawkes parameters.
//!
//! The complete-data decomposition attributes each count in bin `k` of node
//! `v` to one of the additive intensity sources: the baseline, a lagged
//! count of some node, or a same-bin count of another node. Conditioned on
//! the current parameters, source `s` claims the fraction
//! `contribution_s / lambda_v(k)` of the cell (the responsibilities, which
//! sum to one). Maximizing the resulting surrogate gives closed-form
//! updates:
//!
//! ```text
//! mu_v        <- mu_v * [ sum_k X_{v,k} / lambda_v(k) ] / (K * delta)
//! alpha_{v',v} <- alpha_{v',v} * [ sum_k (X_{v,k} / lambda_v(k)) * w_{v',k} ]
//!                              / ( delta * sum_k w_{v',k} )
//! ```
//!
//! with `w_{v',k} = L_{v',k} + X_{v',k}` off the diagonal and
//! `w_{v,k} = L_{v,k}` on it (the same-bin self term does not exist). Each
//! update can only raise the log-likelihood, and because the log-likelihood
//! is concave in `(mu, alpha)` the iteration reaches the global maximum for
//! any fixed support.
//!
//! The likelihood separates over target columns, so fitting a graph is
//! fitting each node against its parent set independently; structure search
//! exploits this through [`fit_column`] and [`local_score`].

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::counts::BinnedCounts;
use crate::error::{Result, ShpError};
use crate::graph::CausalGraph;
use crate::likelihood::LagState;
use crate::params::ShpParams;

/// Knobs for the MM iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Maximum MM updates per column.
    pub max_iters: usize,
    /// Stop when successive log-likelihoods differ by at most
    /// `rel_tol * max(1, |loglik|)`.
    pub rel_tol: f64,
    /// Lower clamp for baselines; keeps every intensity strictly positive.
    pub mu_floor: f64,
    /// Starting value for excitation weights on the fitted support. The
    /// multiplicative update cannot leave zero, so this must be positive.
    pub alpha_init: f64,
    /// How baselines are initialized.
    pub mu_init: MuInit,
    /// Kernel decay rate assumed when fitting. `inf` disables all lagged
    /// terms and fits the pure same-bin model.
    #[serde(with = "crate::io::float_or_inf")]
    pub beta: f64,
    /// Whether to fit diagonal (lagged self-excitation) weights alongside
    /// the parent weights.
    pub fit_self_excitation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuInit {
    /// Start from the column's empirical rate, clamped to the floor.
    EmpiricalMean,
    /// Start every baseline at a fixed positive rate.
    Fixed(f64),
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: 1e-6,
            mu_floor: 1e-10,
            alpha_init: 0.1,
            mu_init: MuInit::EmpiricalMean,
            beta: 1.0,
            fit_self_excitation: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(ShpError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if self.rel_tol <= 0.0 || !self.rel_tol.is_finite() {
            return Err(ShpError::InvalidConfig(format!(
                "rel_tol must be positive and finite, got {}",
                self.rel_tol
            )));
        }
        if self.mu_floor <= 0.0 || !self.mu_floor.is_finite() {
            return Err(ShpError::InvalidConfig(format!(
                "mu_floor must be positive and finite, got {}",
                self.mu_floor
            )));
        }
        if self.alpha_init <= 0.0 || !self.alpha_init.is_finite() {
            return Err(ShpError::InvalidConfig(format!(
                "alpha_init must be positive and finite, got {}",
                self.alpha_init
            )));
        }
        if let MuInit::Fixed(m) = self.mu_init {
            if m <= 0.0 || !m.is_finite() {
                return Err(ShpError::InvalidConfig(format!(
                    "fixed mu_init must be positive and finite, got {m}"
                )));
            }
        }
        if self.beta <= 0.0 || self.beta.is_nan() {
            return Err(ShpError::InvalidConfig(format!(
                "beta must be positive (inf allowed), got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Result of a full-graph fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ShpParams,
    /// Total log-likelihood after 0, 1, 2, ... MM updates. Non-decreasing.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    /// MM updates applied in the slowest column.
    pub iterations: usize,
}

/// Quantities shared by every column fit on one data set: lag columns, the
/// parameter-free update denominators, and per-column constants. Building
/// this once and fitting many parent sets against it is what makes the
/// structure search affordable.
pub struct FitContext<'a> {
    counts: &'a BinnedCounts,
    lag: LagState,
    beta: f64,
    /// `sum_k (L_{v,k} + X_{v,k})` per node: off-diagonal denominator / delta.
    s_off: Vec<f64>,
    /// `sum_k L_{v,k}` per node: diagonal denominator / delta.
    s_diag: Vec<f64>,
    /// `sum_k X_{v,k}` per node.
    sum_x: Vec<f64>,
    /// `sum_k ln(X_{v,k}!)` per node.
    lgamma_sum: Vec<f64>,
    /// Bins with a non-zero count, per node.
    nz: Vec<Vec<u32>>,
}

impl<'a> FitContext<'a> {
    pub fn new(counts: &'a BinnedCounts, beta: f64) -> Result<Self> {
        if beta <= 0.0 || beta.is_nan() {
            return Err(ShpError::InvalidConfig(format!(
                "beta must be positive (inf allowed), got {beta}"
            )));
        }
        if counts.n_bins() == 0 {
            return Err(ShpError::InvalidConfig(
                "cannot fit against an empty count matrix".into(),
            ));
        }
        let n = counts.n_nodes();
        let lag = LagState::compute(counts, beta);
        let mut s_off = vec![0.0; n];
        let mut s_diag = vec![0.0; n];
        let mut sum_x = vec![0.0; n];
        let mut lgamma_sum = vec![0.0; n];
        let mut nz = vec![Vec::new(); n];
        for v in 0..n {
            let x = counts.column(v);
            let l = lag.column(v);
            for k in 0..counts.n_bins() {
                let xk = f64::from(x[k]);
                s_diag[v] += l[k];
                s_off[v] += l[k] + xk;
                if x[k] > 0 {
                    sum_x[v] += xk;
                    lgamma_sum[v] += ln_gamma(xk + 1.0);
                    nz[v].push(k as u32);
                }
            }
        }
        Ok(Self {
            counts,
            lag,
            beta,
            s_off,
            s_diag,
            sum_x,
            lgamma_sum,
            nz,
        })
    }

    pub fn counts(&self) -> &BinnedCounts {
        self.counts
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn n_bins(&self) -> usize {
        self.counts.n_bins()
    }
}

/// One column's fitted parameters.
#[derive(Debug, Clone)]
pub struct ColumnFit {
    pub mu: f64,
    /// Aligned with the sorted parent list passed to [`fit_column`].
    pub alpha: Vec<f64>,
    /// Lagged self-excitation weight (zero when not fitted).
    pub alpha_self: f64,
    pub log_lik: f64,
    /// Column log-likelihood after 0, 1, 2, ... updates.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct ColumnState {
    mu: f64,
    alpha: Vec<f64>,
    alpha_self: f64,
}

struct PassOutput {
    log_lik: f64,
    acc_mu: f64,
    acc_alpha: Vec<f64>,
    acc_self: f64,
}

/// Evaluates the column log-likelihood at the current parameters and, in
/// the same sweep, the numerator sums of the next MM update. The intensity
/// total over all bins collapses to a closed form, so only bins with events
/// are visited.
fn column_pass(
    ctx: &FitContext,
    v: usize,
    parents: &[usize],
    state: &ColumnState,
    use_diag: bool,
) -> Result<PassOutput> {
    let counts = ctx.counts;
    let delta = counts.delta();
    let k_total = ctx.n_bins() as f64;
    let x_v = counts.column(v);
    let lag_v = ctx.lag.column(v);

    let mut sum_lambda = k_total * state.mu;
    for (j, &p) in parents.iter().enumerate() {
        sum_lambda += state.alpha[j] * ctx.s_off[p];
    }
    if use_diag {
        sum_lambda += state.alpha_self * ctx.s_diag[v];
    }

    let mut log_terms = 0.0;
    let mut acc_mu = 0.0;
    let mut acc_alpha = vec![0.0; parents.len()];
    let mut acc_self = 0.0;
    for &k in &ctx.nz[v] {
        let k = k as usize;
        let mut lambda = state.mu;
        for (j, &p) in parents.iter().enumerate() {
            lambda +=
                state.alpha[j] * (ctx.lag.get(k, p) + f64::from(counts.get(k, p)));
        }
        if use_diag {
            lambda += state.alpha_self * lag_v[k];
        }
        if lambda <= 0.0 {
            return Err(ShpError::ZeroIntensity {
                node: counts.node_names()[v].clone(),
                bin: k,
            });
        }
        let xk = f64::from(x_v[k]);
        log_terms += xk * lambda.ln();
        let r = xk / lambda;
        acc_mu += r;
        for (j, &p) in parents.iter().enumerate() {
            acc_alpha[j] += r * (ctx.lag.get(k, p) + f64::from(counts.get(k, p)));
        }
        if use_diag {
            acc_self += r * lag_v[k];
        }
    }

    let log_lik =
        log_terms + ctx.sum_x[v] * delta.ln() - delta * sum_lambda - ctx.lgamma_sum[v];
    Ok(PassOutput {
        log_lik,
        acc_mu,
        acc_alpha,
        acc_self,
    })
}

/// Applies one MM update in place. Zero denominators (a source that never
/// produces weight) force the corresponding alpha to zero.
fn apply_update(
    ctx: &FitContext,
    v: usize,
    parents: &[usize],
    state: &mut ColumnState,
    use_diag: bool,
    pass: &PassOutput,
    mu_floor: f64,
) {
    let delta = ctx.counts.delta();
    let k_total = ctx.n_bins() as f64;
    state.mu = (state.mu * pass.acc_mu / (k_total * delta)).max(mu_floor);
    for (j, &p) in parents.iter().enumerate() {
        state.alpha[j] = if ctx.s_off[p] > 0.0 {
            state.alpha[j] * pass.acc_alpha[j] / (delta * ctx.s_off[p])
        } else {
            0.0
        };
    }
    if use_diag {
        state.alpha_self = if ctx.s_diag[v] > 0.0 {
            state.alpha_self * pass.acc_self / (delta * ctx.s_diag[v])
        } else {
            0.0
        };
    }
}

fn check_parents(n: usize, v: usize, parents: &[usize]) -> Result<Vec<usize>> {
    if v >= n {
        return Err(ShpError::DimensionMismatch(format!(
            "target {v} out of range for {n} nodes"
        )));
    }
    let mut sorted = parents.to_vec();
    sorted.sort_unstable();
    for (i, &p) in sorted.iter().enumerate() {
        if p >= n {
            return Err(ShpError::DimensionMismatch(format!(
                "parent {p} out of range for {n} nodes"
            )));
        }
        if p == v {
            return Err(ShpError::InvalidConfig(format!(
                "node {v} listed as its own parent"
            )));
        }
        if i > 0 && sorted[i - 1] == p {
            return Err(ShpError::InvalidConfig(format!("duplicate parent {p}")));
        }
    }
    Ok(sorted)
}

/// Fits one target column against a parent set, to convergence.
pub fn fit_column(
    ctx: &FitContext,
    v: usize,
    parents: &[usize],
    cfg: &FitConfig,
) -> Result<ColumnFit> {
    cfg.validate()?;
    if cfg.beta != ctx.beta {
        return Err(ShpError::InvalidConfig(format!(
            "fit config beta {} differs from context beta {}",
            cfg.beta, ctx.beta
        )));
    }
    let parents = check_parents(ctx.counts.n_nodes(), v, parents)?;
    let delta = ctx.counts.delta();
    let k_total = ctx.n_bins() as f64;

    let mu0 = match cfg.mu_init {
        MuInit::EmpiricalMean => (ctx.sum_x[v] / (k_total * delta)).max(cfg.mu_floor),
        MuInit::Fixed(m) => m.max(cfg.mu_floor),
    };
    // A source with no accumulated weight would see a 0/0 update; start it
    // (and keep it) at exactly zero instead.
    let use_diag = cfg.fit_self_excitation && ctx.s_diag[v] > 0.0;
    let mut state = ColumnState {
        mu: mu0,
        alpha: parents
            .iter()
            .map(|&p| if ctx.s_off[p] > 0.0 { cfg.alpha_init } else { 0.0 })
            .collect(),
        alpha_self: if use_diag { cfg.alpha_init } else { 0.0 },
    };

    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    let mut iterations = 0;
    let mut converged = false;
    let mut prev = f64::NEG_INFINITY;
    loop {
        let pass = column_pass(ctx, v, &parents, &state, use_diag)?;
        trace.push(pass.log_lik);
        if iterations > 0
            && (pass.log_lik - prev).abs() <= cfg.rel_tol * pass.log_lik.abs().max(1.0)
        {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        prev = pass.log_lik;
        apply_update(ctx, v, &parents, &mut state, use_diag, &pass, cfg.mu_floor);
        iterations += 1;
    }

    Ok(ColumnFit {
        mu: state.mu,
        alpha: state.alpha,
        alpha_self: state.alpha_self,
        log_lik: *trace.last().expect("at least one pass"),
        trace,
        iterations,
        converged,
    })
}

/// Maximized column log-likelihood minus `alpha_s` per parent: the additive
/// piece of the penalized score owned by node `v`. Scores over a fixed data
/// context are memoized by the structure search.
pub fn local_score(
    ctx: &FitContext,
    v: usize,
    parents: &[usize],
    alpha_s: f64,
    cfg: &FitConfig,
) -> Result<f64> {
    if !alpha_s.is_finite() || alpha_s < 0.0 {
        return Err(ShpError::InvalidConfig(format!(
            "edge penalty alpha_s must be finite and non-negative, got {alpha_s}"
        )));
    }
    let fit = fit_column(ctx, v, parents, cfg)?;
    Ok(fit.log_lik - alpha_s * parents.len() as f64)
}

/// Fits all columns of `counts` against the parent sets of `g`.
pub fn fit(g: &CausalGraph, counts: &BinnedCounts, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if g.n_nodes() != counts.n_nodes() {
        return Err(ShpError::DimensionMismatch(format!(
            "graph over {} nodes, counts over {}",
            g.n_nodes(),
            counts.n_nodes()
        )));
    }
    g.topological_order()?;
    let ctx = FitContext::new(counts, cfg.beta)?;
    let mut params = ShpParams::zeros(counts.n_nodes(), cfg.beta, counts.delta())?;
    let mut column_traces = Vec::with_capacity(counts.n_nodes());
    let mut iterations = 0;
    let mut converged = true;
    for v in 0..counts.n_nodes() {
        let parents = g.parents_of(v);
        let col = fit_column(&ctx, v, &parents, cfg)?;
        params.set_mu(v, col.mu);
        for (j, &p) in parents.iter().enumerate() {
            params.set_alpha(p, v, col.alpha[j]);
        }
        params.set_alpha(v, v, col.alpha_self);
        iterations = iterations.max(col.iterations);
        converged &= col.converged;
        column_traces.push(col.trace);
    }
    // Columns converge after different numbers of updates; extend each trace
    // with its final value so the total stays defined (and non-decreasing).
    let len = column_traces.iter().map(Vec::len).max().unwrap_or(0);
    let loglik_trace = (0..len)
        .map(|i| {
            column_traces
                .iter()
                .map(|t| t[i.min(t.len() - 1)])
                .sum::<f64>()
        })
        .collect();
    Ok(FitResult {
        params,
        loglik_trace,
        converged,
        iterations,
    })
}

/// One synchronized MM update of every parameter, starting from `params`.
/// Support (zero pattern) is preserved exactly.
pub fn mm_step(
    params: &ShpParams,
    counts: &BinnedCounts,
    g: &CausalGraph,
) -> Result<ShpParams> {
    params.validate()?;
    params.check_support(g)?;
    params.check_counts(counts)?;
    let ctx = FitContext::new(counts, params.beta())?;
    let mut out = params.clone();
    for v in 0..counts.n_nodes() {
        let parents = g.parents_of(v);
        let mut state = ColumnState {
            mu: params.mu(v),
            alpha: parents.iter().map(|&p| params.alpha(p, v)).collect(),
            alpha_self: params.alpha(v, v),
        };
        let pass = column_pass(&ctx, v, &parents, &state, true)?;
        apply_update(&ctx, v, &parents, &mut state, true, &pass, 0.0);
        out.set_mu(v, state.mu);
        for (j, &p) in parents.iter().enumerate() {
            out.set_alpha(p, v, state.alpha[j]);
        }
        out.set_alpha(v, v, state.alpha_self);
    }
    Ok(out)
}

/// Per-cell attribution of counts to intensity sources.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    /// `q_mu[v][k]`: share of cell `(v, k)` claimed by the baseline.
    pub q_mu: Vec<Vec<f64>>,
    /// `q_alpha[v][k]`: shares claimed by excitation, as `(src, i, q)` for
    /// source node `src` acting from bin `i` (same bin allowed off the
    /// diagonal). Zero-weight entries are omitted.
    pub q_alpha: Vec<Vec<Vec<(usize, usize, f64)>>>,
}

/// Materializes all responsibilities. Quadratic in the number of bins per
/// active source; intended for inspection and testing at small scale, not
/// for the fitting path ([`mm_step`] accumulates the same quantities in one
/// sweep without materializing them).
pub fn responsibilities(
    params: &ShpParams,
    counts: &BinnedCounts,
    g: &CausalGraph,
) -> Result<Responsibilities> {
    let lam = crate::likelihood::intensity(params, counts, g)?;
    let n = counts.n_nodes();
    let n_bins = counts.n_bins();
    let decay = params.decay();
    let mut q_mu = vec![vec![0.0; n_bins]; n];
    let mut q_alpha = vec![vec![Vec::new(); n_bins]; n];
    for v in 0..n {
        for k in 0..n_bins {
            let l = lam.get(k, v);
            if l == 0.0 {
                if counts.get(k, v) > 0 {
                    return Err(ShpError::ZeroIntensity {
                        node: counts.node_names()[v].clone(),
                        bin: k,
                    });
                }
                continue;
            }
            q_mu[v][k] = params.mu(v) / l;
            for src in 0..n {
                let a = params.alpha(src, v);
                if a == 0.0 {
                    continue;
                }
                let x = counts.column(src);
                for i in 0..=k {
                    if src == v && i == k {
                        continue;
                    }
                    if x[i] == 0 {
                        continue;
                    }
                    let w = a * decay.powi((k - i) as i32) * f64::from(x[i]);
                    if w > 0.0 {
                        q_alpha[v][k].push((src, i, w / l));
                    }
                }
            }
        }
    }
    Ok(Responsibilities { q_mu, q_alpha })
}
