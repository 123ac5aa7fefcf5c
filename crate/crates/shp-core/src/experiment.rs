//! Experiment drivers: likelihood-gap probes for the two-node
//! identifiability question, a dispersion diagnostic, and metric sweeps
//! over scenario grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::bin_events;
use crate::error::{Result, ShpError};
use crate::estimator::{fit_column, FitConfig, FitContext};
use crate::metrics::{compare_graphs, MetricReport};
use crate::search::{hill_climb, threshold_graph, SearchConfig};
use crate::seed::{split, split2, STREAM_DAG, STREAM_EVENTS, STREAM_TRIAL};
use crate::sim::{random_dag, sample_params, simulate_continuous, simulate_instantaneous_pair, SimConfig};

/// Outcome of repeated forward-vs-backward likelihood comparisons on
/// two-node same-bin data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapSummary {
    /// Per-trial normalized gaps `(loglik_{x->y} - loglik_{y->x}) / n`.
    pub gaps: Vec<f64>,
    pub mean_gap: f64,
    /// Fraction of trials with a strictly positive gap.
    pub positive_fraction: f64,
}

/// Simulates `trials` data sets from `X -> Y` with the given rates and fits
/// both orientations to each, with lagged terms disabled so the fitted model
/// is exactly the same-bin structural equation pair. A positive gap means
/// the causal orientation achieved the higher maximized likelihood.
///
/// The marginal of each node is Poisson either way round; the orientations
/// differ only through which conditional is forced to be Poisson. The gap
/// measures how strongly the data reject the Poisson shape of the
/// anticausal conditional, which grows with `alpha` and vanishes as
/// `alpha -> 0`.
pub fn bivariate_gap(
    alpha: f64,
    mu_x: f64,
    mu_y: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<GapSummary> {
    if trials == 0 {
        return Err(ShpError::InvalidConfig("need at least one trial".into()));
    }
    let cfg = FitConfig {
        beta: f64::INFINITY,
        ..FitConfig::default()
    };
    let gaps: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let counts =
                simulate_instantaneous_pair(alpha, mu_x, mu_y, n, split2(seed, STREAM_TRIAL, t as u64))?;
            let ctx = FitContext::new(&counts, cfg.beta)?;
            // Forward: x root, y given x. Backward: y root, x given y.
            let forward = fit_column(&ctx, 0, &[], &cfg)?.log_lik
                + fit_column(&ctx, 1, &[0], &cfg)?.log_lik;
            let backward = fit_column(&ctx, 1, &[], &cfg)?.log_lik
                + fit_column(&ctx, 0, &[1], &cfg)?.log_lik;
            Ok((forward - backward) / n as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let positive = gaps.iter().filter(|&&g| g > 0.0).count();
    Ok(GapSummary {
        positive_fraction: positive as f64 / gaps.len() as f64,
        mean_gap,
        gaps,
    })
}

/// Dispersion indexes (variance over mean) observed on one simulated
/// two-node data set, against the closed form for the child.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionCheck {
    /// Observed index of the root column; Poisson predicts 1.
    pub index_x: f64,
    /// Observed index of the child column.
    pub index_y: f64,
    /// Predicted child index `1 + mu_x * alpha^2 / (mu_x * alpha + mu_y)`.
    pub index_y_expected: f64,
}

/// The child of a same-bin edge is a Poisson mixture, hence overdispersed:
/// `Var(Y) = E[alpha X + mu_y] + Var(alpha X) = E[Y] + alpha^2 mu_x`. The
/// asymmetry between the two columns' dispersion is the finger-print that
/// makes the directions distinguishable.
pub fn dispersion_check(
    alpha: f64,
    mu_x: f64,
    mu_y: f64,
    n: usize,
    seed: u64,
) -> Result<DispersionCheck> {
    if n < 2 {
        return Err(ShpError::InvalidConfig("need at least two samples".into()));
    }
    let counts = simulate_instantaneous_pair(alpha, mu_x, mu_y, n, seed)?;
    Ok(DispersionCheck {
        index_x: dispersion_index(counts.column(0)),
        index_y: dispersion_index(counts.column(1)),
        index_y_expected: 1.0 + mu_x * alpha * alpha / (mu_x * alpha + mu_y),
    })
}

fn dispersion_index(column: &[u32]) -> f64 {
    let n = column.len() as f64;
    let mean = column.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
    let ss = column
        .iter()
        .map(|&x| {
            let d = f64::from(x) - mean;
            d * d
        })
        .sum::<f64>();
    let var = ss / (n - 1.0);
    var / mean
}

/// Which scenario knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParameter {
    NBins,
    AvgIndegree,
    Delta,
    Beta,
    /// Multiplies both ends of the alpha range.
    AlphaScale,
    /// Multiplies both ends of the mu range.
    MuScale,
}

impl SweptParameter {
    fn apply(self, base: &SimConfig, value: f64) -> Result<SimConfig> {
        let mut cfg = base.clone();
        match self {
            SweptParameter::NBins => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(ShpError::InvalidConfig(format!(
                        "n_bins sweep values must be positive integers, got {value}"
                    )));
                }
                cfg.n_bins = value as usize;
            }
            SweptParameter::AvgIndegree => cfg.avg_indegree = value,
            SweptParameter::Delta => cfg.delta = value,
            SweptParameter::Beta => cfg.beta = value,
            SweptParameter::AlphaScale => {
                cfg.alpha_range = (cfg.alpha_range.0 * value, cfg.alpha_range.1 * value);
            }
            SweptParameter::MuScale => {
                cfg.mu_range = (cfg.mu_range.0 * value, cfg.mu_range.1 * value);
            }
        }
        Ok(cfg)
    }
}

/// A sweep: one varying parameter, a base scenario, and a repeat count per
/// value. Each repeat simulates a fresh model and data set, runs the
/// structure search, and optionally the thresholding baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
    #[serde(default)]
    pub base: SimConfig,
    pub n_repeats: usize,
    #[serde(default)]
    pub search: SearchConfig,
    /// When set, also fit the no-structure baseline per cell and keep edges
    /// with fitted weight above this threshold.
    #[serde(default)]
    pub baseline_tau: Option<f64>,
}

/// One (value, repeat) cell of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub value: f64,
    pub value_index: usize,
    pub repeat: usize,
    pub seed: u64,
    pub true_edges: Option<usize>,
    pub estimated_edges: Option<usize>,
    pub metrics: Option<MetricReport>,
    pub baseline_metrics: Option<MetricReport>,
    /// Failure description when the cell could not be completed.
    pub error: Option<String>,
}

/// Aggregates over the completed repeats of one swept value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValueSummary {
    pub value: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_shd: f64,
    pub mean_baseline_f1: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub parameter: SweptParameter,
    pub cells: Vec<CellRecord>,
    pub summaries: Vec<ValueSummary>,
}

fn run_cell(spec: &SweepSpec, value_index: usize, repeat: usize) -> CellRecord {
    let value = spec.values[value_index];
    let cell_seed = split2(
        spec.base.seed,
        STREAM_TRIAL,
        ((value_index as u64) << 32) | repeat as u64,
    );
    let mut record = CellRecord {
        value,
        value_index,
        repeat,
        seed: cell_seed,
        true_edges: None,
        estimated_edges: None,
        metrics: None,
        baseline_metrics: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let mut cfg = spec.parameter.apply(&spec.base, value)?;
        cfg.seed = cell_seed;
        let cfg = cfg.validated()?;
        let truth = random_dag(cfg.n_nodes, cfg.avg_indegree, split(cell_seed, STREAM_DAG))?;
        let params = sample_params(&truth, &cfg)?;
        let horizon = cfg.n_bins as f64 * cfg.delta;
        let seq = simulate_continuous(&params, &truth, horizon, split(cell_seed, STREAM_EVENTS))?;
        let counts = bin_events(&seq, cfg.delta, truth.node_names())?;
        let result = hill_climb(&counts, &spec.search)?;
        record.true_edges = Some(truth.edge_count());
        record.estimated_edges = Some(result.graph.edge_count());
        record.metrics = Some(compare_graphs(&truth, &result.graph)?);
        if let Some(tau) = spec.baseline_tau {
            let baseline = threshold_graph(&counts, tau, &spec.search.fit)?;
            record.baseline_metrics = Some(compare_graphs(&truth, &baseline)?);
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    record
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Runs every cell of the sweep (in parallel; failures are recorded per
/// cell, not fatal) and aggregates per swept value.
pub fn run_sweep(spec: &SweepSpec) -> Result<ExperimentReport> {
    if spec.values.is_empty() {
        return Err(ShpError::InvalidConfig("sweep needs at least one value".into()));
    }
    if spec.n_repeats == 0 {
        return Err(ShpError::InvalidConfig("n_repeats must be >= 1".into()));
    }
    spec.search.fit.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|vi| (0..spec.n_repeats).map(move |r| (vi, r)))
        .collect();
    let cells: Vec<CellRecord> = jobs
        .par_iter()
        .map(|&(vi, r)| run_cell(spec, vi, r))
        .collect();

    let summaries = (0..spec.values.len())
        .map(|vi| {
            let ok: Vec<&CellRecord> = cells
                .iter()
                .filter(|c| c.value_index == vi && c.metrics.is_some())
                .collect();
            let n_failed = spec.n_repeats - ok.len();
            let f1s: Vec<f64> = ok.iter().map(|c| c.metrics.as_ref().unwrap().f1).collect();
            let baseline_f1s: Vec<f64> = ok
                .iter()
                .filter_map(|c| c.baseline_metrics.as_ref().map(|m| m.f1))
                .collect();
            ValueSummary {
                value: spec.values[vi],
                n_ok: ok.len(),
                n_failed,
                mean_f1: mean(f1s.iter().copied()),
                std_f1: std_dev(&f1s),
                mean_precision: mean(ok.iter().map(|c| c.metrics.as_ref().unwrap().precision)),
                mean_recall: mean(ok.iter().map(|c| c.metrics.as_ref().unwrap().recall)),
                mean_shd: mean(ok.iter().map(|c| c.metrics.as_ref().unwrap().shd as f64)),
                mean_baseline_f1: if baseline_f1s.is_empty() {
                    None
                } else {
                    Some(mean(baseline_f1s.iter().copied()))
                },
            }
        })
        .collect();

    Ok(ExperimentReport {
        parameter: spec.parameter,
        cells,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_alpha_gives_consistently_positive_gaps() {
        let s = bivariate_gap(0.5, 1.0, 0.1, 4000, 10, 42).unwrap();
        assert_eq!(s.gaps.len(), 10);
        assert!(
            s.positive_fraction >= 0.9,
            "positive fraction {}",
            s.positive_fraction
        );
        assert!(s.mean_gap > 0.0);
    }

    #[test]
    fn gap_computation_is_deterministic() {
        let a = bivariate_gap(0.3, 1.0, 0.2, 1000, 5, 7).unwrap();
        let b = bivariate_gap(0.3, 1.0, 0.2, 1000, 5, 7).unwrap();
        assert_eq!(a.gaps, b.gaps);
    }

    #[test]
    fn dispersion_check_matches_theory_at_scale() {
        let d = dispersion_check(0.5, 1.0, 0.1, 100_000, 13).unwrap();
        assert!((d.index_y_expected - 1.0 - 0.25 / 0.6).abs() < 1e-12);
        assert!(
            (d.index_y - d.index_y_expected).abs() / d.index_y_expected < 0.05,
            "index_y = {}, expected {}",
            d.index_y,
            d.index_y_expected
        );
        assert!((d.index_x - 1.0).abs() < 0.03, "index_x = {}", d.index_x);
    }

    #[test]
    fn sweep_records_every_cell_and_summarizes() {
        let spec = SweepSpec {
            parameter: SweptParameter::NBins,
            values: vec![400.0, 800.0],
            base: SimConfig {
                n_nodes: 4,
                avg_indegree: 1.0,
                mu_range: (0.02, 0.05),
                delta: 2.0,
                seed: 5,
                ..SimConfig::default()
            },
            n_repeats: 2,
            search: SearchConfig::default(),
            baseline_tau: Some(0.1),
        };
        let report = run_sweep(&spec).unwrap();
        assert_eq!(report.cells.len(), 4);
        assert_eq!(report.summaries.len(), 2);
        for cell in &report.cells {
            assert!(cell.error.is_none(), "cell failed: {:?}", cell.error);
            assert!(cell.metrics.is_some());
            assert!(cell.baseline_metrics.is_some());
        }
        for s in &report.summaries {
            assert_eq!(s.n_ok, 2);
            assert!(s.mean_baseline_f1.is_some());
        }
        // Cell seeds must all differ.
        let mut seeds: Vec<u64> = report.cells.iter().map(|c| c.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 4);
    }

    #[test]
    fn sweep_reports_per_cell_failures_without_aborting() {
        // avg_indegree 3 is infeasible for 4 nodes; every cell fails.
        let spec = SweepSpec {
            parameter: SweptParameter::AvgIndegree,
            values: vec![3.0],
            base: SimConfig {
                n_nodes: 4,
                n_bins: 100,
                seed: 1,
                ..SimConfig::default()
            },
            n_repeats: 2,
            search: SearchConfig::default(),
            baseline_tau: None,
        };
        let report = run_sweep(&spec).unwrap();
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            assert!(cell.error.is_some());
            assert!(cell.metrics.is_none());
        }
        assert_eq!(report.summaries[0].n_ok, 0);
        assert_eq!(report.summaries[0].n_failed, 2);
    }
}
