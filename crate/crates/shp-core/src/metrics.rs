//! Structure recovery metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShpError};
use crate::graph::CausalGraph;

/// Directed-edge precision/recall/F1 plus structural Hamming distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub shd: usize,
}

/// Scores an estimated graph against the ground truth.
///
/// Precision, recall, and F1 treat edges as directed; a reversed edge is
/// both a false positive and a false negative there. SHD counts unordered
/// node pairs whose edge state (absent, forward, backward, or both
/// directions) differs, so a pure reversal costs 1, and a spurious or
/// missing edge costs 1. Between two graphs free of mutual edge pairs
/// (DAGs in particular) this equals the fewest single-edge additions,
/// deletions, and reversals separating them, because pairs are independent
/// and each differing pair is fixable by one move.
///
/// Ratios with an empty denominator are 0, except when both graphs are
/// empty: total agreement, all ones.
pub fn compare_graphs(truth: &CausalGraph, estimated: &CausalGraph) -> Result<MetricReport> {
    if truth.node_names() != estimated.node_names() {
        return Err(ShpError::NodeSetMismatch(format!(
            "truth has nodes {:?}, estimate has {:?}",
            truth.node_names(),
            estimated.node_names()
        )));
    }
    if truth.edge_count() == 0 && estimated.edge_count() == 0 {
        return Ok(MetricReport {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
            shd: 0,
        });
    }

    let tp = estimated
        .edges()
        .filter(|&(u, v)| truth.has_edge(u, v))
        .count() as f64;
    let fp = estimated.edge_count() as f64 - tp;
    let fn_ = truth.edge_count() as f64 - tp;
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    let mut shd = 0;
    let n = truth.n_nodes();
    for u in 0..n {
        for v in (u + 1)..n {
            let t = (truth.has_edge(u, v), truth.has_edge(v, u));
            let e = (estimated.has_edge(u, v), estimated.has_edge(v, u));
            if t != e {
                shd += 1;
            }
        }
    }

    Ok(MetricReport {
        precision,
        recall,
        f1,
        shd,
    })
}
