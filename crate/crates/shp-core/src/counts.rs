//! Binned count matrices and the event-to-bin aggregation step.

use crate::error::{Result, ShpError};
use crate::events::ContinuousSequence;

/// A `K x |V|` matrix of event counts per time bin, together with the bin
/// width `delta` that fixes the time scale.
///
/// Bins are indexed `0..K` in code and correspond to the half-open intervals
/// `((k)*delta, (k+1)*delta]` of the underlying timeline. Columns follow the
/// declared node order. Storage is column-major: fitting walks one node's
/// history at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCounts {
    node_names: Vec<String>,
    delta: f64,
    n_bins: usize,
    /// Column-major: `data[v * n_bins + k]`.
    data: Vec<u32>,
}

impl BinnedCounts {
    /// Builds a count matrix from per-node columns.
    pub fn from_columns(
        node_names: Vec<String>,
        delta: f64,
        columns: Vec<Vec<u32>>,
    ) -> Result<Self> {
        check_delta(delta)?;
        check_names(&node_names)?;
        if columns.len() != node_names.len() {
            return Err(ShpError::DimensionMismatch(format!(
                "{} columns for {} nodes",
                columns.len(),
                node_names.len()
            )));
        }
        let n_bins = columns.first().map_or(0, Vec::len);
        for (v, col) in columns.iter().enumerate() {
            if col.len() != n_bins {
                return Err(ShpError::DimensionMismatch(format!(
                    "column {} has {} bins, expected {}",
                    node_names[v],
                    col.len(),
                    n_bins
                )));
            }
        }
        let mut data = Vec::with_capacity(n_bins * node_names.len());
        for col in &columns {
            data.extend_from_slice(col);
        }
        Ok(Self {
            node_names,
            delta,
            n_bins,
            data,
        })
    }

    /// Builds a count matrix from rows (one row per bin, one entry per node).
    pub fn from_rows(node_names: Vec<String>, delta: f64, rows: &[Vec<u32>]) -> Result<Self> {
        let n = node_names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for (k, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ShpError::DimensionMismatch(format!(
                    "row {} has {} entries for {} nodes",
                    k,
                    row.len(),
                    n
                )));
            }
            for (v, &x) in row.iter().enumerate() {
                columns[v].push(x);
            }
        }
        Self::from_columns(node_names, delta, columns)
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    /// Count for bin `k` (0-based) of node `v`.
    pub fn get(&self, k: usize, v: usize) -> u32 {
        self.data[v * self.n_bins + k]
    }

    /// One node's full history.
    pub fn column(&self, v: usize) -> &[u32] {
        &self.data[v * self.n_bins..(v + 1) * self.n_bins]
    }

    /// Total number of events across all bins and nodes.
    pub fn total(&self) -> u64 {
        self.data.iter().map(|&x| u64::from(x)).sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.node_names.iter().position(|n| n == name)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(ShpError::BadDelta(delta));
    }
    Ok(())
}

fn check_names(names: &[String]) -> Result<()> {
    for (i, a) in names.iter().enumerate() {
        if a.is_empty() {
            return Err(ShpError::InvalidConfig("empty node name".into()));
        }
        if names[..i].contains(a) {
            return Err(ShpError::InvalidConfig(format!("duplicate node name `{a}`")));
        }
    }
    Ok(())
}

/// Aggregates a continuous sequence into bin counts with width `delta`.
///
/// The number of bins is `ceil(horizon / delta)`; an event at time `t` lands
/// in bin `ceil(t / delta) - 1` (0-based), so bin `k` covers
/// `(k*delta, (k+1)*delta]`. Every event is counted exactly once. `nodes`
/// fixes the column order; an event whose type is not listed is an error.
pub fn bin_events(seq: &ContinuousSequence, delta: f64, nodes: &[String]) -> Result<BinnedCounts> {
    check_delta(delta)?;
    check_names(nodes)?;
    let n_bins = (seq.horizon() / delta).ceil() as usize;
    let mut columns = vec![vec![0u32; n_bins]; nodes.len()];
    for r in seq.records() {
        let v = nodes
            .iter()
            .position(|n| *n == r.event_type)
            .ok_or_else(|| ShpError::UnknownEventType(r.event_type.clone()))?;
        // Timestamps are validated in (0, horizon], so k lands in 0..n_bins
        // up to float rounding at the boundary; clamp for safety.
        let k = ((r.timestamp / delta).ceil() as usize).saturating_sub(1).min(n_bins - 1);
        columns[v][k] += 1;
    }
    BinnedCounts::from_columns(nodes.to_vec(), delta, columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::EventRecord;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn seq(records: &[(&str, f64)], horizon: f64) -> ContinuousSequence {
        let recs = records
            .iter()
            .map(|&(ty, t)| EventRecord {
                event_type: ty.into(),
                timestamp: t,
            })
            .collect();
        ContinuousSequence::new(recs, horizon).unwrap()
    }

    #[test]
    fn half_open_bins_put_boundary_events_in_the_lower_bin() {
        // Events at t in {0.4, 1.0, 1.05, 2.0}, delta = 1, horizon 2:
        // bins (0,1] and (1,2] -> counts [2, 2].
        let s = seq(&[("a", 0.4), ("a", 1.0), ("a", 1.05), ("a", 2.0)], 2.0);
        let c = bin_events(&s, 1.0, &names(&["a"])).unwrap();
        assert_eq!(c.n_bins(), 2);
        assert_eq!(c.column(0), &[2, 2]);
    }

    #[test]
    fn partial_last_bin_is_kept() {
        // horizon 2.5, delta 1 -> K = 3; event at 2.2 goes to the last bin.
        let s = seq(&[("a", 2.2)], 2.5);
        let c = bin_events(&s, 1.0, &names(&["a"])).unwrap();
        assert_eq!(c.n_bins(), 3);
        assert_eq!(c.column(0), &[0, 0, 1]);
    }

    #[test]
    fn unknown_event_type_is_an_error() {
        let s = seq(&[("b", 0.5)], 1.0);
        let err = bin_events(&s, 1.0, &names(&["a"])).unwrap_err();
        assert!(matches!(err, ShpError::UnknownEventType(t) if t == "b"));
    }

    #[test]
    fn zero_horizon_gives_zero_bins() {
        let s = ContinuousSequence::new(vec![], 0.0).unwrap();
        let c = bin_events(&s, 5.0, &names(&["a", "b"])).unwrap();
        assert_eq!(c.n_bins(), 0);
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn nonpositive_delta_is_rejected() {
        let s = seq(&[("a", 0.5)], 1.0);
        assert!(matches!(
            bin_events(&s, 0.0, &names(&["a"])).unwrap_err(),
            ShpError::BadDelta(_)
        ));
    }

    #[test]
    fn column_major_layout_round_trips() {
        let c = BinnedCounts::from_rows(names(&["a", "b"]), 1.0, &[vec![1, 2], vec![3, 4]])
            .unwrap();
        assert_eq!(c.get(0, 0), 1);
        assert_eq!(c.get(0, 1), 2);
        assert_eq!(c.get(1, 0), 3);
        assert_eq!(c.get(1, 1), 4);
        assert_eq!(c.column(1), &[2, 4]);
        assert_eq!(c.total(), 10);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let err =
            BinnedCounts::from_columns(names(&["a", "a"]), 1.0, vec![vec![0], vec![0]])
                .unwrap_err();
        assert!(matches!(err, ShpError::InvalidConfig(_)));
    }
}
