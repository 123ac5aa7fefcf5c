//! Continuous-time event records, the raw form produced by the thinning
//! simulator and accepted by the binning step.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShpError};

/// A single timestamped event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_type: String,
    pub timestamp: f64,
}

/// A finished event sequence on the observation window `(0, horizon]`.
///
/// Records are ordered by timestamp, every timestamp is strictly positive,
/// and none exceeds the horizon. Events exactly at `t = 0` are rejected so
/// that each event falls into exactly one half-open bin `((k-1)*delta, k*delta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSequence {
    records: Vec<EventRecord>,
    horizon: f64,
}

impl ContinuousSequence {
    pub fn new(records: Vec<EventRecord>, horizon: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon < 0.0 {
            return Err(ShpError::InvalidConfig(format!(
                "horizon must be finite and non-negative, got {horizon}"
            )));
        }
        for (i, r) in records.iter().enumerate() {
            if !r.timestamp.is_finite() || r.timestamp <= 0.0 || r.timestamp > horizon {
                return Err(ShpError::BadTimestamp {
                    timestamp: r.timestamp,
                    horizon,
                });
            }
            if i > 0 && records[i - 1].timestamp > r.timestamp {
                return Err(ShpError::UnsortedEvents(i));
            }
        }
        Ok(Self { records, horizon })
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64) -> EventRecord {
        EventRecord {
            event_type: "a".into(),
            timestamp: t,
        }
    }

    #[test]
    fn accepts_sorted_positive_records() {
        let seq = ContinuousSequence::new(vec![rec(0.5), rec(0.5), rec(2.0)], 2.0).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.horizon(), 2.0);
    }

    #[test]
    fn rejects_time_zero() {
        let err = ContinuousSequence::new(vec![rec(0.0)], 1.0).unwrap_err();
        assert!(matches!(err, ShpError::BadTimestamp { .. }));
    }

    #[test]
    fn rejects_past_horizon_and_unsorted() {
        assert!(matches!(
            ContinuousSequence::new(vec![rec(1.5)], 1.0).unwrap_err(),
            ShpError::BadTimestamp { .. }
        ));
        assert!(matches!(
            ContinuousSequence::new(vec![rec(1.0), rec(0.5)], 1.0).unwrap_err(),
            ShpError::UnsortedEvents(1)
        ));
    }

    #[test]
    fn zero_horizon_means_empty() {
        let seq = ContinuousSequence::new(vec![], 0.0).unwrap();
        assert!(seq.is_empty());
    }
}
