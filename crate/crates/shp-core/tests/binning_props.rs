//! Property tests for event binning: counts are conserved, events land in
//! the half-open bin that covers them, and halving the bin width refines the
//! partition exactly (dyadic widths keep the arithmetic exact).

use proptest::prelude::*;

use shp_core::{bin_events, ContinuousSequence, EventRecord};

const HORIZON: f64 = 64.0;

fn sorted_sequence(mut times: Vec<f64>) -> ContinuousSequence {
    times.sort_by(f64::total_cmp);
    let records = times
        .into_iter()
        .enumerate()
        .map(|(i, timestamp)| EventRecord {
            event_type: if i % 2 == 0 { "a".into() } else { "b".into() },
            timestamp,
        })
        .collect();
    ContinuousSequence::new(records, HORIZON).unwrap()
}

fn nodes() -> Vec<String> {
    vec!["a".to_string(), "b".to_string()]
}

fn timestamps() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        (0.0_f64..HORIZON).prop_filter("positive", |t| *t > 0.0),
        0..300,
    )
}

proptest! {
    #[test]
    fn total_count_equals_event_count(times in timestamps(), delta in 0.01_f64..7.0) {
        let n = times.len() as u64;
        let seq = sorted_sequence(times);
        let counts = bin_events(&seq, delta, &nodes()).unwrap();
        prop_assert_eq!(counts.total(), n);
        prop_assert_eq!(counts.n_bins(), (HORIZON / delta).ceil() as usize);
    }

    #[test]
    fn events_land_in_their_covering_bin(times in timestamps(), exponent in -3_i32..3) {
        // Dyadic widths make t / delta exact, so the half-open covering
        // property holds with no rounding slack.
        let delta = 2.0_f64.powi(exponent);
        let seq = sorted_sequence(times);
        for r in seq.records() {
            let k = (r.timestamp / delta).ceil() as usize - 1;
            prop_assert!(k as f64 * delta < r.timestamp);
            prop_assert!(r.timestamp <= (k + 1) as f64 * delta);
        }
        // And the per-bin counts say the same thing in aggregate.
        let counts = bin_events(&seq, delta, &nodes()).unwrap();
        let mut expected = vec![[0_u32; 2]; counts.n_bins()];
        for r in seq.records() {
            let k = (r.timestamp / delta).ceil() as usize - 1;
            let v = usize::from(r.event_type == "b");
            expected[k][v] += 1;
        }
        for (k, cell) in expected.iter().enumerate() {
            prop_assert_eq!(counts.get(k, 0), cell[0]);
            prop_assert_eq!(counts.get(k, 1), cell[1]);
        }
    }

    #[test]
    fn halving_the_width_refines_each_bin_into_two(times in timestamps(), exponent in -2_i32..3) {
        let delta = 2.0_f64.powi(exponent);
        let seq = sorted_sequence(times);
        let coarse = bin_events(&seq, delta, &nodes()).unwrap();
        let fine = bin_events(&seq, delta / 2.0, &nodes()).unwrap();
        prop_assert_eq!(fine.n_bins(), 2 * coarse.n_bins());
        for v in 0..2 {
            for k in 0..coarse.n_bins() {
                prop_assert_eq!(
                    coarse.get(k, v),
                    fine.get(2 * k, v) + fine.get(2 * k + 1, v)
                );
            }
        }
    }
}
