//! Likelihood evaluation against literal reference formulas: the lag
//! recursion versus the explicit geometric double sum, and the total
//! log-likelihood versus cell-by-cell Poisson pmf summation.

// Index loops below mirror the double sums they implement.
#![allow(clippy::needless_range_loop)]

mod common;

use common::{naive_intensity, naive_log_likelihood, random_instance};
use shp_core::seed;

#[test]
fn intensity_matches_double_sum_to_machine_precision() {
    let mut rng = seed::rng(21_201);
    for case in 0..100 {
        let beta = match case % 4 {
            0 => 0.7,
            1 => 1.0,
            2 => 2.5,
            _ => f64::INFINITY,
        };
        let inst = random_instance(&mut rng, 5, 200, 20, beta, case % 3 == 0);
        let lam = shp_core::intensity(&inst.params, &inst.counts, &inst.graph).unwrap();
        let reference = naive_intensity(&inst.params, &inst.counts);
        for v in 0..inst.counts.n_nodes() {
            for k in 0..inst.counts.n_bins() {
                let got = lam.get(k, v);
                let want = reference[v][k];
                let rel = (got - want).abs() / want;
                assert!(
                    rel < 1e-12,
                    "case {case}: node {v} bin {k}: {got} vs {want} (rel {rel:.3e})"
                );
            }
        }
    }
}

#[test]
fn log_likelihood_matches_poisson_pmf_summation() {
    let mut rng = seed::rng(21_202);
    for case in 0..100 {
        let beta = if case % 5 == 0 { f64::INFINITY } else { 1.3 };
        let inst = random_instance(&mut rng, 5, 50, 20, beta, case % 2 == 0);
        let got = shp_core::log_likelihood(&inst.params, &inst.counts, &inst.graph).unwrap();
        let want = naive_log_likelihood(&inst.params, &inst.counts);
        assert!(
            (got - want).abs() < 1e-9,
            "case {case}: {got} vs {want} (diff {:.3e})",
            (got - want).abs()
        );
    }
}

#[test]
fn penalized_score_subtracts_the_edge_count() {
    let mut rng = seed::rng(21_203);
    for _ in 0..20 {
        let inst = random_instance(&mut rng, 5, 30, 10, 1.0, false);
        let plain = shp_core::log_likelihood(&inst.params, &inst.counts, &inst.graph).unwrap();
        for alpha_s in [0.0, 0.5, 4.25] {
            let scored =
                shp_core::penalized_score(&inst.params, &inst.counts, &inst.graph, alpha_s)
                    .unwrap();
            let want = plain - alpha_s * inst.graph.edge_count() as f64;
            assert!((scored - want).abs() < 1e-12);
        }
    }
}
