//! Continuous-time Hawkes simulation by thinning (Ogata 1981).
//!
//! Each event of type `v'` at time `s` adds `alpha_{v',v} * beta *
//! exp(-beta * (t - s))` to the intensity of `v` for `t > s`. The kernel
//! integrates to one, so `alpha_{v',v}` is the expected number of direct
//! offspring of type `v` per `v'` event, matching the branching reading of
//! the binned model after aggregation.
//!
//! Between events every excitation term decays, so the total intensity
//! evaluated just after the latest event bounds the intensity until the next
//! one. Proposals come from an exponential clock at that bound; each is
//! accepted with probability `total(t) / bound` and assigned a type
//! proportionally to the per-type intensities. One uniform draw per proposal
//! handles both decisions.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Result, ShpError};
use crate::events::{ContinuousSequence, EventRecord};
use crate::graph::CausalGraph;
use crate::params::ShpParams;
use crate::seed;

pub fn simulate_continuous(
    params: &ShpParams,
    g: &CausalGraph,
    horizon: f64,
    seed_value: u64,
) -> Result<ContinuousSequence> {
    params.validate()?;
    params.check_support(g)?;
    if !params.beta().is_finite() {
        return Err(ShpError::InvalidConfig(
            "continuous simulation needs a finite kernel decay".into(),
        ));
    }
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(ShpError::InvalidConfig(format!(
            "horizon must be finite and non-negative, got {horizon}"
        )));
    }
    let rho = params.spectral_radius();
    if rho >= 1.0 {
        return Err(ShpError::Unstable { rho, attempts: 1 });
    }

    let n = params.n_nodes();
    let beta = params.beta();
    let mut rng = seed::rng(seed_value);
    // Per-source decayed kernel sums S_j(t); lambda_v = mu_v + sum_j a_jv S_j.
    let mut s = vec![0.0f64; n];
    let mut t = 0.0f64;
    let mut events: Vec<(f64, usize)> = Vec::new();
    let mu_total: f64 = (0..n).map(|v| params.mu(v)).sum();

    loop {
        // Upper bound on total intensity from `t` onward.
        let mut bound = mu_total;
        for j in 0..n {
            if s[j] > 0.0 {
                let a_out: f64 = (0..n).map(|v| params.alpha(j, v)).sum();
                bound += a_out * s[j];
            }
        }
        if bound <= 0.0 {
            break;
        }
        let dt = Exp::new(bound).expect("bound > 0").sample(&mut rng);
        let proposal = t + dt;
        if proposal > horizon {
            break;
        }
        // Decay the excitation state to the proposal time.
        if proposal > t {
            let f = (-beta * (proposal - t)).exp();
            for sj in &mut s {
                *sj *= f;
            }
        }
        t = proposal;
        if t <= 0.0 {
            // An exponential step of exactly zero at the origin would place
            // an event at t = 0, outside the (0, horizon] window.
            continue;
        }
        let mut lambda = vec![0.0f64; n];
        let mut total = 0.0;
        for v in 0..n {
            let mut l = params.mu(v);
            for j in 0..n {
                if s[j] > 0.0 {
                    l += params.alpha(j, v) * s[j];
                }
            }
            lambda[v] = l;
            total += l;
        }
        // One uniform decides acceptance and, on acceptance, the type:
        // u * bound is uniform on (0, bound); it falls below `total` with
        // the thinning probability, and its position within the per-type
        // cumulative sums picks v proportionally to lambda_v.
        let u: f64 = rng.gen::<f64>() * bound;
        if u < total {
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (v, &l) in lambda.iter().enumerate() {
                acc += l;
                if u < acc {
                    chosen = v;
                    break;
                }
            }
            events.push((t, chosen));
            s[chosen] += beta;
        }
    }

    let records = events
        .into_iter()
        .map(|(timestamp, v)| EventRecord {
            event_type: g.node_names()[v].clone(),
            timestamp,
        })
        .collect();
    ContinuousSequence::new(records, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::default_node_names;

    fn pair() -> (ShpParams, CausalGraph) {
        let g = CausalGraph::with_edges(default_node_names(2), [(0, 1)]).unwrap();
        let mut p = ShpParams::zeros(2, 1.0, 1.0).unwrap();
        p.set_alpha(0, 1, 0.5);
        p.set_mu(0, 0.2);
        p.set_mu(1, 0.05);
        (p, g)
    }

    #[test]
    fn events_stay_inside_the_window_and_sorted() {
        let (p, g) = pair();
        let seq = simulate_continuous(&p, &g, 500.0, 42).unwrap();
        assert!(!seq.is_empty());
        let mut last = 0.0;
        for r in seq.records() {
            assert!(r.timestamp > 0.0 && r.timestamp <= 500.0);
            assert!(r.timestamp >= last);
            last = r.timestamp;
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let (p, g) = pair();
        let a = simulate_continuous(&p, &g, 200.0, 7).unwrap();
        let b = simulate_continuous(&p, &g, 200.0, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_continuous(&p, &g, 200.0, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_horizon_and_zero_rates_give_empty_sequences() {
        let (p, g) = pair();
        assert!(simulate_continuous(&p, &g, 0.0, 1).unwrap().is_empty());
        let silent = ShpParams::zeros(2, 1.0, 1.0).unwrap();
        assert!(simulate_continuous(&silent, &g, 100.0, 1).unwrap().is_empty());
    }

    #[test]
    fn infinite_beta_is_rejected() {
        let g = CausalGraph::new(default_node_names(1));
        let p = ShpParams::zeros(1, f64::INFINITY, 1.0).unwrap();
        assert!(simulate_continuous(&p, &g, 10.0, 0).is_err());
    }

    #[test]
    fn unstable_self_excitation_is_rejected() {
        let g = CausalGraph::new(default_node_names(1));
        let mut p = ShpParams::zeros(1, 1.0, 1.0).unwrap();
        p.set_alpha(0, 0, 1.1);
        p.set_mu(0, 0.1);
        assert!(matches!(
            simulate_continuous(&p, &g, 10.0, 0).unwrap_err(),
            ShpError::Unstable { .. }
        ));
    }

    #[test]
    fn isolated_node_count_is_close_to_poisson_mean() {
        // mu = 0.2 over T = 5000 -> about 1000 events; 5 sigma is ~160.
        let g = CausalGraph::new(default_node_names(1));
        let mut p = ShpParams::zeros(1, 1.0, 1.0).unwrap();
        p.set_mu(0, 0.2);
        let seq = simulate_continuous(&p, &g, 5000.0, 3).unwrap();
        let n = seq.len() as f64;
        assert!((n - 1000.0).abs() < 160.0, "count = {n}");
    }
}
