//! The closed-form transport distances must agree with an independent
//! min-cost-flow solver and satisfy the metric axioms.

use deident_core::dist::{emd, DiscreteDistribution, GroundDistance};
use deident_testkit::{discrete_metric_costs, flow_emd, unit_spacing_costs};
use proptest::prelude::*;

const TOLERANCE: f64 = 1e-9;

fn arb_masses(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, n).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    })
}

fn dist(masses: Vec<f64>) -> DiscreteDistribution {
    let support = (0..masses.len() as u8).collect();
    DiscreteDistribution::new(support, masses).expect("normalized masses")
}

fn costs_for(ground: GroundDistance, n: usize) -> Vec<Vec<f64>> {
    match ground {
        // On support {0, 1} the absolute gap equals unit spacing.
        GroundDistance::Binary | GroundDistance::Ordinal => unit_spacing_costs(n),
        GroundDistance::Uniform => discrete_metric_costs(n),
    }
}

proptest! {
    #[test]
    fn binary_matches_flow(p in arb_masses(2), q in arb_masses(2)) {
        let (dp, dq) = (dist(p.clone()), dist(q.clone()));
        let fast = emd(&dp, &dq, GroundDistance::Binary).unwrap();
        let slow = flow_emd(&p, &q, &costs_for(GroundDistance::Binary, 2));
        prop_assert!((fast - slow).abs() < TOLERANCE, "{fast} vs {slow}");
    }

    #[test]
    fn uniform_matches_flow(
        (p, q) in (2..8usize).prop_flat_map(|n| (arb_masses(n), arb_masses(n)))
    ) {
        let n = p.len();
        let (dp, dq) = (dist(p.clone()), dist(q.clone()));
        let fast = emd(&dp, &dq, GroundDistance::Uniform).unwrap();
        let slow = flow_emd(&p, &q, &costs_for(GroundDistance::Uniform, n));
        prop_assert!((fast - slow).abs() < TOLERANCE, "{fast} vs {slow}");
    }

    #[test]
    fn ordinal_matches_flow_n3(p in arb_masses(3), q in arb_masses(3)) {
        let (dp, dq) = (dist(p.clone()), dist(q.clone()));
        let fast = emd(&dp, &dq, GroundDistance::Ordinal).unwrap();
        let slow = flow_emd(&p, &q, &unit_spacing_costs(3));
        prop_assert!((fast - slow).abs() < TOLERANCE, "{fast} vs {slow}");
    }

    #[test]
    fn ordinal_matches_flow_n6(p in arb_masses(6), q in arb_masses(6)) {
        let (dp, dq) = (dist(p.clone()), dist(q.clone()));
        let fast = emd(&dp, &dq, GroundDistance::Ordinal).unwrap();
        let slow = flow_emd(&p, &q, &unit_spacing_costs(6));
        prop_assert!((fast - slow).abs() < TOLERANCE, "{fast} vs {slow}");
    }

    #[test]
    fn metric_axioms_hold(p in arb_masses(5), q in arb_masses(5), r in arb_masses(5)) {
        for ground in [GroundDistance::Uniform, GroundDistance::Ordinal] {
            let (dp, dq, dr) = (dist(p.clone()), dist(q.clone()), dist(r.clone()));
            let pq = emd(&dp, &dq, ground).unwrap();
            let qp = emd(&dq, &dp, ground).unwrap();
            let pp = emd(&dp, &dp, ground).unwrap();
            let pr = emd(&dp, &dr, ground).unwrap();
            let rq = emd(&dr, &dq, ground).unwrap();
            prop_assert!(pq >= 0.0);
            prop_assert!((pq - qp).abs() < 1e-12, "symmetry: {pq} vs {qp}");
            prop_assert!(pp.abs() < 1e-12, "self distance {pp}");
            prop_assert!(pq <= pr + rq + TOLERANCE, "triangle: {pq} > {pr} + {rq}");
        }
    }
}
