//! Randomised invariants over states, orders, curves, and swap sequences.

use proptest::prelude::*;
use thermocat::{
    barycentric, barycentric_inverse, beta_order, free_energy_delta, gibbs_stochastic_feasible,
    is_neighbouring, standard_formation, thermo_curve, thermomajorises, BetaOrder,
    PopulationVector, ThermalContext, TwoLevelProcess,
};

fn raw_state(d: usize) -> impl Strategy<Value = PopulationVector> {
    prop::collection::vec(1e-4..1.0f64, d)
        .prop_map(|v| PopulationVector::normalized(v).unwrap())
}

fn raw_context(d: usize) -> impl Strategy<Value = ThermalContext> {
    prop::collection::vec(0.0..2.0f64, d).prop_map(|mut e| {
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e[0] = 0.0;
        ThermalContext::from_scaled_energies(e).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curve_is_concave_and_anchored((p, ctx) in (raw_state(4), raw_context(4))) {
        let curve = thermo_curve(&p, &ctx).unwrap();
        let elbows = curve.elbows();
        let (x0, y0) = elbows[0];
        let (x1, y1) = *elbows.last().unwrap();
        prop_assert!(x0.abs() < 1e-12 && y0.abs() < 1e-12);
        prop_assert!((x1 - 1.0).abs() < 1e-9 && (y1 - 1.0).abs() < 1e-9);
        // Concavity: slopes non-increasing across consecutive segments.
        let mut prev = f64::INFINITY;
        for w in elbows.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            prop_assert!(slope <= prev + 1e-9);
            prev = slope;
        }
    }

    #[test]
    fn beta_order_sorts_ratios((p, ctx) in (raw_state(5), raw_context(5))) {
        let order = beta_order(&p, &ctx).unwrap();
        let ratios = ctx.element_ratios(&p).unwrap();
        for w in order.as_slice().windows(2) {
            prop_assert!(ratios[w[0]] >= ratios[w[1]] - 1e-12);
        }
    }

    #[test]
    fn barycentric_round_trip(p in raw_state(3)) {
        let (x, y) = barycentric(&p).unwrap();
        let back = barycentric_inverse(x, y).unwrap();
        prop_assert!(p.max_distance(&back) < 1e-12);
    }

    #[test]
    fn curve_dominance_matches_lp(
        (p, q, ctx) in (raw_state(4), raw_state(4), raw_context(4))
    ) {
        let by_curve = thermomajorises(&p, &q, &ctx).unwrap();
        let by_lp = gibbs_stochastic_feasible(&p, &q, &ctx).unwrap();
        prop_assert_eq!(by_curve, by_lp);
    }

    #[test]
    fn two_level_processes_never_raise_free_energy(
        (p, ctx, j, k, lambda) in (raw_state(4), raw_context(4), 0usize..4, 0usize..4, 0.0..=1.0f64)
    ) {
        prop_assume!(j != k);
        let proc = TwoLevelProcess::new(&ctx, j, k, lambda).unwrap();
        let q = proc.apply(&p).unwrap();
        for alpha in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            let before = free_energy_delta(alpha, &p, &ctx).unwrap();
            let after = free_energy_delta(alpha, &q, &ctx).unwrap();
            prop_assert!(after <= before + 1e-10);
        }
        // q stays reachable from p.
        prop_assert!(thermomajorises(&p, &q, &ctx).unwrap());
    }

    #[test]
    fn gibbs_is_fixed_by_any_process(
        (ctx, j, k, lambda) in (raw_context(4), 0usize..4, 0usize..4, 0.0..=1.0f64)
    ) {
        prop_assume!(j != k);
        let proc = TwoLevelProcess::new(&ctx, j, k, lambda).unwrap();
        let g = ctx.gibbs().clone();
        prop_assert!(proc.apply(&g).unwrap().max_distance(&g) < 1e-12);
    }

    #[test]
    fn standard_formation_is_neighbouring_and_hits_target(
        (p, ctx, perm) in (raw_state(4), raw_context(4), Just(()).prop_flat_map(|_| {
            prop::sample::subsequence(vec![0usize, 1, 2, 3], 4).prop_shuffle()
        }))
    ) {
        let base = beta_order(&p, &ctx).unwrap();
        let target = BetaOrder::from_perm(perm).unwrap();
        let seq = standard_formation(&ctx, &base, &target).unwrap();
        let mut cur = p.clone();
        let mut seen = Vec::new();
        for s in seq.steps() {
            prop_assert!(s.is_beta_swap());
            prop_assert!(is_neighbouring(s, &cur, &ctx).unwrap());
            prop_assert!(!seen.contains(&s.levels()));
            seen.push(s.levels());
            cur = s.apply(&cur).unwrap();
        }
        let end_order = beta_order(&cur, &ctx).unwrap();
        prop_assert_eq!(end_order.as_slice(), target.as_slice());
    }
}
