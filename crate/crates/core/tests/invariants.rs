use entconc_core::*;
use proptest::prelude::*;

fn stable_point() -> impl Strategy<Value = Cooperativities> {
    (0.0f64..60.0, 0.0f64..0.98)
        .prop_map(|(c1, frac)| Cooperativities::new(c1, frac * (1.0 + c1)).unwrap())
}

fn small_policy() -> TruncationPolicy {
    TruncationPolicy {
        max_block_dim: 60,
        ..TruncationPolicy::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn occupation_bookkeeping(coop in stable_point()) {
        let occ = occupations(&coop);
        prop_assert_eq!(occ.n2, occ.n1 + occ.nm);
        prop_assert!((0.0..1.0).contains(&occ.zeta));
        let expected = occ.n1 / (1.0 + occ.n2);
        prop_assert!((occ.zeta - expected).abs() <= 1e-12 * expected.max(1e-300));
    }

    #[test]
    fn pre_measurement_bounded(coop in stable_point()) {
        let e = pre_measurement_entanglement(&coop).unwrap().nats();
        let limit = instability_limit_entanglement(coop.c1()).nats();
        prop_assert!(e >= 0.0);
        prop_assert!(e <= limit + 1e-9);
    }

    #[test]
    fn pair_distribution_normalized(zeta in 0.0f64..0.9, q in 0usize..30) {
        let dist = PairDistribution::new(zeta, q).unwrap();
        let total: f64 = (0..3000).map(|p| pair_coeff(&dist, p)).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn schmidt_and_eigensolve_agree(zeta in 0.01f64..0.6, q in 0usize..8) {
        let policy = small_policy();
        let dist = PairDistribution::new(zeta, q).unwrap();
        let st = TwoModeLadderPure::from_distribution(&dist, 1.0, &policy);
        // A capped state is short of unit norm by its tail mass, which the
        // eigenvalue route sees and the Schmidt formula does not.
        let slack = st.tail_mass();
        let schmidt = schmidt_log_negativity(&st).unwrap().nats();
        let eig = log_negativity(&TwoModeLadderMixture::pure(st), &policy).unwrap().value.nats();
        prop_assert!((schmidt - eig).abs() < 1e-9 + slack);
    }

    #[test]
    fn blocks_symmetric_and_trace_preserving(
        zeta in 0.0f64..0.6,
        raw in prop::collection::vec(0.01f64..1.0, 1..5),
        s_min in 0usize..4,
    ) {
        let policy = small_policy();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let deficit = (1.0 - weights.iter().sum::<f64>()).max(0.0);
        let mix = TwoModeLadderMixture::from_pair_family(zeta, s_min, weights, deficit, &policy).unwrap();
        let blocks = build_pt_blocks(&mix);
        prop_assert!(blocks.iter().all(PtBlock::is_symmetric));
        let trace: f64 = blocks.iter().map(PtBlock::trace).sum();
        prop_assert!(trace <= 1.0 + 1e-12);
        prop_assert!(trace >= 1.0 - mix.trace_deficit() - 1e-12);
        let report = log_negativity(&mix, &policy).unwrap();
        prop_assert!((report.captured_trace - trace).abs() < 1e-12);
    }

    #[test]
    fn deeper_truncation_never_loses_negativity(zeta in 0.3f64..0.8, q in 0usize..3) {
        let shallow = TruncationPolicy { max_block_dim: 20, ..TruncationPolicy::default() };
        let deep = TruncationPolicy { max_block_dim: 80, ..TruncationPolicy::default() };
        let weights = vec![0.7, 0.2, 0.1];
        let a = TwoModeLadderMixture::from_pair_family(zeta, q, weights.clone(), 0.0, &shallow).unwrap();
        let b = TwoModeLadderMixture::from_pair_family(zeta, q, weights, 0.0, &deep).unwrap();
        let na = log_negativity(&a, &shallow).unwrap().negativity;
        let nb = log_negativity(&b, &deep).unwrap().negativity;
        prop_assert!(nb >= na - a.trace_deficit() - 1e-12);
    }

    #[test]
    fn g_matches_simplified_form(zeta in 0.05f64..0.9, q in 0usize..10, p1 in 0usize..30, p2 in 0usize..30) {
        let g = g_coupling(zeta, q, p1, p2).unwrap();
        prop_assert_eq!(g, g_coupling(zeta, q, p2, p1).unwrap());
        let dist = PairDistribution::new(zeta, q).unwrap();
        let (qf, a, b) = (q as f64, p1 as f64, p2 as f64);
        let alt = (pair_coeff(&dist, p1) * pair_coeff(&dist, p2)).sqrt() * (1.0 - zeta).powi(2)
            / (zeta.sqrt() * (qf + 1.0).powi(2))
            * (a + qf + 1.0) * (b + qf + 1.0)
            / ((1.0 + qf / (a + 1.0)).sqrt() + (1.0 + qf / (b + 1.0)).sqrt());
        prop_assert!(g > 0.0);
        prop_assert!((g - alt).abs() <= 1e-12 * alt.max(1e-300) + 1e-300);
    }

    #[test]
    fn outcome_probabilities_sum_to_one(coop in stable_point(), mu in 0.05f64..1.0) {
        let occ = occupations(&coop);
        let mu = DetectorEfficiency::new(mu).unwrap();
        let mut total = 0.0;
        let mut q = 0;
        // geometric with mean nm mu; the tail after K terms is r^K.
        let r = occ.nm * mu.mu() / (1.0 + occ.nm * mu.mu());
        while q < 100_000 && (q == 0 || r.powi(q as i32) > 1e-16) {
            total += imperfect_outcome_prob(&occ, mu, q);
            q += 1;
        }
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eta_residual_is_third_order(coop in stable_point(), mu in 0.9f64..1.0, q in 0usize..6) {
        let occ = occupations(&coop);
        let w = eta_weights(&occ, DetectorEfficiency::new(mu).unwrap(), q);
        let n = q as f64 + 1.0;
        for k in 0..3 {
            prop_assert!((w.exact[k] - w.closed[k]).abs() <= 1e-12);
        }
        // 1 - (1-e)^n (1 + n e + n(n+1) e^2 / 2) <= n(n+1)(n+2) e^3 / 6
        let bound = n * (n + 1.0) * (n + 2.0) / 6.0 * w.epsilon.powi(3);
        prop_assert!(w.residual() >= -1e-15);
        prop_assert!(w.residual() <= bound + 1e-15);
    }

    #[test]
    fn perturbative_orders_exact_at_unit_efficiency(coop in stable_point(), q in 0usize..10) {
        let e = perfect_entanglement(&coop, q);
        let first = first_order_entanglement(&coop, DetectorEfficiency::PERFECT, q).unwrap();
        let second = second_order_entanglement(&coop, DetectorEfficiency::PERFECT, q, OmegaMode::Half, &TruncationPolicy::default()).unwrap();
        prop_assert_eq!(first.value, e);
        prop_assert_eq!(second.value, e);
        prop_assert!(first.trusted && !first.clamped);
    }

    #[test]
    fn perfect_entanglement_increases_with_outcome(coop in stable_point(), q in 0usize..40) {
        prop_assume!(occupations(&coop).zeta > 1e-6);
        prop_assert!(perfect_entanglement(&coop, q + 1) > perfect_entanglement(&coop, q));
    }
}
