use proptest::prelude::*;
use snowlab_core::lp::{
    dist_big_lp, dist_lp, indicator_dist_sq, indicator_embed, PExponent, SparseSeq, StepFunction,
};

const EXPONENTS: [f64; 6] = [0.3, 0.5, 1.0, 1.7, 2.0, 3.0];

fn arb_seq() -> impl Strategy<Value = SparseSeq> {
    proptest::collection::vec((0u64..20, -5.0f64..5.0), 0..8)
        .prop_map(|pairs| {
            SparseSeq::from_pairs(pairs.into_iter().map(|(i, v)| (i as u128, v))).unwrap()
        })
}

fn arb_step(max_cells: usize) -> impl Strategy<Value = StepFunction> {
    (
        proptest::collection::btree_set(1u32..999, 0..max_cells),
        proptest::collection::vec(-2.0f64..2.0, max_cells + 1),
    )
        .prop_map(|(cuts, values)| {
            let mut breaks = vec![0.0];
            breaks.extend(cuts.iter().map(|&c| c as f64 / 1000.0));
            breaks.push(1.0);
            let cells = breaks.len() - 1;
            StepFunction::new(breaks, values[..cells].to_vec()).unwrap()
        })
}

proptest! {
    #[test]
    fn seq_metric_axioms(x in arb_seq(), y in arb_seq(), z in arb_seq()) {
        for pv in EXPONENTS {
            let p = PExponent::new(pv).unwrap();
            let dxy = dist_lp(&x, &y, p);
            let dyx = dist_lp(&y, &x, p);
            prop_assert_eq!(dxy, dyx);
            prop_assert_eq!(dist_lp(&x, &x, p), 0.0);
            if x != y {
                prop_assert!(dxy > 0.0);
            }
            let dxz = dist_lp(&x, &z, p);
            let dzy = dist_lp(&z, &y, p);
            prop_assert!(dxy <= dxz + dzy + 1e-12 * (dxz + dzy).max(1.0));
        }
    }

    #[test]
    fn step_metric_axioms(f in arb_step(5), g in arb_step(5), h in arb_step(5)) {
        for pv in EXPONENTS {
            let p = PExponent::new(pv).unwrap();
            let dfg = dist_big_lp(&f, &g, p);
            prop_assert_eq!(dfg, dist_big_lp(&g, &f, p));
            prop_assert_eq!(dist_big_lp(&f, &f, p), 0.0);
            let dfh = dist_big_lp(&f, &h, p);
            let dhg = dist_big_lp(&h, &g, p);
            prop_assert!(dfg <= dfh + dhg + 1e-12 * (dfh + dhg).max(1.0));
        }
    }

    #[test]
    fn scalar_snowflake_relation(x in -8.0f64..8.0, y in -8.0f64..8.0) {
        // On 1-sparse sequences, d_p = d_q^(p/q) for 0 < q < p <= 1.
        let a = SparseSeq::from_pairs([(0u128, x)]).unwrap();
        let b = SparseSeq::from_pairs([(0u128, y)]).unwrap();
        for (qv, pv) in [(0.25, 0.5), (0.5, 1.0), (0.3, 0.9), (0.7, 1.0)] {
            let dp = dist_lp(&a, &b, PExponent::new(pv).unwrap());
            let dq = dist_lp(&a, &b, PExponent::new(qv).unwrap());
            prop_assert!((dp - dq.powf(pv / qv)).abs() <= 1e-12 * dp.max(1e-12));
        }
    }

    #[test]
    fn indicator_embedding_squares_l1(f in arb_step(6), g in arb_step(6)) {
        let lhs = indicator_dist_sq(&indicator_embed(&f), &indicator_embed(&g));
        let rhs = dist_big_lp(&f, &g, PExponent::new(1.0).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn indicator_values_stay_in_sign_set(f in arb_step(6)) {
        let tf = indicator_embed(&f);
        prop_assert!(tf.values.iter().flatten().all(|v| (-1..=1).contains(v)));
    }
}
