use proptest::prelude::*;
use snowlab_core::extreal::ExtReal;
use snowlab_core::metric::{distortion, moduli, FiniteMetricSpace, PointMap, Validity};

/// Off-diagonal entries in [1, 2] always satisfy the triangle inequality.
#[allow(clippy::needless_range_loop)]
fn arb_space(n: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    proptest::collection::vec(1.0f64..2.0, n * (n - 1) / 2).prop_map(move |vals| {
        let mut rows = vec![vec![0.0; n]; n];
        let mut it = vals.into_iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = it.next().unwrap();
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        FiniteMetricSpace::validate(&rows, Validity::Metric).unwrap()
    })
}

fn arb_permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just(()).prop_perturb(move |_, mut rng| {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            p.swap(i, j);
        }
        p
    })
}

proptest! {
    #[test]
    fn snowflake_composes_multiplicatively(
        m in arb_space(6),
        s1 in 0.05f64..1.0,
        s2 in 0.05f64..1.0,
    ) {
        let twice = m.snowflake(s1).unwrap().snowflake(s2).unwrap();
        let once = m.snowflake(s1 * s2).unwrap();
        for (ra, rb) in twice.rows().iter().zip(once.rows()) {
            for (a, b) in ra.iter().zip(rb) {
                prop_assert!((a - b).abs() <= 4e-15 * b.abs());
            }
        }
    }

    #[test]
    fn snowflake_of_metric_revalidates_as_metric(m in arb_space(6), s in 0.05f64..1.0) {
        let snow = m.snowflake(s).unwrap();
        // Exhaustive triple check through the validator.
        let again = FiniteMetricSpace::validate(&snow.rows(), Validity::Metric).unwrap();
        prop_assert!(again.validity() >= Validity::Metric);
    }

    #[test]
    fn identity_distortion_is_exactly_one(m in arb_space(5)) {
        let rep = distortion(&PointMap::identity(&m)).unwrap();
        prop_assert_eq!(rep.a, ExtReal::Finite(1.0));
        prop_assert_eq!(rep.b, ExtReal::Finite(1.0));
    }

    #[test]
    fn injective_maps_have_positive_compression(
        m in arb_space(6),
        perm in arb_permutation(6),
        s in 0.1f64..1.0,
    ) {
        let target = m.snowflake(s).unwrap();
        let map = PointMap::new(m.clone(), target, perm).unwrap();
        let thresholds = [0.5, 1.0, m.max_distance()];
        let prof = moduli(&map, &thresholds).unwrap();
        for rho in &prof.rho {
            match rho {
                ExtReal::Finite(v) => prop_assert!(*v > 0.0),
                ExtReal::PosInf => {}
            }
        }
        for omega in &prof.omega {
            prop_assert!(omega.is_finite());
        }
    }

    #[test]
    fn moduli_match_independent_double_loop(
        m in arb_space(5),
        perm in arb_permutation(5),
        s in 0.1f64..1.0,
    ) {
        let target = m.snowflake(s).unwrap();
        let map = PointMap::new(m.clone(), target.clone(), perm.clone()).unwrap();
        let thresholds = [0.25, 1.0, 1.5, 3.0];
        let prof = moduli(&map, &thresholds).unwrap();
        for (ti, &t) in thresholds.iter().enumerate() {
            // Oracle: plain double loop over ordered pairs.
            let mut inf: Option<f64> = None;
            let mut sup: f64 = 0.0;
            for i in 0..5 {
                for j in 0..5 {
                    if i == j {
                        continue;
                    }
                    let d1 = m.dist(i, j);
                    let d2 = target.dist(perm[i], perm[j]);
                    if d1 >= t {
                        inf = Some(inf.map_or(d2, |v: f64| v.min(d2)));
                    }
                    if d1 <= t {
                        sup = sup.max(d2);
                    }
                }
            }
            match (prof.rho[ti], inf) {
                (ExtReal::Finite(a), Some(b)) => prop_assert_eq!(a, b),
                (ExtReal::PosInf, None) => {}
                other => prop_assert!(false, "rho mismatch: {:?}", other),
            }
            prop_assert_eq!(prof.omega[ti], sup);
        }
    }

    #[test]
    fn moduli_are_monotone_and_interleaved(
        m in arb_space(6),
        s in 0.1f64..1.0,
    ) {
        let map = PointMap::snowflake_map(&m, s).unwrap();
        let thresholds = [0.5, 1.0, 1.5, 2.0, 4.0];
        let prof = moduli(&map, &thresholds).unwrap();
        for w in prof.omega.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for w in prof.rho.windows(2) {
            if let (ExtReal::Finite(a), ExtReal::Finite(b)) = (w[0], w[1]) {
                prop_assert!(a <= b);
            }
        }
        // rho(t) <= omega(t') whenever some pair distance lies in [t, t'].
        for (i, &t) in thresholds.iter().enumerate() {
            for (j, &t2) in thresholds.iter().enumerate().skip(i) {
                let some_pair_inside = (0..m.n()).any(|a| {
                    (0..m.n()).any(|b| a != b && m.dist(a, b) >= t && m.dist(a, b) <= t2)
                });
                if some_pair_inside {
                    if let ExtReal::Finite(r) = prof.rho[i] {
                        prop_assert!(r <= prof.omega[j] + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn distortion_is_submultiplicative_under_composition(
        m in arb_space(5),
        perm1 in arb_permutation(5),
        perm2 in arb_permutation(5),
        s1 in 0.2f64..1.0,
        s2 in 0.2f64..1.0,
    ) {
        let mid = m.snowflake(s1).unwrap();
        let last = mid.snowflake(s2).unwrap();
        let f = PointMap::new(m, mid.clone(), perm1).unwrap();
        let g = PointMap::new(mid, last, perm2).unwrap();
        let gf = PointMap::compose(&f, &g).unwrap();
        let (pf, pg, pgf) = (
            distortion(&f).unwrap().product.to_f64(),
            distortion(&g).unwrap().product.to_f64(),
            distortion(&gf).unwrap().product.to_f64(),
        );
        prop_assert!(pgf <= pf * pg * (1.0 + 1e-12));
    }
}
