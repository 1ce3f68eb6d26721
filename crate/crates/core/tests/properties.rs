//! Property tests over randomly generated expressions and Grassmann values.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gauge_ehrenfest::canon::{canonicalize, ConstraintSet};
use gauge_ehrenfest::expr::Expression;
use gauge_ehrenfest::jet::{
    assignments, evaluate_at, numeric_identity_check, random_expression_source, sample_jet_point, sort_generators,
    GrassmannValue, GroupName,
};
use gauge_ehrenfest::suite;

fn random_expr(seed: u64) -> Expression {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = random_expression_source(&mut rng);
    let cx = suite::context();
    let e = cx.parse(&src).unwrap_or_else(|err| panic!("`{src}`: {err}"));
    cx.defs.substitute(&e)
}

/// A random expression with no free indices.
fn random_scalar(seed: u64) -> Expression {
    (0..).map(|k| random_expr(seed.wrapping_add(k * 7919))).find(|e| e.signature().is_empty()).unwrap()
}

fn close(a: &GrassmannValue, b: &GrassmannValue, scale: f64) -> bool {
    (a - b).max_abs() <= 1e-9 * scale.max(1.0)
}

fn group(su3: bool) -> GroupName {
    if su3 {
        GroupName::Su3
    } else {
        GroupName::Su2
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn printed_form_parses_back(seed in any::<u64>()) {
        let c = canonicalize(&random_expr(seed));
        let text = c.to_string();
        let back = suite::context().parse(&text).unwrap_or_else(|err| panic!("`{text}`: {err}"));
        prop_assert_eq!(canonicalize(&back), c);
    }

    #[test]
    fn canonicalize_is_idempotent(seed in any::<u64>()) {
        let c = canonicalize(&random_expr(seed));
        prop_assert_eq!(canonicalize(&c), c.clone());
    }

    #[test]
    fn canonical_form_evaluates_the_same(seed in any::<u64>(), point in any::<u64>(), su3 in any::<bool>()) {
        let e = random_expr(seed);
        let c = canonicalize(&e);
        let g = group(su3).data();
        let p = sample_jet_point(point, &g, &ConstraintSet::none()).unwrap();
        for asg in assignments(&e, g.dim) {
            let a = evaluate_at(&e, &p, &g, &asg).unwrap();
            let b = evaluate_at(&c, &p, &g, &asg).unwrap();
            prop_assert!(close(&a, &b, a.max_abs()), "{} vs {} at {:?}", e, c, asg);
        }
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(s1 in any::<u64>(), s2 in any::<u64>(), point in any::<u64>()) {
        let (x, y) = (random_scalar(s1), random_scalar(s2));
        let g = GroupName::Su2.data();
        let p = sample_jet_point(point, &g, &ConstraintSet::none()).unwrap();
        let ev = |e: &Expression| evaluate_at(e, &p, &g, &Vec::new()).unwrap();
        let (vx, vy) = (ev(&x), ev(&y));
        let sum = ev(&x.add(&y));
        prop_assert!(close(&sum, &(&vx + &vy), vx.max_abs() + vy.max_abs()));
        let prod = ev(&x.multiply(&y));
        let expect = &vx * &vy;
        prop_assert!(close(&prod, &expect, vx.max_abs() * vy.max_abs()), "{} * {}", x, y);
    }

    #[test]
    fn generators_anticommute(i in 0u32..64, j in 0u32..64, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let (x, y) = (GrassmannValue::generator(i, a), GrassmannValue::generator(j, b));
        let xy = &x * &y;
        let yx = &y * &x;
        prop_assert!((&xy + &yx).max_abs() < 1e-15);
        if i == j {
            prop_assert_eq!(xy.max_abs(), 0.0);
        }
    }

    #[test]
    fn products_are_associative(gens in prop::collection::vec((0u32..8, -1.0f64..1.0), 9)) {
        let vals: Vec<GrassmannValue> = gens
            .chunks(3)
            .map(|c| {
                let mut v = GrassmannValue::scalar(Complex64::new(0.5, 0.0));
                for &(g, x) in c {
                    v = &v + &GrassmannValue::generator(g, x);
                }
                v
            })
            .collect();
        let (a, b) = (&vals[0], &vals[1]);
        let c = &vals[2];
        let l = &(a * b) * c;
        let r = a * &(b * c);
        prop_assert!((&l - &r).max_abs() < 1e-12);
    }

    #[test]
    fn sorting_sign_is_permutation_parity(mut v in prop::collection::vec(0u32..1000, 0..12)) {
        let mut distinct = v.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let original = v.clone();
        match sort_generators(&mut v) {
            None => prop_assert!(distinct.len() < original.len()),
            Some(sign) => {
                let inversions = (0..original.len())
                    .flat_map(|i| (i + 1..original.len()).map(move |j| (i, j)))
                    .filter(|&(i, j)| original[i] > original[j])
                    .count();
                prop_assert_eq!(sign, if inversions % 2 == 0 { 1.0 } else { -1.0 });
                prop_assert_eq!(v, distinct);
            }
        }
    }

    #[test]
    fn numeric_reports_are_deterministic(seed in any::<u64>(), run in any::<u64>()) {
        let e = random_expr(seed);
        let g = GroupName::Su2.data();
        let a = numeric_identity_check(&e, &g, 3, run, 1e-10, &ConstraintSet::none()).unwrap();
        let b = numeric_identity_check(&e, &g, 3, run, 1e-10, &ConstraintSet::none()).unwrap();
        prop_assert_eq!(a, b);
    }
}
