//! Invariants as property tests, checked against the oracles in `common`.

mod common;

use hflow::flow::{prox, Builtin};
use hflow::ks::KsEnergy;
use hflow::maps::{iota, Domain, L2Map, L2Space};
use hflow::tangent::{norm, TangentCone};
use hflow::{Direction, MetricSpace, Space, SpacePoint};
use proptest::prelude::*;

use common::*;

fn euclid2() -> impl Strategy<Value = SpacePoint> {
    prop::array::uniform2(-5.0..5.0f64).prop_map(|c| SpacePoint::euclid(&c))
}

fn spider_point(rays: usize) -> impl Strategy<Value = SpacePoint> {
    (1..=rays, 0.0..5.0f64).prop_map(|(r, t)| SpacePoint::spider(r, t))
}

fn hyperbolic() -> impl Strategy<Value = SpacePoint> {
    (-6.0..6.0f64, -6.0..6.0f64).prop_map(|(a, b)| SpacePoint::hyperbolic(a, b))
}

fn any_case() -> impl Strategy<Value = (Space, [SpacePoint; 3])> {
    prop_oneof![
        prop::array::uniform3(euclid2()).prop_map(|p| (Space::euclidean(2), p)),
        prop::array::uniform3(spider_point(4)).prop_map(|p| (Space::spider(4), p)),
        prop::array::uniform3(hyperbolic()).prop_map(|p| (Space::Hyperbolic2, p)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn comparison_inequality_holds((s, [a, b, c]) in any_case(), t in 0.0..=1.0f64) {
        let lib = s.cat_defect(&a, &b, &c, t).unwrap();
        let oracle = cat0_defect(&s, &a, &b, &c, t);
        prop_assert!(lib >= -1e-9, "defect {lib}");
        prop_assert!((lib - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()));
    }

    #[test]
    fn distance_is_a_metric((s, [a, b, c]) in any_case()) {
        let d = |p: &SpacePoint, q: &SpacePoint| s.distance(p, q);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12 * (1.0 + d(&a, &b)));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
        prop_assert!(d(&a, &a) <= 1e-7);
        prop_assert!((d(&a, &b) - dist(&s, &a, &b)).abs() <= 1e-9 * (1.0 + d(&a, &b)));
    }

    #[test]
    fn geodesics_are_constant_speed((s, [a, b, _]) in any_case(), t in 0.0..=1.0f64) {
        let g = s.geodesic_point(&a, &b, t).unwrap();
        let dab = s.distance(&a, &b);
        prop_assert!((s.distance(&a, &g) - t * dab).abs() <= 1e-8 * (1.0 + dab));
        prop_assert!((s.distance(&g, &b) - (1.0 - t) * dab).abs() <= 1e-8 * (1.0 + dab));
        prop_assert!(dist(&s, &g, &geod(&s, &a, &b, t)) <= 1e-8 * (1.0 + dab));
    }

    #[test]
    fn half_squared_distance_prox_is_a_geodesic_point(
        (s, [y, z, _]) in any_case(),
        tau in 1e-3..10.0f64,
    ) {
        // argmin ½d²(·, z) + d²(·, y)/(2τ) sits at fraction τ/(1+τ) from y to z
        let e = Builtin::half_squared_distance(s.clone(), z.clone()).unwrap();
        let p = prox(&e, tau, &y).unwrap();
        let want = geod(&s, &y, &z, tau / (1.0 + tau));
        prop_assert!(s.distance(&p, &want) <= 1e-8 * (1.0 + s.distance(&y, &z)));
    }

    #[test]
    fn cone_distance_matches_the_model_chart(
        (s, [base, p, q]) in any_case(),
        alpha in 0.0..3.0f64,
        beta in 0.0..3.0f64,
    ) {
        let v = Direction::toward(base.clone(), p.clone(), alpha).unwrap();
        let w = Direction::toward(base.clone(), q.clone(), beta).unwrap();
        let want = cone_dist(&log(&s, &base, &p, alpha), &log(&s, &base, &q, beta));
        let got = s.cone_distance(&v, &w).unwrap().value;
        prop_assert!((got - want).abs() <= 1e-8 * (1.0 + want), "{got} vs {want}");
        // Cauchy–Schwarz
        let (nv, nw) = (norm(&s, &v), norm(&s, &w));
        let ip = 0.5 * (nv * nv + nw * nw - got * got);
        prop_assert!(ip.abs() <= nv * nw + 1e-8 * (1.0 + nv * nw));
    }

    #[test]
    fn scaling_is_positively_homogeneous(
        (s, [base, p, q]) in any_case(),
        lambda in 0.0..4.0f64,
    ) {
        let v = Direction::toward(base.clone(), p, 1.0).unwrap();
        let w = Direction::toward(base, q, 0.5).unwrap();
        let d = s.cone_distance(&v, &w).unwrap().value;
        let scaled = s
            .cone_distance(&v.scale(lambda).unwrap(), &w.scale(lambda).unwrap())
            .unwrap()
            .value;
        prop_assert!((scaled - lambda * d).abs() <= 1e-8 * (1.0 + lambda * d));
    }

    #[test]
    fn ks_energy_matches_its_definition(seed in any::<u64>(), nodes in 3usize..15) {
        let mut r = rng(seed);
        let s = Space::spider(3);
        let d = domain(&mut r, nodes, vec![]);
        let u = map(&mut r, &d, &s);
        let k = KsEnergy::new(d.clone(), s.clone(), None).unwrap();
        let want = ks_energy(&d, &s, &u);
        prop_assert!(k.energy(&u) >= 0.0);
        prop_assert!((k.energy(&u) - want).abs() <= 1e-12 * (1.0 + want));
        let density: f64 = k
            .density(&u)
            .iter()
            .zip(d.measure())
            .map(|(e, m)| 0.5 * m * e)
            .sum();
        prop_assert!((density - want).abs() <= 1e-12 * (1.0 + want));
    }

    #[test]
    fn l2_distance_is_the_weighted_root_sum(seed in any::<u64>(), nodes in 1usize..12) {
        let mut r = rng(seed);
        let s = Space::Hyperbolic2;
        let d = domain(&mut r, nodes.max(2), vec![]);
        let (u, v) = (map(&mut r, &d, &s), map(&mut r, &d, &s));
        let l2 = L2Space::new(d.clone(), s.clone()).unwrap();
        let want = l2_dist(&d, &s, &u, &v);
        prop_assert!((l2.distance(&u, &v) - want).abs() <= 1e-10 * (1.0 + want));
        // ι preserves the norm of a germ of an L² geodesic
        let dir = Direction::toward(u.clone(), v.clone(), 0.7).unwrap();
        let sec = iota(&dir).unwrap();
        prop_assert!((sec.l2_norm(&d, &s) - 0.7 * want).abs() <= 1e-8 * (1.0 + want));
    }
}

#[test]
fn path_domain_uses_lumped_measure() {
    let d = Domain::path(5, 0.25, vec![0, 4]).unwrap();
    assert_eq!(d.measure(), &[0.125, 0.25, 0.25, 0.25, 0.125]);
    let u = L2Map((0..5).map(|i| SpacePoint::euclid(&[i as f64])).collect());
    let k = KsEnergy::new(d.clone(), Space::euclidean(1), None).unwrap();
    // a_xy = w/(2r) = 2 on each of the 4 unit-increment edges
    assert!((k.energy(&u) - 8.0).abs() < 1e-12);
    assert!((k.energy(&u) - ks_energy(&d, &Space::euclidean(1), &u)).abs() < 1e-12);
}
