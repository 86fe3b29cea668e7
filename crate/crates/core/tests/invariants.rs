//! Cross-module invariants and property checks that do not belong to a single
//! unit-test block.

mod common;

use common::{cosh_map, generator_pool, sym};
use cosdyn::classify::{classify, ClassifierConfig, Verdict};
use cosdyn::map::CosineMap;
use cosdyn::rays::{sample_tail, tail_point};
use cosdyn::symbolic::{tail_threshold, ExternalAddress, PartitionConfig, Side};
use cosdyn::tower;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

#[test]
fn shared_types_are_send_and_sync() {
    fn check<T: Send + Sync>() {}
    check::<CosineMap>();
    check::<PartitionConfig>();
    check::<ExternalAddress>();
    check::<cosdyn::classify::ClassifierConfig>();
    check::<cosdyn::rays::Ray>();
    check::<cosdyn::PotentialTower>();
}

#[test]
fn shared_address_under_parallel_ray_evaluation() {
    // one address shared across threads; the symbol cache grows idempotently
    use rayon::prelude::*;
    let map = cosh_map();
    let addr = ExternalAddress::periodic(
        vec![sym(2, Side::R)],
        vec![sym(0, Side::R), sym(1, Side::L)],
    )
    .unwrap();
    let t0 = tail_threshold(&map, &addr);
    let points: Vec<_> = (0..64)
        .into_par_iter()
        .map(|i| {
            let t = t0 + 0.25 * i as f64;
            tail_point(&map, &addr, t, 1e-12).unwrap().z
        })
        .collect();
    // same values as the serial pass
    for (i, z) in points.iter().enumerate() {
        let t = t0 + 0.25 * i as f64;
        let serial = tail_point(&map, &addr, t, 1e-12).unwrap().z;
        assert_eq!(*z, serial);
    }
}

#[test]
fn conjugation_symmetry_for_real_parameters() {
    let map = cosh_map();
    let mut rng = rand::rngs::StdRng::seed_from_u64(41);
    for _ in 0..10_000 {
        let z = Complex64::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
        let a = map.eval(z.conj()).unwrap();
        let b = map.eval(z).unwrap().conj();
        assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()), "at {z}");
    }
}

#[test]
fn standard_estimate_bounds_the_image() {
    let map = CosineMap::new(Complex64::new(1.2, -0.4), Complex64::new(0.3, 0.9)).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(42);
    for _ in 0..10_000 {
        let z = Complex64::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0));
        let img = map.eval(z).unwrap().norm();
        let bound = map.a.norm() * z.re.exp() + map.b.norm() * (-z.re).exp();
        assert!(img <= bound * (1.0 + 1e-12), "at {z}: {img} vs {bound}");
    }
}

#[test]
fn orbits_are_exponentially_bounded() {
    // with delta chosen so |a| + |b| <= e^delta - (delta + 1), every orbit
    // obeys 2 pi |s_k| < F^{k-1}(|z_1| + delta) + 3 pi - delta
    let map = cosh_map();
    let cfg = PartitionConfig::new(map);
    let mut delta = 1.2f64;
    while delta.exp() - (delta + 1.0) < map.a.norm() + map.b.norm() {
        delta += 0.05;
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(43);
    let mut checked = 0;
    while checked < 400 {
        let z = Complex64::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let oa = cfg.address_of_orbit(z, 16);
        if oa.symbols.is_empty() {
            continue;
        }
        let mut pot = z.norm() + delta; // F^{k-1}(|z_1| + delta)
        for (i, s) in oa.symbols.iter().enumerate() {
            if i > 0 {
                pot = pot.exp_m1();
                if !pot.is_finite() {
                    break;
                }
            }
            let lhs = std::f64::consts::TAU * s.magnitude() as f64;
            assert!(
                lhs < pot + 3.0 * std::f64::consts::PI - delta,
                "symbol {} of {z}: {lhs} vs {pot}",
                i + 1
            );
        }
        checked += 1;
    }
}

#[test]
fn minimal_potential_commutes_with_shift() {
    for addr in generator_pool() {
        let direct = addr.shift().unwrap().minimal_potential();
        let through_f = addr.minimal_potential().exp_m1();
        assert_eq!(direct, through_f, "for {}", addr.to_json());
    }
}

#[test]
fn ray_samples_are_injective_and_ordered() {
    let map = cosh_map();
    for addr in generator_pool().iter().take(6) {
        let t0 = tail_threshold(&map, addr);
        let ray = sample_tail(&map, addr, t0, t0 + 9.0, 48, 1e-12).unwrap();
        assert!(ray.is_injective(1e-9), "{}", addr.to_json());
        assert!(ray.samples.windows(2).all(|w| w[1].t > w[0].t));
    }
}

#[test]
fn classification_is_monotone_along_rays() {
    let map = cosh_map();
    let cfg = ClassifierConfig::new(map, 24, 1e-9);
    let addr = &generator_pool()[0];
    let t0 = tail_threshold(&map, addr);
    let mut last = f64::NEG_INFINITY;
    for i in 0..12 {
        let t = t0 + 0.75 * i as f64;
        let z = tail_point(&map, addr, t, 1e-12).unwrap().z;
        match classify(&cfg, z).verdict {
            Verdict::OnRay { t_hat, .. } | Verdict::RayEndpoint { t_hat, .. } => {
                assert!(t_hat > last, "monotone: {t_hat} after {last}");
                last = t_hat;
            }
            v => panic!("{v:?}"),
        }
    }
}

#[test]
fn escape_real_part_law_along_on_ray_orbits() {
    // along an escaping ray orbit |Re| explodes while |Im| stays pinned near
    // the symbol heights, so |Im| / |Re| collapses
    let map = cosh_map();
    let addr = ExternalAddress::periodic(vec![], vec![sym(1, Side::R)]).unwrap();
    let t0 = tail_threshold(&map, &addr);
    // keep F(t) under the overflow cap so the orbit has three entries
    let mut z = tail_point(&map, &addr, t0 + 0.5, 1e-12).unwrap().z;
    let mut res = vec![z.re.abs()];
    let mut ratios = vec![z.im.abs() / z.re.abs()];
    while let Ok(next) = map.eval(z) {
        z = next;
        res.push(z.re.abs());
        ratios.push(z.im.abs() / z.re.abs());
    }
    assert!(res.len() >= 3);
    assert!(res.windows(2).all(|w| w[1] > w[0]), "|Re| grows: {res:?}");
    assert!(
        ratios.windows(2).all(|w| w[1] < w[0]),
        "|Im|/|Re| falls: {ratios:?}"
    );
}

#[test]
fn downward_cut_orientation_works_end_to_end() {
    // a parameter pair whose cut points downward (Im v1 < 0) drives the
    // mirrored branches of the partition frame and the escape-path sweep
    let a = Complex64::new(0.5, 0.0);
    let b = Complex64::new(0.412_607_038_9, -0.282_321_236_7); // 0.5 e^{-0.6 i}
    let map = CosineMap::new(a, b).unwrap();
    assert!(map.v1.im < 0.0);
    let cfg = PartitionConfig::new(map);
    assert_eq!(
        cfg.strip_of(Complex64::new(10.0, 0.0)).unwrap(),
        sym(0, Side::R)
    );
    assert_eq!(
        cfg.strip_of(Complex64::new(-10.0, 0.0)).unwrap(),
        sym(0, Side::L)
    );
    // continuation-free labels agree with the lifted path everywhere
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 200 {
        let z = Complex64::new(rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0));
        let (quick, lifted) = match (cfg.strip_of(z), cfg.strip_of_via_lift(z)) {
            (Ok(q), Ok(l)) => (q, l),
            _ => continue,
        };
        assert_eq!(quick, lifted, "at {z}");
        checked += 1;
    }
    // rays still satisfy the functional equation and the asymptote bound
    for (addr, half_turn) in [
        (
            ExternalAddress::periodic(vec![], vec![sym(0, Side::R)]).unwrap(),
            false,
        ),
        (
            ExternalAddress::periodic(vec![], vec![sym(0, Side::L)]).unwrap(),
            true,
        ),
    ] {
        let t0 = tail_threshold(&map, &addr);
        for t in [t0 + 0.5, t0 + 4.0] {
            let z = tail_point(&map, &addr, t, 1e-12).unwrap().z;
            let lhs = map.eval(z).unwrap();
            let rhs = tail_point(&map, &addr.shift().unwrap(), t.exp_m1(), 1e-12)
                .unwrap()
                .z;
            assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()));
            let asym = cosdyn::rays::tail_asymptote(&map, &addr, t).unwrap();
            assert!((z - asym).norm() <= map.c1() * (-t).exp());
            if half_turn {
                // left-side cycle: the tail height sits a half turn off beta
                assert!(
                    (z.im - (map.beta.im - std::f64::consts::PI)).abs() < 0.2,
                    "z = {z}"
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn f_inv_is_a_left_inverse(t in 0.0f64..700.0) {
        let back = tower::f_inv(tower::f(t).unwrap()).unwrap();
        prop_assert!((back - t).abs() <= 1e-12);
    }

    #[test]
    fn tower_compare_is_consistent_with_values(
        base_a in 0.0f64..60.0,
        base_b in 0.0f64..60.0,
        lvl_a in 0u32..3,
        lvl_b in 0u32..3,
    ) {
        let ta = cosdyn::PotentialTower::from_parts(lvl_a, base_a).unwrap();
        let tb = cosdyn::PotentialTower::from_parts(lvl_b, base_b).unwrap();
        let (va, vb) = (ta.value(), tb.value());
        if va.is_finite() && vb.is_finite() && (va - vb).abs() > 1e-9 * (1.0 + va.abs()) {
            let expect = va.partial_cmp(&vb).unwrap();
            prop_assert_eq!(ta.compare(&tb), expect);
        }
    }

    #[test]
    fn generator_json_round_trips(
        pre_n in prop::collection::vec(-40i64..40, 0..3),
        per_n in prop::collection::vec(-40i64..40, 1..4),
        flip in any::<bool>(),
    ) {
        let side = |f: bool| if f { Side::L } else { Side::R };
        let pre: Vec<_> = pre_n.iter().map(|&n| sym(n, side(flip))).collect();
        let per: Vec<_> = per_n.iter().map(|&n| sym(n, side(!flip))).collect();
        let addr = ExternalAddress::periodic(pre, per).unwrap();
        let back = ExternalAddress::from_json(&addr.to_json()).unwrap();
        prop_assert_eq!(back, addr);
    }

    #[test]
    fn strip_round_trip_under_inverse_branch(
        re in -20.0f64..20.0,
        im in -20.0f64..20.0,
        n in -3i64..=3,
        left in any::<bool>(),
    ) {
        let map = cosh_map();
        let cfg = PartitionConfig::new(map);
        let w = Complex64::new(re, im);
        prop_assume!(!cfg.in_a(w).contains);
        prop_assume!(w.norm() > 0.5);
        let s = sym(n, if left { Side::L } else { Side::R });
        let z = cfg.inverse_branch(s, w).unwrap();
        prop_assert!((map.eval(z).unwrap() - w).norm() <= 1e-10 * (1.0 + w.norm()));
        prop_assert_eq!(cfg.strip_of(z).unwrap(), s);
    }
}
