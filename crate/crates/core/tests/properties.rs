mod common;

use common::{brute_force_distance, dot, fd_gradient, norm, random_expr_text, rank};
use optcert::catalog::{catalog_entries, entry};
use optcert::cone::{caratheodory_reduce, farkas_decide, ConeSpec, FarkasCertificate};
use optcert::cq::{check_licq, in_linearized_cone, linearized_cone};
use optcert::duality::{dual_objective, DualOptions};
use optcert::kkt::{certify_first_order, KktReport, Tolerances};
use optcert::problem::{active_set, lagrangian, lagrangian_grad};
use optcert::tangent::sample_linearized_directions;
use optcert::{parse, Multipliers, Problem};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vector(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), x in vector(3, 2.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = random_expr_text(&mut rng, 3, 4);
        let e = parse(&text, 3).unwrap();
        if let (Ok(ad), Some(fd)) = (e.grad(&x), fd_gradient(&e, &x)) {
            let scale = ad.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            for (a, f) in ad.iter().zip(&fd) {
                prop_assert!((a - f).abs() <= 1e-5 * scale, "{text} at {x:?}: {ad:?} vs {fd:?}");
            }
        }
    }

    #[test]
    fn printed_expressions_reparse_identically(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = parse(&random_expr_text(&mut rng, 3, 5), 3).unwrap();
        prop_assert_eq!(parse(&e.to_string(), 3).unwrap(), e);
    }

    #[test]
    fn affine_forms_reproduce_values_and_gradients(
        a in vector(3, 5.0),
        b in -5.0f64..5.0,
        s in 0.1f64..4.0,
        x in vector(3, 10.0),
    ) {
        // a nonlinear-looking spelling of <a, x> + b
        let text = format!(
            "{s} * (({} * x1 + {} * x2) / {s} - -({} * x3 + {b}) / {s}) + 0 * sin(1)",
            a[0], a[1], a[2]
        );
        let e = parse(&text, 3).unwrap();
        let f = e.as_affine(3).unwrap();
        let scale = 1.0 + norm(&a) * norm(&x) + b.abs();
        prop_assert!((f.eval(&x) - e.eval(&x).unwrap()).abs() <= 1e-12 * scale);
        for (got, want) in f.a.iter().zip(&a) {
            prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn active_set_grows_with_tolerance(x in vector(2, 1e-3), t1 in 1e-9f64..1e-3, t2 in 1e-9f64..1e-3) {
        let p = entry("lp-corner-redundant").unwrap().problem;
        let x: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let small = active_set(&p, &x, lo).unwrap();
        let large = active_set(&p, &x, hi).unwrap();
        prop_assert!(small.active_ineq_ids.iter().all(|id| large.active_ineq_ids.contains(id)));
    }

    #[test]
    fn lagrangian_gradient_matches_finite_differences(k in 0usize..9, x in vector(2, 1.5), m in vector(3, 3.0)) {
        let e = &catalog_entries()[k];
        let p = &e.problem;
        let x = &x[..p.n()];
        let mut mult = Multipliers::zeros(p);
        for (slot, v) in mult.lambda.values_mut().chain(mult.mu.values_mut()).zip(&m) {
            *slot = *v;
        }
        let g = lagrangian_grad(p, x, &mult).unwrap();
        for i in 0..p.n() {
            let h = 1e-6;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (lagrangian(p, &xp, &mult).unwrap() - lagrangian(p, &xm, &mult).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()));
        }
    }

    #[test]
    fn farkas_branch_matches_distance(
        n in 1usize..=3,
        nonneg in prop::collection::vec(vector(3, 1.0), 0..=4),
        free in prop::collection::vec(vector(3, 1.0), 0..=1),
        g in vector(3, 1.0),
    ) {
        let cut = |v: &Vec<f64>| v[..n].to_vec();
        let nonneg: Vec<Vec<f64>> = nonneg.iter().map(cut).collect();
        let free: Vec<Vec<f64>> = free.iter().map(cut).collect();
        let g = cut(&g);
        let tol = 1e-8;
        let k = ConeSpec::new(n, free.clone(), nonneg.clone()).unwrap();
        let cert = farkas_decide(&k, &g, tol).unwrap();
        prop_assert!(cert.verify(&k, &g, tol).is_ok());
        let mut all = nonneg;
        all.extend(free.iter().cloned());
        all.extend(free.iter().map(|c| c.iter().map(|v| -v).collect::<Vec<_>>()));
        let dist = brute_force_distance(&all, &g);
        match cert {
            FarkasCertificate::Membership { .. } => prop_assert!(dist <= 2.0 * tol),
            FarkasCertificate::Separation { d, g_dot_d, .. } => {
                prop_assert!(dist >= 0.5 * tol);
                // the separation depth is the distance to the cone
                prop_assert!((-g_dot_d - dist).abs() <= 1e-8 * (1.0 + norm(&g)));
                prop_assert!((dot(&g, &d) - g_dot_d).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reduction_keeps_the_point_with_independent_support(
        gens in prop::collection::vec(vector(4, 1.0), 1..=12),
        coeffs in prop::collection::vec(0.0f64..2.0, 12),
    ) {
        let n = 4;
        let coeffs = &coeffs[..gens.len()];
        let x: Vec<f64> = (0..n).map(|r| gens.iter().zip(coeffs).map(|(g, c)| c * g[r]).sum()).collect();
        let red = caratheodory_reduce(&gens, coeffs, 1e-10).unwrap();
        let cols: Vec<Vec<f64>> = red.indices.iter().map(|&j| gens[j].clone()).collect();
        prop_assert!(red.indices.len() <= n);
        prop_assert_eq!(rank(&cols, n), cols.len());
        prop_assert!(red.coeffs.iter().all(|&c| c >= 0.0));
        let back = red.reconstruct(&gens, n);
        prop_assert!(norm(&back.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 1e-8 * (1.0 + norm(&x)));
    }

    #[test]
    fn licq_ignores_constraint_scaling(s1 in -3.0f64..3.0, s2 in -3.0f64..3.0, x2 in -0.9f64..0.9) {
        let (a, b) = (10f64.powf(s1), 10f64.powf(s2));
        // both constraints active at (sqrt(1 - x2^2), x2)
        let p = Problem::parse(
            "scaled",
            2,
            "x1",
            &[(1, &format!("{a} * (x1^2 + x2^2 - 1)"))],
            &[(2, &format!("{b} * (x2 - {x2})"))],
        )
        .unwrap();
        let x = [(1.0 - x2 * x2).sqrt(), x2];
        prop_assert!(check_licq(&p, &x, 1e-6, 1e-10).unwrap().licq);
    }

    #[test]
    fn sampled_directions_lie_in_the_linearized_cone(k in 0usize..9, seed in any::<u64>()) {
        let e = &catalog_entries()[k];
        let lc = linearized_cone(&e.problem, &e.known_point, 1e-6).unwrap();
        for d in sample_linearized_directions(&lc, 8, seed).unwrap() {
            prop_assert!(in_linearized_cone(&lc, &d, 1e-8));
            prop_assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&norm(&d)));
        }
    }

    #[test]
    fn weak_duality_on_the_scalar_bound(mu in 0.0f64..10.0, x in 1.0f64..5.0) {
        let p = entry("scalar-bound").unwrap().problem;
        let m = Multipliers::from_pairs(&p, &[(1, mu)]).unwrap();
        let q = dual_objective(&p, &m, &DualOptions::default()).unwrap().value.finite().unwrap();
        prop_assert!(q <= x * x + 1e-9);
    }

    #[test]
    fn reports_round_trip_through_json(k in 0usize..9, shift in vector(2, 0.5)) {
        let e = &catalog_entries()[k];
        let x: Vec<f64> = e.known_point.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let r = certify_first_order(&e.problem, &x, &Tolerances::default()).unwrap();
        prop_assert_eq!(KktReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn problems_round_trip_through_json(k in 0usize..9) {
        let p = &catalog_entries()[k].problem;
        prop_assert_eq!(&Problem::from_json(&p.to_json()).unwrap(), p);
    }
}
